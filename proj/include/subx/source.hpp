#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitstring.hpp"
#include "rational.hpp"
#include "rng.hpp"
#include "tree_node.hpp"

namespace subx {

using json = nlohmann::json;

/// Exactly represented probability distribution over {0,1}^n. Masses are
/// exact rationals; a source is "exact" when they sum to 1 exactly, which
/// holds for every dyadic input and everything derived from one. Float
/// inputs are accepted within a 1e-9 normalization tolerance.
class ExplicitSource {
public:
    using Atom = std::pair<BitString, Rational>;

    ExplicitSource(int n, std::vector<Atom> atoms) : n_(n), atoms_(std::move(atoms)) {
        if (n_ <= 0) throw std::invalid_argument("source: n must be positive");
        if (atoms_.empty()) throw std::invalid_argument("source: empty support");
        std::sort(atoms_.begin(), atoms_.end(),
                  [](const Atom& a, const Atom& b) { return a.first < b.first; });
        Rational sum = 0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (atoms_[i].first.size() != n_) throw std::invalid_argument("source: atom length mismatch");
            if (atoms_[i].second <= 0) throw std::invalid_argument("source: nonpositive mass");
            if (i > 0 && atoms_[i].first == atoms_[i - 1].first)
                throw std::invalid_argument("source: duplicate atom");
            sum += atoms_[i].second;
        }
        exact_ = (sum == 1);
        if (!exact_ && std::abs(to_double(sum) - 1.0) > 1e-9)
            throw std::invalid_argument("source: masses do not sum to 1");
    }

    static ExplicitSource flat(const std::vector<BitString>& support) {
        if (support.empty()) throw std::invalid_argument("flat source: empty support");
        std::set<BitString> dedup(support.begin(), support.end());
        const Rational p(1, static_cast<long>(dedup.size()));
        std::vector<Atom> atoms;
        atoms.reserve(dedup.size());
        for (const auto& s : dedup) atoms.emplace_back(s, p);
        return ExplicitSource(support.front().size(), std::move(atoms));
    }

    static ExplicitSource point_mass(const BitString& s) { return flat({s}); }

    static ExplicitSource uniform(int n) {
        if (n > 20) throw std::invalid_argument("uniform source: too large to materialize");
        std::vector<BitString> sup;
        sup.reserve(1u << n);
        for (std::uint64_t v = 0; v < (1ull << n); ++v) sup.push_back(BitString::from_uint(v, n));
        return flat(sup);
    }

    /// Independent product on concatenated strings.
    static ExplicitSource product(const ExplicitSource& a, const ExplicitSource& b) {
        std::vector<Atom> atoms;
        atoms.reserve(a.atoms_.size() * b.atoms_.size());
        for (const auto& [sa, pa] : a.atoms_)
            for (const auto& [sb, pb] : b.atoms_)
                atoms.emplace_back(sa.concat(sb), pa * pb);
        return ExplicitSource(a.n_ + b.n_, std::move(atoms));
    }

    int n() const { return n_; }
    bool exact() const { return exact_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t support_size() const { return atoms_.size(); }

    Rational mass_of(const BitString& s) const {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(), s,
                                   [](const Atom& a, const BitString& key) { return a.first < key; });
        if (it != atoms_.end() && it->first == s) return it->second;
        return Rational(0);
    }

    Rational max_mass() const {
        Rational m = 0;
        for (const auto& [s, p] : atoms_)
            if (p > m) m = p;
        return m;
    }

    BitString sample(SplitRng& rng) const {
        // exact inverse-CDF draw over the sorted support
        const Rational u(BigInt(rng.next_u64()), BigInt(1) << 64);
        Rational acc = 0;
        for (const auto& [s, p] : atoms_) {
            acc += p;
            if (u < acc) return s;
        }
        return atoms_.back().first;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& [s, p] : atoms_) {
            json a;
            a["bits"] = s.to_string();
            const BigInt num = boost::multiprecision::numerator(p);
            const BigInt den = boost::multiprecision::denominator(p);
            if ((den & (den - 1)) == 0 && num <= BigInt(1) << 62) {
                a["num"] = num.convert_to<std::int64_t>();
                a["den_pow2"] = static_cast<int>(boost::multiprecision::msb(den));
            } else {
                a["p"] = to_double(p);
            }
            arr.push_back(a);
        }
        return json{{"n", n_}, {"atoms", arr}};
    }

    static ExplicitSource from_json(const json& j) {
        const int n = j.at("n").get<int>();
        std::vector<Atom> atoms;
        for (const auto& a : j.at("atoms")) {
            BitString s = BitString::from_string(a.at("bits").get<std::string>());
            Rational p;
            if (a.contains("num")) {
                p = Rational(BigInt(a.at("num").get<std::int64_t>()),
                             BigInt(1) << a.at("den_pow2").get<int>());
            } else {
                p = Rational(a.at("p").get<double>());
            }
            atoms.emplace_back(std::move(s), std::move(p));
        }
        return ExplicitSource(n, std::move(atoms));
    }

private:
    int n_;
    std::vector<Atom> atoms_;
    bool exact_;
};

/// Min-entropy in bits: -log2 of the heaviest mass.
inline double min_entropy(const ExplicitSource& src) { return neg_log2(src.max_mass()); }

/// Exact test for min-entropy >= k. Dyadic-exact when k is an integer,
/// 1e-9-tolerant otherwise.
inline bool has_min_entropy(const ExplicitSource& src, double k) {
    if (is_integral(k)) return src.max_mass() <= pow2_rational(-static_cast<int>(std::llround(k)));
    return min_entropy(src) >= k - 1e-9;
}

/// (1/2) sum |a - b|, which equals the max-over-events form.
inline double statistical_distance(const ExplicitSource& a, const ExplicitSource& b) {
    if (a.n() != b.n()) throw std::invalid_argument("statistical_distance: length mismatch");
    Rational total = 0;
    auto ia = a.atoms().begin();
    auto ib = b.atoms().begin();
    while (ia != a.atoms().end() || ib != b.atoms().end()) {
        if (ib == b.atoms().end() || (ia != a.atoms().end() && ia->first < ib->first)) {
            total += ia->second;
            ++ia;
        } else if (ia == a.atoms().end() || ib->first < ia->first) {
            total += ib->second;
            ++ib;
        } else {
            total += boost::multiprecision::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return to_double(total) / 2.0;
}

/// Distribution of the substring X_v.
inline ExplicitSource marginalize(const ExplicitSource& src, const TreeNode& v) {
    const int n = src.n();
    if (!is_pow2(n)) throw std::invalid_argument("marginalize: n must be a power of two");
    if (v.depth() > ilog2(n)) throw std::invalid_argument("marginalize: node deeper than tree");
    if (v.is_root()) return src;
    std::map<BitString, Rational> acc;
    for (const auto& [s, p] : src.atoms()) acc[node_substring(s, v)] += p;
    std::vector<ExplicitSource::Atom> atoms(acc.begin(), acc.end());
    return ExplicitSource(v.substring_len(n), std::move(atoms));
}

/// A conditioning event over a parent source, carrying its deficiency.
class SubsourceHandle {
public:
    SubsourceHandle(ExplicitSource parent, std::vector<BitString> event, Rational prob)
        : parent_(std::move(parent)), event_(std::move(event)), prob_(std::move(prob)) {
        std::sort(event_.begin(), event_.end());
        event_.erase(std::unique(event_.begin(), event_.end()), event_.end());
    }

    const ExplicitSource& parent() const { return parent_; }
    const std::vector<BitString>& event() const { return event_; }
    const Rational& event_probability() const { return prob_; }
    double deficiency() const { return neg_log2(prob_); }

    ExplicitSource materialize() const {
        std::vector<ExplicitSource::Atom> atoms;
        for (const auto& s : event_) {
            Rational p = parent_.mass_of(s);
            if (p > 0) atoms.emplace_back(s, p / prob_);
        }
        return ExplicitSource(parent_.n(), std::move(atoms));
    }

    json to_json() const {
        json ev = json::array();
        for (const auto& s : event_) ev.push_back(s.to_string());
        return json{{"event", ev},
                    {"probability", to_double(prob_)},
                    {"deficiency", deficiency()}};
    }

private:
    ExplicitSource parent_;
    std::vector<BitString> event_;
    Rational prob_;
};

inline SubsourceHandle condition(const ExplicitSource& src, const std::vector<BitString>& event) {
    Rational prob = 0;
    std::vector<BitString> kept;
    for (const auto& s : event) {
        const Rational p = src.mass_of(s);
        if (p > 0) {
            prob += p;
            kept.push_back(s);
        }
    }
    if (prob <= 0) throw std::invalid_argument("condition: event misses the support");
    return SubsourceHandle(src, std::move(kept), std::move(prob));
}

/// Condition on a predicate of the whole string.
template <typename Pred>
SubsourceHandle condition_if(const ExplicitSource& src, Pred&& pred) {
    std::vector<BitString> event;
    for (const auto& [s, p] : src.atoms())
        if (pred(s)) event.push_back(s);
    if (event.empty()) throw std::invalid_argument("condition: empty event");
    return condition(src, event);
}

/// Exact left/right-half entropy summary per the block-source definition.
struct BlockSourceReport {
    double k_left = 0;
    double k_right_min = 0;
    Rational max_left_mass;      // heaviest left-marginal mass
    Rational max_cond_mass;      // heaviest conditional right mass over supported lefts

    bool is_block(double k) const {
        if (is_integral(k)) {
            const Rational thr = pow2_rational(-static_cast<int>(std::llround(k)));
            return max_left_mass <= thr && max_cond_mass <= thr;
        }
        return std::min(k_left, k_right_min) >= k - 1e-9;
    }
};

inline BlockSourceReport block_report(const ExplicitSource& src) {
    if (src.n() % 2 != 0) throw std::invalid_argument("block_report: n must be even");
    const int h = src.n() / 2;
    std::map<BitString, Rational> left_mass;
    std::map<BitString, Rational> max_joint;  // per left value
    for (const auto& [s, p] : src.atoms()) {
        const BitString a = s.slice(0, h);
        left_mass[a] += p;
        Rational& m = max_joint[a];
        if (p > m) m = p;
    }
    BlockSourceReport rep;
    rep.max_left_mass = 0;
    rep.max_cond_mass = 0;
    for (const auto& [a, m] : left_mass) {
        if (m > rep.max_left_mass) rep.max_left_mass = m;
        const Rational cond = max_joint[a] / m;
        if (cond > rep.max_cond_mass) rep.max_cond_mass = cond;
    }
    rep.k_left = neg_log2(rep.max_left_mass);
    rep.k_right_min = neg_log2(rep.max_cond_mass);
    return rep;
}

/// Min-entropy of righty(X) given lefty(X) = a, skipping left values
/// outside the support.
inline std::map<BitString, double> conditional_right_entropies(const ExplicitSource& src) {
    if (src.n() % 2 != 0) throw std::invalid_argument("conditional entropies: n must be even");
    const int h = src.n() / 2;
    std::map<BitString, Rational> left_mass;
    std::map<BitString, Rational> max_joint;
    for (const auto& [s, p] : src.atoms()) {
        const BitString a = s.slice(0, h);
        left_mass[a] += p;
        Rational& m = max_joint[a];
        if (p > m) m = p;
    }
    std::map<BitString, double> out;
    for (const auto& [a, m] : left_mass) out[a] = neg_log2(max_joint[a] / m);
    return out;
}

}  // namespace subx
