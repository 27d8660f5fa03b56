#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitstring.hpp"
#include "rng.hpp"
#include "source.hpp"

namespace subx {

/// Zero-pad a block input symmetrically: (n-t)/2 zeros before and after,
/// which keeps each half of x inside the matching half of the output.
inline BitString pad_block(const BitString& x, int n) {
    const int t = x.size();
    if (t == n) return x;
    if (t > n) throw std::invalid_argument("pad_block: input longer than target");
    if (t % 2 != 0 || n % 2 != 0) throw std::invalid_argument("pad_block: parity violation");
    BitString out(n);
    const int off = (n - t) / 2;
    for (int i = 0; i < t; ++i) out.set(off + i, x.bit(i));
    return out;
}

/// Hadamard-style extractor: output bit j is the GF(2) inner product of x
/// with the j-step cyclic left shift of y.
inline BitString ip_extract(const BitString& x, const BitString& y, int m) {
    if (x.size() != y.size()) throw std::invalid_argument("ip_extract: length mismatch");
    if (m > x.size()) throw std::invalid_argument("ip_extract: m > n");
    BitString out(m);
    for (int j = 0; j < m; ++j) out.set(j, x.dot(y.rotl(j)));
    return out;
}

/// Block-source x weak-source extractor interface with fixed parameters
/// (t-bit block input, n-bit weak input, m output bits). Short block
/// inputs are padded per pad_block before evaluation.
class BlockWeakExtractor {
public:
    BlockWeakExtractor(int t, int n, int m) : t_(t), n_(n), m_(m) {
        if (t <= 0 || n <= 0 || m <= 0 || t > n)
            throw std::invalid_argument("block-weak extractor: bad parameters");
    }
    virtual ~BlockWeakExtractor() = default;

    int block_len() const { return t_; }
    int weak_len() const { return n_; }
    int out_len() const { return m_; }

    BitString eval(const BitString& x, const BitString& y) const {
        if (x.size() != t_ || y.size() != n_)
            throw std::invalid_argument("block-weak extractor: input length mismatch");
        return eval_core(t_ == n_ ? x : pad_block(x, n_), y);
    }

    virtual json descriptor() const = 0;

protected:
    virtual BitString eval_core(const BitString& x_padded, const BitString& y) const = 0;

    int t_, n_, m_;
};

class IpExtractor final : public BlockWeakExtractor {
public:
    IpExtractor(int t, int n, int m) : BlockWeakExtractor(t, n, m) {
        if (m > n) throw std::invalid_argument("ip extractor: m > n");
    }

    json descriptor() const override {
        return json{{"kind", "ip"}, {"t", t_}, {"n", n_}, {"m", m_}};
    }

protected:
    BitString eval_core(const BitString& xp, const BitString& y) const override {
        return ip_extract(xp, y, m_);
    }
};

/// Deterministic random function table over {0,1}^n x {0,1}^n, generated
/// on demand from a counter construction keyed by the seed, so the same
/// seed reproduces the same table without materializing 2^(2n) entries.
class TableExtractor final : public BlockWeakExtractor {
public:
    TableExtractor(int t, int n, int m, std::uint64_t seed)
        : BlockWeakExtractor(t, n, m), seed_(seed) {
        if (n > 32) throw std::invalid_argument("table extractor: n > 32 per argument");
    }

    std::uint64_t seed() const { return seed_; }

    json descriptor() const override {
        return json{{"kind", "table"}, {"t", t_}, {"n", n_}, {"m", m_}, {"seed", seed_}};
    }

protected:
    BitString eval_core(const BitString& xp, const BitString& y) const override {
        std::uint64_t h = detail::mix64(seed_ ^ 0x7ab1eULL);
        h = detail::mix64(h ^ (static_cast<std::uint64_t>(n_) << 32 | static_cast<std::uint64_t>(m_)));
        for (std::uint64_t w : xp.words()) h = detail::mix64(h ^ w);
        h = detail::mix64(h ^ 0x5e9a7a7e5ULL);
        for (std::uint64_t w : y.words()) h = detail::mix64(h ^ w);
        BitString out(m_);
        for (int base = 0; base < m_; base += 64) {
            const std::uint64_t block = detail::mix64(h ^ detail::mix64(base + 1));
            for (int i = 0; i < 64 && base + i < m_; ++i)
                out.set(base + i, (block >> i) & 1u);
        }
        return out;
    }

private:
    std::uint64_t seed_;
};

inline std::shared_ptr<const BlockWeakExtractor> random_table_extract(std::uint64_t seed, int n,
                                                                      int m) {
    return std::make_shared<TableExtractor>(n, n, m, seed);
}

/// Somewhere-extractor interface: r rows of ell bits.
class SomewhereExtractor {
public:
    SomewhereExtractor(int n, int ell, int r) : n_(n), ell_(ell), r_(r) {
        if (n <= 0 || ell <= 0 || r <= 0)
            throw std::invalid_argument("somewhere extractor: bad parameters");
    }
    virtual ~SomewhereExtractor() = default;

    int n() const { return n_; }
    int row_width() const { return ell_; }
    int row_count() const { return r_; }

    std::vector<BitString> rows(const BitString& x, const BitString& y) const {
        if (x.size() != n_ || y.size() != n_)
            throw std::invalid_argument("somewhere extractor: input length mismatch");
        return rows_core(x, y);
    }

    virtual json descriptor() const = 0;

protected:
    virtual std::vector<BitString> rows_core(const BitString& x, const BitString& y) const = 0;

    int n_, ell_, r_;
};

/// Reference implementation: row i applies the inner extractor to the
/// i-th cyclic rotation of x against y.
class RotationSE final : public SomewhereExtractor {
public:
    RotationSE(std::shared_ptr<const BlockWeakExtractor> inner, int r)
        : SomewhereExtractor(inner->weak_len(), inner->out_len(), r), inner_(std::move(inner)) {
        if (inner_->block_len() != n_)
            throw std::invalid_argument("rotation se: inner extractor must take n-bit blocks");
        if (r_ > n_) throw std::invalid_argument("rotation se: more rows than distinct rotations");
    }

    json descriptor() const override {
        return json{{"kind", "se-rot"}, {"n", n_}, {"m", ell_}, {"r", r_},
                    {"inner", inner_->descriptor()}};
    }

protected:
    std::vector<BitString> rows_core(const BitString& x, const BitString& y) const override {
        std::vector<BitString> out;
        out.reserve(r_);
        for (int i = 0; i < r_; ++i) out.push_back(inner_->eval(x.rotl(i), y));
        return out;
    }

private:
    std::shared_ptr<const BlockWeakExtractor> inner_;
};

/// Test double: wraps a base somewhere-extractor and forces injected
/// (index, value) rows into every output. Indices at or past the base row
/// count extend the matrix, so a batch of constants can ride along with
/// the base rows.
class InjectedSE final : public SomewhereExtractor {
public:
    InjectedSE(std::shared_ptr<const SomewhereExtractor> base,
               std::vector<std::pair<int, BitString>> injections)
        : SomewhereExtractor(base->n(), base->row_width(),
                             required_rows(*base, injections)),
          base_(std::move(base)),
          injections_(std::move(injections)) {
        for (const auto& [i, v] : injections_) {
            if (i < 0) throw std::invalid_argument("injected se: negative index");
            if (v.size() != ell_) throw std::invalid_argument("injected se: value width mismatch");
        }
    }

    /// Convenience: append each value on its own fresh row.
    static std::shared_ptr<const InjectedSE> appending(
        std::shared_ptr<const SomewhereExtractor> base, const std::vector<BitString>& values) {
        std::vector<std::pair<int, BitString>> inj;
        int next = base->row_count();
        for (const auto& v : values) inj.emplace_back(next++, v);
        return std::make_shared<InjectedSE>(std::move(base), std::move(inj));
    }

    const std::vector<std::pair<int, BitString>>& injections() const { return injections_; }

    json descriptor() const override {
        json inj = json::array();
        for (const auto& [i, v] : injections_) inj.push_back(json::array({i, v.to_string()}));
        json d = base_->descriptor();
        d["kind"] = "se-double";
        d["inject"] = injections_.size() == 1 ? inj[0] : inj;
        return d;
    }

protected:
    std::vector<BitString> rows_core(const BitString& x, const BitString& y) const override {
        std::vector<BitString> out = base_->rows(x, y);
        out.resize(static_cast<std::size_t>(r_), BitString::zeros(ell_));
        for (const auto& [i, v] : injections_) out[static_cast<std::size_t>(i)] = v;
        return out;
    }

private:
    static int required_rows(const SomewhereExtractor& base,
                             const std::vector<std::pair<int, BitString>>& inj) {
        int r = base.row_count();
        for (const auto& [i, v] : inj) r = std::max(r, i + 1);
        return r;
    }

    std::shared_ptr<const SomewhereExtractor> base_;
    std::vector<std::pair<int, BitString>> injections_;
};

inline std::vector<BitString> se_rows(const SomewhereExtractor& se, const BitString& x,
                                      const BitString& y) {
    return se.rows(x, y);
}

struct ExtractorVerdict {
    double max_observed_sd = 0;   // max over trials of the strong-form distance
    double max_plain_sd = 0;
    int trials = 0;
    std::string family;
    double threshold = 0;
    bool pass = false;

    json to_json() const {
        return json{{"maxObservedSD", max_observed_sd}, {"maxPlainSD", max_plain_sd},
                    {"trials", trials},                 {"familyDescriptor", family},
                    {"threshold", threshold},           {"pass", pass}};
    }
};

using SourcePairFamily = std::function<std::pair<ExplicitSource, ExplicitSource>(SplitRng&)>;

/// Empirical contract check. For each sampled (X, Y) pair the output
/// distribution is convolved exactly over the explicit supports; the
/// strong form conditions on the second argument.
inline ExtractorVerdict verify_extractor(const BlockWeakExtractor& ext,
                                         const SourcePairFamily& family,
                                         const std::string& family_descriptor, int trials,
                                         double threshold, SplitRng rng) {
    const int m = ext.out_len();
    const Rational unif = pow2_rational(-m);
    ExtractorVerdict verdict;
    verdict.trials = trials;
    verdict.family = family_descriptor;
    verdict.threshold = threshold;

    for (int trial = 0; trial < trials; ++trial) {
        SplitRng sub = rng.split(trial);
        const auto [X, Y] = family(sub);
        std::map<BitString, Rational> overall;
        Rational strong = 0;
        for (const auto& [y, qy] : Y.atoms()) {
            std::map<BitString, Rational> per_y;
            for (const auto& [x, px] : X.atoms()) per_y[ext.eval(x, y)] += px;
            Rational dist = 0;
            for (const auto& [o, p] : per_y) {
                dist += boost::multiprecision::abs(p - unif);
                overall[o] += qy * p;
            }
            dist += unif * Rational((BigInt(1) << m) - BigInt(per_y.size()));
            strong += qy * dist;
        }
        Rational plain = 0;
        for (const auto& [o, p] : overall) plain += boost::multiprecision::abs(p - unif);
        plain += unif * Rational((BigInt(1) << m) - BigInt(overall.size()));

        verdict.max_observed_sd = std::max(verdict.max_observed_sd, to_double(strong) / 2.0);
        verdict.max_plain_sd = std::max(verdict.max_plain_sd, to_double(plain) / 2.0);
    }
    verdict.max_observed_sd = std::max(verdict.max_observed_sd, verdict.max_plain_sd);
    verdict.pass = verdict.max_observed_sd <= threshold;
    return verdict;
}

/// Standard verification family: a random flat block-source (both halves
/// at 2^ceil(k) values) paired with a random flat weak source.
inline SourcePairFamily block_weak_family(int n, double k) {
    return [n, k](SplitRng& rng) {
        const int h = n / 2;
        const int per = 1 << static_cast<int>(std::ceil(k));
        SplitRng left_rng = rng.split(1), right_rng = rng.split(2), weak_rng = rng.split(3);
        std::set<BitString> lefts;
        while (static_cast<int>(lefts.size()) < std::min(per, 1 << h))
            lefts.insert(left_rng.next_bits(h));
        std::vector<BitString> block_support;
        for (const auto& a : lefts) {
            std::set<BitString> rights;
            while (static_cast<int>(rights.size()) < std::min(per, 1 << h))
                rights.insert(right_rng.next_bits(h));
            for (const auto& b : rights) block_support.push_back(a.concat(b));
        }
        std::set<BitString> weak;
        while (static_cast<int>(weak.size()) < std::min(per, 1 << n))
            weak.insert(weak_rng.next_bits(n));
        return std::make_pair(
            ExplicitSource::flat(block_support),
            ExplicitSource::flat(std::vector<BitString>(weak.begin(), weak.end())));
    };
}

/// Descriptor round-trip for the CLI and config files.
inline std::shared_ptr<const BlockWeakExtractor> bext_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    const int t = j.contains("t") ? j.at("t").get<int>() : n;
    if (kind == "ip") return std::make_shared<IpExtractor>(t, n, m);
    if (kind == "table")
        return std::make_shared<TableExtractor>(t, n, m, j.at("seed").get<std::uint64_t>());
    throw std::invalid_argument("bext_from_json: unknown kind " + kind);
}

inline std::shared_ptr<const SomewhereExtractor> se_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "se-rot" || kind == "se-double") {
        const int n = j.at("n").get<int>();
        const int m = j.at("m").get<int>();
        const int r = j.contains("r") ? j.at("r").get<int>() : n;
        std::shared_ptr<const BlockWeakExtractor> inner;
        if (j.contains("inner")) inner = bext_from_json(j.at("inner"));
        else if (j.contains("seed"))
            inner = std::make_shared<TableExtractor>(n, n, m, j.at("seed").get<std::uint64_t>());
        else inner = std::make_shared<IpExtractor>(n, n, m);
        auto base = std::make_shared<RotationSE>(inner, r);
        if (kind == "se-rot") return base;
        std::vector<std::pair<int, BitString>> inj;
        const json& ij = j.at("inject");
        auto parse_pair = [](const json& p) {
            return std::make_pair(p.at(0).get<int>(),
                                  BitString::from_string(p.at(1).get<std::string>()));
        };
        if (ij.is_array() && !ij.empty() && ij[0].is_array())
            for (const auto& p : ij) inj.push_back(parse_pair(p));
        else inj.push_back(parse_pair(ij));
        return std::make_shared<InjectedSE>(base, std::move(inj));
    }
    throw std::invalid_argument("se_from_json: unknown kind " + kind);
}

}  // namespace subx
