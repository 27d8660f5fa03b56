#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "entropy_tree.hpp"
#include "source.hpp"

namespace subx {

/// Constructive form of the fixing fact: conditioning on the heaviest
/// preimage class makes f constant at deficiency at most m (and at most
/// log2 of the number of distinct values seen). Ties break toward the
/// lexicographically smallest value.
inline std::pair<BitString, SubsourceHandle> fix_function_subsource(
    const ExplicitSource& src, const std::function<BitString(const BitString&)>& f) {
    std::map<BitString, std::pair<Rational, std::vector<BitString>>> classes;
    for (const auto& [s, p] : src.atoms()) {
        auto& cls = classes[f(s)];
        cls.first += p;
        cls.second.push_back(s);
    }
    const BitString* best_value = nullptr;
    const std::pair<Rational, std::vector<BitString>>* best = nullptr;
    for (const auto& [value, cls] : classes) {
        if (!best || cls.first > best->first) {  // map order gives lex-smallest on ties
            best_value = &value;
            best = &cls;
        }
    }
    return {*best_value, condition(src, best->second)};
}

struct SplitOutcome {
    int bucket = 0;                     // 0, 1, or 2
    SubsourceHandle witness;
    double tau_lo = 0, tau_hi = 0;      // conditional entropies lie in [tau_lo, tau_hi]
};

/// Partitions left values by conditional right min-entropy at thresholds
/// (tau0=0) tau1 tau2 (tau3=n) and conditions on the heaviest bucket.
/// Left values sitting exactly on a threshold may be counted toward either
/// side; they go to whichever choice maximizes the chosen bucket, lowest
/// bucket index on ties.
inline SplitOutcome split_by_conditional_entropy(const ExplicitSource& src, double tau1,
                                                 double tau2) {
    const int n = src.n();
    if (n % 2 != 0) throw std::invalid_argument("split: n must be even");
    if (!(0 < tau1 && tau1 < tau2 && tau2 < n))
        throw std::invalid_argument("split: need 0 < tau1 < tau2 < n");
    const double boundary_tol = 1e-9;
    const double taus[4] = {0.0, tau1, tau2, static_cast<double>(n)};

    const auto cond = conditional_right_entropies(src);
    std::map<BitString, Rational> left_mass;
    const int h = n / 2;
    for (const auto& [s, p] : src.atoms()) left_mass[s.slice(0, h)] += p;

    Rational base[3] = {0, 0, 0};
    Rational bnd1 = 0, bnd2 = 0;  // mass exactly on tau1 / tau2
    std::vector<std::pair<BitString, int>> assignment;  // (left, interior bucket or -1/-2 boundary)
    for (const auto& [a, me] : cond) {
        const Rational& m = left_mass.at(a);
        if (std::abs(me - tau1) <= boundary_tol) {
            bnd1 += m;
            assignment.emplace_back(a, -1);
        } else if (std::abs(me - tau2) <= boundary_tol) {
            bnd2 += m;
            assignment.emplace_back(a, -2);
        } else {
            const int b = me < tau1 ? 0 : (me < tau2 ? 1 : 2);
            base[b] += m;
            assignment.emplace_back(a, b);
        }
    }
    const Rational achievable[3] = {base[0] + bnd1, base[1] + bnd1 + bnd2, base[2] + bnd2};
    int bucket = 0;
    for (int i = 1; i < 3; ++i)
        if (achievable[i] > achievable[bucket]) bucket = i;

    std::vector<BitString> lefts;
    for (const auto& [a, b] : assignment) {
        const bool take = (b == bucket) || (b == -1 && bucket <= 1) || (b == -2 && bucket >= 1);
        if (take) lefts.push_back(a);
    }
    std::sort(lefts.begin(), lefts.end());
    SubsourceHandle witness = condition_if(
        src, [&](const BitString& s) {
            return std::binary_search(lefts.begin(), lefts.end(), s.slice(0, h));
        });
    return {bucket, std::move(witness), taus[bucket], taus[bucket + 1]};
}

enum class ThreeTypesCase { LeftHeavy, BlockSource, LeftFixed };

inline std::string three_types_case_name(ThreeTypesCase c) {
    switch (c) {
        case ThreeTypesCase::LeftHeavy: return "LeftHeavy";
        case ThreeTypesCase::BlockSource: return "BlockSource";
        case ThreeTypesCase::LeftFixed: return "LeftFixed";
    }
    return "?";
}

struct ThreeTypesOutcome {
    ThreeTypesCase kind = ThreeTypesCase::LeftHeavy;
    SubsourceHandle witness;      // composite event, including the left fixing when LeftFixed
    double split_deficiency = 0;  // the bucket-choice step alone, the part budgeted at 1
};

/// The three-types split at thresholds tau1 = sqrt(k), tau2 = k - sqrt(k) - 1.
/// Rejects the degenerate regime tau1 >= tau2 instead of clamping. In the
/// LeftFixed case the left half is pinned to the lexicographically smallest
/// supported value; that fixing is an extra conditioning on top of the
/// bucket choice and its cost is carried by the composite witness.
inline ThreeTypesOutcome three_types(const ExplicitSource& src, double k) {
    if (k <= 1) throw std::invalid_argument("three_types: k must exceed 1");
    if (min_entropy(src) < k - 1e-9)
        throw std::invalid_argument("three_types: source lacks the required min-entropy");
    const double tau1 = std::sqrt(k);
    const double tau2 = k - std::sqrt(k) - 1;
    if (!(tau1 < tau2))
        throw std::invalid_argument("three_types: degenerate regime (k too small for the split)");

    SplitOutcome split = split_by_conditional_entropy(src, tau1, tau2);
    const double split_def = split.witness.deficiency();
    if (split.bucket == 0)
        return {ThreeTypesCase::LeftHeavy, std::move(split.witness), split_def};
    if (split.bucket == 1)
        return {ThreeTypesCase::BlockSource, std::move(split.witness), split_def};

    // bucket 2: fix the left half to the smallest supported value
    const ExplicitSource bucket_src = split.witness.materialize();
    const int h = src.n() / 2;
    const BitString a = bucket_src.atoms().front().first.slice(0, h);  // atoms sorted, left is prefix
    std::vector<BitString> event;
    for (const auto& s : split.witness.event())
        if (s.slice(0, h) == a) event.push_back(s);
    return {ThreeTypesCase::LeftFixed, condition(src, event), split_def};
}

struct DigExhausted : std::runtime_error {
    explicit DigExhausted(const std::string& branch_, const std::string& why)
        : std::runtime_error("entropy-tree dig exhausted at node '" + branch_ + "': " + why),
          branch(branch_) {}
    std::string branch;
};

struct TreeDiscovery {
    EntropyTree tree;
    SubsourceHandle witness;                     // event over the original source
    double budget_used = 0;
    double k_star = 0;                           // structure parameter the witness certifies
    std::map<std::string, double> guarantees;    // per labeled node, post-dig lower bound
    std::vector<std::string> log;

    json to_json() const {
        json g = json::object();
        for (const auto& [node, v] : guarantees) g[node] = v;
        return json{{"tree", tree.to_json()},
                    {"witness", witness.to_json()},
                    {"budget_used", budget_used},
                    {"k_star", k_star},
                    {"guarantees", g},
                    {"log", log}};
    }
};

/// Digs for nested block-sources by iterating the three-types split,
/// descending into the surviving half. Each level ends when a block-source
/// is found (Btop, then Bmid under its left son, then Bbot). The split
/// parameter at every step is the measured min-entropy of the current
/// marginal; termination is checked dynamically rather than assumed from
/// asymptotics.
inline TreeDiscovery find_entropy_tree(const ExplicitSource& src, double k, int levels) {
    if (levels < 1 || levels > 3) throw std::invalid_argument("find_entropy_tree: levels in {1,2,3}");
    if (!is_pow2(src.n())) throw std::invalid_argument("find_entropy_tree: n must be a power of two");
    if (min_entropy(src) < k - 1e-9)
        throw std::invalid_argument("find_entropy_tree: source lacks the required min-entropy");
    const int depth = ilog2(src.n());
    static const Label block_labels[3] = {Label::Btop, Label::Bmid, Label::Bbot};

    struct Record {
        std::string node;
        Label label;
        int segment;
        double measured;    // min-entropy for H, block level for B
        double def_before;  // cumulative deficiency when assigned
    };

    ExplicitSource cur = src;
    Rational cum_prob = 1;
    EntropyTree tree;
    tree.depth = depth;
    std::vector<Record> records;
    std::vector<std::string> log;
    TreeNode v = TreeNode::root();
    int segment = 1;

    auto def_now = [&]() { return neg_log2(cum_prob); };

    for (;;) {
        if (v.depth() >= depth)
            throw DigExhausted(v.to_string(), "reached a leaf without finding a block-source");
        const ExplicitSource marg = marginalize(cur, v);
        const double k_cur = min_entropy(marg);
        ThreeTypesOutcome outcome = [&] {
            try {
                return three_types(marg, k_cur);
            } catch (const std::invalid_argument& e) {
                throw DigExhausted(v.to_string(), e.what());
            }
        }();
        // lift the outcome's event to the full strings and condition
        {
            std::vector<BitString> ev = outcome.witness.event();
            std::sort(ev.begin(), ev.end());
            SubsourceHandle lifted = condition_if(cur, [&](const BitString& s) {
                return std::binary_search(ev.begin(), ev.end(), node_substring(s, v));
            });
            cum_prob *= lifted.event_probability();
            cur = lifted.materialize();
        }
        log.push_back("node '" + v.to_string() + "' k=" + std::to_string(k_cur) + " -> " +
                      three_types_case_name(outcome.kind));

        if (outcome.kind == ThreeTypesCase::BlockSource) {
            const Label lbl = block_labels[segment - 1];
            tree.labels[v.to_string()] = lbl;
            records.push_back({v.to_string(), lbl, segment, std::sqrt(k_cur), def_now()});
            if (segment == levels) break;
            ++segment;
            v = v.leftson();
        } else if (outcome.kind == ThreeTypesCase::LeftHeavy) {
            tree.labels[v.to_string()] = Label::H;
            records.push_back({v.to_string(), Label::H, segment, k_cur, def_now()});
            v = v.leftson();
        } else {
            tree.labels[v.to_string()] = Label::H;
            records.push_back({v.to_string(), Label::H, segment, k_cur, def_now()});
            tree.labels[v.leftson().to_string()] = Label::F;
            v = v.rightson();
        }
    }

    std::vector<BitString> final_event;
    for (const auto& [s, p] : cur.atoms()) final_event.push_back(s);
    TreeDiscovery out{tree, condition(src, final_event)};
    out.log = std::move(log);
    out.budget_used = out.witness.deficiency();

    const double final_def = def_now();
    double k_star = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        const double g = r.measured - (final_def - r.def_before);
        out.guarantees[r.node] = g;
        double bound = 0;
        if (g > 0) {
            if (r.label == Label::H) {
                bound = r.segment == 1 ? g : (r.segment == 2 ? g * g : g * g * g * g);
            } else if (r.label == Label::Btop) {
                bound = g * g;
            } else if (r.label == Label::Bmid) {
                bound = g * g * g * g;
            } else {
                bound = std::pow(g, 8.0);
            }
        }
        k_star = std::min(k_star, bound);
    }
    out.k_star = k_star;
    return out;
}

}  // namespace subx
