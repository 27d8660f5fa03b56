#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "entropy_tree.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

namespace subx {

/// A source with a declared tree structure, as used by the engineered
/// experiments: the tree's labels validate against the source at (k, eps).
struct TreeFixture {
    ExplicitSource src;
    EntropyTree tree;
    double k = 0;
    double eps = 0;

    std::vector<TreeNode> path() const { return entropy_path(tree); }
};

/// Shipped n=16 fixture: root H over a fixed left half and a block right
/// half whose own left quarter is a second block-source.
///   ""  -> H,  "0" -> F (8-bit constant),  "1" -> Btop,  "10" -> Bmid
inline TreeFixture make_tree_fixture16(std::uint64_t seed) {
    SplitRng rng(seed);
    SplitRng const_rng = rng.split(1);
    SplitRng right_rng = rng.split(2);
    const BitString fixed8 = const_rng.next_bits(8);
    std::set<BitString> rights;
    while (rights.size() < 4) rights.insert(right_rng.next_bits(4));

    std::vector<BitString> support;
    for (std::uint64_t l = 0; l < 16; ++l)
        for (const auto& r : rights)
            support.push_back(fixed8.concat(BitString::from_uint(l, 4)).concat(r));

    TreeFixture fx{ExplicitSource::flat(support), {}, 4.0, 0.0};
    fx.tree.depth = 4;
    fx.tree.labels[""] = Label::H;
    fx.tree.labels["0"] = Label::F;
    fx.tree.labels["1"] = Label::Btop;
    fx.tree.labels["10"] = Label::Bmid;
    return fx;
}

namespace detail {

/// Challenge values a fixed node can emit: ch(x_v, .) over the other
/// source's support (constant in x because x_v's subtree is fixed).
inline std::set<BitString> fixed_node_challenge_values(const TreeFixture& self,
                                                       const ExplicitSource& other,
                                                       const TreeNode& v,
                                                       const PipelineConfig& cfg) {
    std::set<BitString> values;
    const BitString& x0 = self.src.atoms().front().first;
    for (const auto& [y, py] : other.atoms())
        values.insert(challenge_matrix(x0, y, v, cfg).flatten());
    return values;
}

}  // namespace detail

/// Installs a step-1 test double that carries, as injected rows, every
/// challenge value the F-labeled nodes of either tree can emit over the
/// fixture supports. This realizes the fixed-branch contract at toy scale,
/// where the reference somewhere-extractor has no reason to contain those
/// constants; iterated to a fixpoint since decisions inside fixed subtrees
/// consult the double itself.
inline PipelineConfig with_fixed_branch_injections(PipelineConfig cfg, const TreeFixture& fx,
                                                   const TreeFixture& fy) {
    const std::shared_ptr<const SomewhereExtractor> base = cfg.se1;
    std::set<BitString> values;
    for (int round = 0; round < 4; ++round) {
        std::set<BitString> fresh;
        for (const auto& [path, lbl] : fx.tree.labels)
            if (lbl == Label::F) {
                const auto vals = detail::fixed_node_challenge_values(
                    fx, fy.src, TreeNode::from_string(path), cfg);
                fresh.insert(vals.begin(), vals.end());
            }
        for (const auto& [path, lbl] : fy.tree.labels)
            if (lbl == Label::F) {
                const auto vals = detail::fixed_node_challenge_values(
                    fy, fx.src, TreeNode::from_string(path), cfg);
                fresh.insert(vals.begin(), vals.end());
            }
        if (fresh == values) return cfg;
        values = std::move(fresh);
        cfg.se1 = InjectedSE::appending(base, {values.begin(), values.end()});
    }
    throw std::runtime_error("fixed-branch injections did not stabilize");
}

/// The alpha-fixing: condition the fixture on its Bmid node's left son
/// taking the most probable value (lexicographically smallest on ties).
inline std::pair<BitString, SubsourceHandle> fix_left_of_mid(const TreeFixture& f) {
    const auto vmid = f.tree.find_unique(Label::Bmid);
    if (!vmid) throw std::invalid_argument("fix_left_of_mid: fixture has no Bmid node");
    const TreeNode target = vmid->leftson();
    const ExplicitSource marg = marginalize(f.src, target);
    BitString alpha = marg.atoms().front().first;
    Rational best = marg.atoms().front().second;
    for (const auto& [v, p] : marg.atoms())
        if (p > best) {
            best = p;
            alpha = v;
        }
    return {alpha, condition_if(f.src, [&](const BitString& s) {
                return node_substring(s, target) == alpha;
            })};
}

struct PathExperimentReport {
    int trials = 0;
    int hits = 0;
    double pr_contains = 0;

    json to_json() const {
        return json{{"trials", trials}, {"hits", hits}, {"prContains", pr_contains}};
    }
};

/// Measures how often the observed x-side path contains the fixture's
/// entropy-path.
inline PathExperimentReport path_experiment(const TreeFixture& fx, const TreeFixture& fy,
                                            const PipelineConfig& cfg, int trials,
                                            std::uint64_t seed) {
    const std::vector<TreeNode> want = fx.path();
    SplitRng rng(seed);
    PathExperimentReport rep;
    rep.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const BitString x = fx.src.sample(rng);
        const BitString y = fy.src.sample(rng);
        const auto [pobs, qobs] = observed_paths(x, y, cfg);
        bool ok = true;
        for (std::size_t i = 0; i < want.size(); ++i) ok = ok && pobs[i] == want[i];
        if (ok) ++rep.hits;
    }
    rep.pr_contains = static_cast<double>(rep.hits) / trials;
    return rep;
}

struct VmidExperimentReport {
    int trials = 0;
    int hits = 0;
    double pr_correct = 0;
    std::string bmid_node;
    double alpha_deficiency = 0;
    double beta_deficiency = 0;
    int injected_rows = 0;

    json to_json() const {
        return json{{"trials", trials},
                    {"hits", hits},
                    {"prCorrect", pr_correct},
                    {"bmidNode", bmid_node},
                    {"alphaDeficiency", alpha_deficiency},
                    {"betaDeficiency", beta_deficiency},
                    {"injectedRows", injected_rows}};
    }
};

/// Step-2 identification experiment on the conditioned fixtures: fix the
/// left sons of both Bmid nodes, arrange (via the step-2 double) that
/// every node-path challenge strictly below Bmid is responded, and measure
/// how often the deepest unresponded node is exactly Bmid. The injected
/// value set enumerates the challenges realized on the conditioned
/// supports; challenges do not depend on the step-2 extractor, so one
/// pass is exact.
inline VmidExperimentReport vmid_experiment(const TreeFixture& fx, const TreeFixture& fy,
                                            PipelineConfig cfg, int trials, std::uint64_t seed) {
    const auto vmid = fx.tree.find_unique(Label::Bmid);
    if (!vmid) throw std::invalid_argument("vmid_experiment: fixture has no Bmid node");
    auto [alpha, hx] = fix_left_of_mid(fx);
    auto [beta, hy] = fix_left_of_mid(fy);
    const ExplicitSource Xa = hx.materialize();
    const ExplicitSource Yb = hy.materialize();

    std::set<BitString> below_values;
    for (const auto& [x, px] : Xa.atoms())
        for (const auto& [y, py] : Yb.atoms()) {
            const auto [pobs, qobs] = observed_paths(x, y, cfg);
            for (const auto& v : pobs)
                if (v.depth() > vmid->depth())
                    below_values.insert(node_path_challenge(x, y, v, qobs, cfg).flatten());
        }
    cfg.se2 = InjectedSE::appending(cfg.se2, {below_values.begin(), below_values.end()});

    VmidExperimentReport rep;
    rep.trials = trials;
    rep.bmid_node = vmid->to_string();
    rep.alpha_deficiency = hx.deficiency();
    rep.beta_deficiency = hy.deficiency();
    rep.injected_rows = static_cast<int>(below_values.size());
    SplitRng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const BitString x = Xa.sample(rng);
        const BitString y = Yb.sample(rng);
        const auto [pobs, qobs] = observed_paths(x, y, cfg);
        if (observed_vmid(x, y, pobs, qobs, cfg) == *vmid) ++rep.hits;
    }
    rep.pr_correct = static_cast<double>(rep.hits) / trials;
    return rep;
}

struct ExperimentConfig {
    PipelineConfig pipeline;
    ExplicitSource X, Y;
    std::optional<TreeFixture> fixture_x, fixture_y;  // validated before running when present
    int trials = 10000;
    std::uint64_t seed = 1;
    double sd_threshold = 1.0;  // secondary claim
    std::function<BitString(const BitString&, const BitString&)> runner;  // default: subext
};

struct DisperserClaim {
    std::string name;
    double value = 0;
    double ci_lo = 0, ci_hi = 0;
    bool pass = false;
};

struct DisperserReport {
    double coverage = 0;       // fraction of {0,1}^m hit
    double sd_to_uniform = 0;  // empirical output distribution vs uniform
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<DisperserClaim> claims;
    std::map<std::string, int> histogram;

    bool pass() const {
        for (const auto& c : claims)
            if (!c.pass) return false;
        return true;
    }

    json to_json() const {
        json cl = json::array();
        for (const auto& c : claims)
            cl.push_back(json{{"name", c.name},
                              {"value", c.value},
                              {"ci95", json::array({c.ci_lo, c.ci_hi})},
                              {"pass", c.pass}});
        return json{{"outputSupportCoverage", coverage},
                    {"empiricalSD", sd_to_uniform},
                    {"trials", trials},
                    {"seed", seed},
                    {"claims", cl},
                    {"histogram", histogram}};
    }
};

inline DisperserReport run_disperser_experiment(const ExperimentConfig& ec) {
    for (const auto& f : {&ec.fixture_x, &ec.fixture_y}) {
        if (*f) {
            const StructureReport sr = validate_structure((*f)->src, (*f)->tree, (*f)->k, (*f)->eps);
            if (!sr.pass)
                throw std::runtime_error("disperser experiment: fixture failed validation: " +
                                         sr.to_json().dump());
        }
    }
    const int m = ec.pipeline.m;
    SplitRng rng(ec.seed);
    std::map<BitString, int> hist;
    for (int t = 0; t < ec.trials; ++t) {
        const BitString x = ec.X.sample(rng);
        const BitString y = ec.Y.sample(rng);
        const BitString out = ec.runner ? ec.runner(x, y) : subext(x, y, ec.pipeline);
        ++hist[out];
    }
    DisperserReport rep;
    rep.trials = ec.trials;
    rep.seed = ec.seed;
    const double cells = std::exp2(m);
    rep.coverage = static_cast<double>(hist.size()) / cells;
    double sd = 0;
    for (const auto& [o, c] : hist) sd += std::abs(c / static_cast<double>(ec.trials) - 1.0 / cells);
    sd += (cells - static_cast<double>(hist.size())) * (1.0 / cells);
    rep.sd_to_uniform = sd / 2.0;
    for (const auto& [o, c] : hist) rep.histogram[o.to_string()] = c;

    rep.claims.push_back({"zero-error coverage", rep.coverage, rep.coverage, rep.coverage,
                          rep.coverage >= 1.0 - 1e-12});
    rep.claims.push_back({"sd to uniform", rep.sd_to_uniform, 0.0, rep.sd_to_uniform,
                          rep.sd_to_uniform <= ec.sd_threshold});
    return rep;
}

/// First output bit of the sub-extractor: the bipartite graph adjacency.
inline int ramsey_edge(const BitString& u, const BitString& v, const PipelineConfig& cfg) {
    return subext(u, v, cfg).bit(0) ? 1 : 0;
}

enum class RectMode { Exhaustive, Randomized };
enum class RectStatus { FoundWitness, NoneCertified, NoneFound, BudgetExceeded };

struct RectWitness {
    std::vector<std::uint32_t> rows, cols;
    int color = 0;
};

struct RectResult {
    RectStatus status = RectStatus::NoneFound;
    std::optional<RectWitness> witness;
    std::uint64_t work = 0;
};

using EdgeFn = std::function<int(std::uint32_t, std::uint32_t)>;

namespace detail {

inline std::vector<std::uint64_t> row_masks(const EdgeFn& edge, std::uint32_t R, std::uint32_t C,
                                            int color) {
    std::vector<std::uint64_t> masks(R, 0);
    for (std::uint32_t i = 0; i < R; ++i)
        for (std::uint32_t j = 0; j < C; ++j)
            if (edge(i, j) == color) masks[i] |= 1ull << j;
    return masks;
}

inline std::optional<RectWitness> mask_witness(const std::vector<std::uint32_t>& rows,
                                               std::uint64_t mask, int K, int color) {
    RectWitness w;
    w.rows = rows;
    w.color = color;
    for (std::uint32_t j = 0; j < 64 && static_cast<int>(w.cols.size()) < K; ++j)
        if ((mask >> j) & 1u) w.cols.push_back(j);
    if (static_cast<int>(w.cols.size()) < K) return std::nullopt;
    return w;
}

}  // namespace detail

/// Looks for a K x K all-ones or all-zeros bipartite rectangle. Exhaustive
/// mode enumerates row K-subsets and certifies absence; it refuses (never
/// silently truncates) when the subset count exceeds the budget.
/// Randomized mode grows rectangles greedily from sampled row pairs and can
/// only report none-found.
inline RectResult rectangle_search(const EdgeFn& edge, std::uint32_t R, std::uint32_t C, int K,
                                   RectMode mode, std::uint64_t budget, std::uint64_t seed = 0) {
    RectResult res;
    if (K <= 0) throw std::invalid_argument("rectangle_search: K must be positive");
    if (K > static_cast<int>(R) || K > static_cast<int>(C)) {
        res.status = RectStatus::NoneCertified;  // vacuous
        return res;
    }
    if (C > 64) throw std::invalid_argument("rectangle_search: column count above 64 unsupported");

    const auto ones = detail::row_masks(edge, R, C, 1);
    std::vector<std::uint64_t> zeros(R);
    const std::uint64_t colmask = C == 64 ? ~0ull : ((1ull << C) - 1);
    for (std::uint32_t i = 0; i < R; ++i) zeros[i] = ~ones[i] & colmask;

    if (mode == RectMode::Exhaustive) {
        double combos = 1;
        for (int i = 0; i < K; ++i) combos *= static_cast<double>(R - i) / (i + 1);
        if (combos * 2 > static_cast<double>(budget)) {
            res.status = RectStatus::BudgetExceeded;
            return res;
        }
        std::vector<std::uint32_t> idx(K);
        for (int i = 0; i < K; ++i) idx[i] = i;
        for (;;) {
            for (int color = 1; color >= 0; --color) {
                const auto& masks = color ? ones : zeros;
                std::uint64_t acc = colmask;
                for (int i = 0; i < K; ++i) acc &= masks[idx[i]];
                ++res.work;
                if (__builtin_popcountll(acc) >= K) {
                    res.status = RectStatus::FoundWitness;
                    res.witness = detail::mask_witness(idx, acc, K, color);
                    return res;
                }
            }
            int i = K - 1;
            while (i >= 0 && idx[i] == R - static_cast<std::uint32_t>(K - i)) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < K; ++j) idx[j] = idx[j - 1] + 1;
        }
        res.status = RectStatus::NoneCertified;
        return res;
    }

    SplitRng rng(seed);
    while (res.work < budget) {
        ++res.work;
        const std::uint32_t i1 = static_cast<std::uint32_t>(rng.next_below(R));
        std::uint32_t i2 = static_cast<std::uint32_t>(rng.next_below(R));
        if (i2 == i1) continue;
        for (int color = 1; color >= 0; --color) {
            const auto& masks = color ? ones : zeros;
            std::uint64_t acc = masks[i1] & masks[i2];
            if (__builtin_popcountll(acc) < K) continue;
            std::vector<std::uint32_t> rows{std::min(i1, i2), std::max(i1, i2)};
            for (std::uint32_t r = 0; r < R && static_cast<int>(rows.size()) < K; ++r) {
                if (r == i1 || r == i2) continue;
                const std::uint64_t cand = acc & masks[r];
                if (__builtin_popcountll(cand) >= K) {
                    acc = cand;
                    rows.push_back(r);
                }
            }
            if (static_cast<int>(rows.size()) >= K) {
                std::sort(rows.begin(), rows.end());
                res.status = RectStatus::FoundWitness;
                res.witness = detail::mask_witness(rows, acc, K, color);
                return res;
            }
        }
    }
    res.status = RectStatus::NoneFound;
    return res;
}

/// Exhaustive count of monochromatic K x K rectangles (both colors).
inline std::uint64_t count_monochromatic_rectangles(const EdgeFn& edge, std::uint32_t R,
                                                    std::uint32_t C, int K) {
    if (C > 64) throw std::invalid_argument("count: column count above 64 unsupported");
    if (K > static_cast<int>(R) || K > static_cast<int>(C)) return 0;
    const auto ones = detail::row_masks(edge, R, C, 1);
    std::vector<std::uint64_t> zeros(R);
    const std::uint64_t colmask = C == 64 ? ~0ull : ((1ull << C) - 1);
    for (std::uint32_t i = 0; i < R; ++i) zeros[i] = ~ones[i] & colmask;

    auto choose = [](int n, int k) {
        if (k < 0 || k > n) return 0.0;
        double c = 1;
        for (int i = 0; i < k; ++i) c *= static_cast<double>(n - i) / (i + 1);
        return c;
    };

    std::uint64_t total = 0;
    std::vector<std::uint32_t> idx(K);
    for (int i = 0; i < K; ++i) idx[i] = i;
    for (;;) {
        for (int color = 1; color >= 0; --color) {
            const auto& masks = color ? ones : zeros;
            std::uint64_t acc = colmask;
            for (int i = 0; i < K; ++i) acc &= masks[idx[i]];
            total += static_cast<std::uint64_t>(choose(__builtin_popcountll(acc), K) + 0.5);
        }
        int i = K - 1;
        while (i >= 0 && idx[i] == R - static_cast<std::uint32_t>(K - i)) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < K; ++j) idx[j] = idx[j - 1] + 1;
    }
    return total;
}

}  // namespace subx
