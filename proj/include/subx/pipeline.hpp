#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "challenge_response.hpp"
#include "extractors.hpp"
#include "tree_node.hpp"

namespace subx {

using Responder =
    std::function<ResponseVerdict(const BitString& first, const BitString& second,
                                  const BitString& challenge)>;

enum class BextKind { Ip, Table };

/// Configuration of one sub-extractor instance. Challenge-response runs
/// at two widths (step 1 on log2(n) x ell matrices, step 2 on
/// log2(n) x ell' matrices), so two somewhere-extractor instances are
/// carried. Responder overrides exist for tests that stub verdicts.
struct PipelineConfig {
    int n = 0;
    int ell = 0;
    int m = 0;
    BextKind bext_kind = BextKind::Table;
    std::uint64_t bext_seed = 0;
    std::shared_ptr<const SomewhereExtractor> se1, se2;
    Responder responder1, responder2;

    int log2n() const { return ilog2(n); }

    int ell_prime() const {
        const int d = log2n();
        return std::max(1, ell / (d * d * d));
    }

    int step1_width() const { return log2n() * ell; }
    int step2_width() const { return log2n() * ell_prime(); }

    std::shared_ptr<const BlockWeakExtractor> make_bext(int t, int nn, int mm) const {
        if (bext_kind == BextKind::Ip) return std::make_shared<IpExtractor>(t, nn, mm);
        return std::make_shared<TableExtractor>(t, nn, mm, bext_seed);
    }

    void validate() const {
        if (!is_pow2(n) || n < 4) throw std::invalid_argument("pipeline: n must be a power of two >= 4");
        if (ell < 1 || m < 1) throw std::invalid_argument("pipeline: ell and m must be positive");
        if (!responder1 && (!se1 || se1->row_width() != step1_width() || se1->n() != n))
            throw std::invalid_argument("pipeline: step-1 somewhere-extractor width mismatch");
        if (!responder2 && (!se2 || se2->row_width() != step2_width() || se2->n() != n))
            throw std::invalid_argument("pipeline: step-2 somewhere-extractor width mismatch");
    }

    ResponseVerdict respond1(const BitString& first, const BitString& second,
                             const BitString& ch) const {
        if (responder1) return responder1(first, second, ch);
        return respond(first, second, ch, *se1);
    }

    ResponseVerdict respond2(const BitString& first, const BitString& second,
                             const BitString& ch) const {
        if (responder2) return responder2(first, second, ch);
        return respond(first, second, ch, *se2);
    }
};

/// Default instantiation: table-backed extractor rows and rotation
/// somewhere-extractors with table inners at both challenge widths.
inline PipelineConfig make_default_config(int n, int ell, int m, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.n = n;
    cfg.ell = ell;
    cfg.m = m;
    cfg.bext_kind = BextKind::Table;
    cfg.bext_seed = seed;
    cfg.se1 = std::make_shared<RotationSE>(
        std::make_shared<TableExtractor>(n, n, cfg.step1_width(), detail::mix64(seed ^ 0x5e1)), n);
    cfg.se2 = std::make_shared<RotationSE>(
        std::make_shared<TableExtractor>(n, n, cfg.step2_width(), detail::mix64(seed ^ 0x5e2)), n);
    cfg.validate();
    return cfg;
}

/// log2(n) x ell bit matrix; rows above the owning node's depth stay zero.
struct ChallengeMatrix {
    std::vector<BitString> rows;

    BitString flatten() const {
        BitString out = rows.at(0);
        for (std::size_t i = 1; i < rows.size(); ++i) out = out.concat(rows[i]);
        return out;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(r.to_hex());
        return arr;
    }
};

namespace detail {

/// Step-1 recursion for one side. `self` owns the tree being walked;
/// `other` plays the weak input. Matrices and favored-son decisions are
/// memoized for the lifetime of this evaluation only.
class StepOneSide {
public:
    StepOneSide(const BitString& self, const BitString& other, const PipelineConfig& cfg)
        : self_(self), other_(other), cfg_(cfg), depth_(cfg.log2n()) {}

    const ChallengeMatrix& matrix(const TreeNode& v) {
        auto it = matrices_.find(v);
        if (it != matrices_.end()) return it->second;
        ChallengeMatrix M;
        M.rows.assign(depth_, BitString::zeros(cfg_.ell));
        if (v.depth() < depth_) {
            const BitString sub = node_substring(self_, v);
            M.rows[v.depth()] = row_bext(sub.size())->eval(sub, other_);
            if (v.depth() < depth_ - 1) {
                const TreeNode son = favors_right(v) ? v.rightson() : v.leftson();
                const ChallengeMatrix& inner = matrix(son);
                for (int j = v.depth() + 1; j < depth_; ++j) M.rows[j] = inner.rows[j];
            }
        }
        return matrices_.emplace(v, std::move(M)).first->second;
    }

    /// Decision at a node of depth < log2(n): Fixed response to the left
    /// son's challenge favors the right son.
    bool favors_right(const TreeNode& v) {
        auto it = favored_.find(v);
        if (it != favored_.end()) return it->second;
        const BitString ch = matrix(v.leftson()).flatten();
        const BitString first = pad_block(node_substring(self_, v), cfg_.n);
        const bool right = cfg_.respond1(first, other_, ch) == ResponseVerdict::Fixed;
        return favored_.emplace(v, right).first->second;
    }

    std::vector<TreeNode> observed_path() {
        std::vector<TreeNode> path{TreeNode::root()};
        for (int d = 0; d < depth_; ++d) {
            const TreeNode v = path.back();
            path.push_back(favors_right(v) ? v.rightson() : v.leftson());
        }
        return path;
    }

    const std::map<TreeNode, bool>& decisions() const { return favored_; }
    const std::map<TreeNode, ChallengeMatrix>& matrices() const { return matrices_; }

    void force_all_nodes() {
        for (int d = depth_ - 1; d >= 0; --d)
            for (std::uint32_t p = 0; p < (1u << d); ++p) {
                TreeNode v = TreeNode::root();
                for (int i = 0; i < d; ++i) v = ((p >> i) & 1u) ? v.rightson() : v.leftson();
                favors_right(v);
            }
    }

private:
    std::shared_ptr<const BlockWeakExtractor> row_bext(int t) {
        auto it = bexts_.find(t);
        if (it == bexts_.end())
            it = bexts_.emplace(t, cfg_.make_bext(t, cfg_.n, cfg_.ell)).first;
        return it->second;
    }

    const BitString& self_;
    const BitString& other_;
    const PipelineConfig& cfg_;
    int depth_;
    std::map<TreeNode, ChallengeMatrix> matrices_;
    std::map<TreeNode, bool> favored_;
    std::map<int, std::shared_ptr<const BlockWeakExtractor>> bexts_;
};

}  // namespace detail

/// ch(x_v, y): the step-1 challenge matrix of node v on the x-side tree.
inline ChallengeMatrix challenge_matrix(const BitString& x, const BitString& y, const TreeNode& v,
                                        const PipelineConfig& cfg) {
    cfg.validate();
    detail::StepOneSide side(x, y, cfg);
    return side.matrix(v);
}

/// Observed entropy-paths of both trees, root to leaf.
inline std::pair<std::vector<TreeNode>, std::vector<TreeNode>> observed_paths(
    const BitString& x, const BitString& y, const PipelineConfig& cfg) {
    cfg.validate();
    detail::StepOneSide sx(x, y, cfg), sy(y, x, cfg);
    return {sx.observed_path(), sy.observed_path()};
}

/// Step-2 node-path challenge: row j applies the extractor at width ell'
/// to the path node y_{w_j} against x_v.
inline ChallengeMatrix node_path_challenge(const BitString& x, const BitString& y,
                                           const TreeNode& v, const std::vector<TreeNode>& path,
                                           const PipelineConfig& cfg) {
    const int d = cfg.log2n();
    if (static_cast<int>(path.size()) < d)
        throw std::invalid_argument("node_path_challenge: path too short");
    const BitString xv = node_substring(x, v).zero_extend(cfg.n);
    ChallengeMatrix M;
    M.rows.reserve(d);
    for (int j = 0; j < d; ++j) {
        const BitString yw = node_substring(y, path[j]);
        M.rows.push_back(cfg.make_bext(yw.size(), cfg.n, cfg.ell_prime())->eval(yw, xv));
    }
    return M;
}

/// Deepest node of pObs whose node-path challenge draws HasEnt; falls back
/// to the root when every challenge is responded.
inline TreeNode observed_vmid(const BitString& x, const BitString& y,
                              const std::vector<TreeNode>& pobs,
                              const std::vector<TreeNode>& qobs, const PipelineConfig& cfg) {
    for (auto it = pobs.rbegin(); it != pobs.rend(); ++it) {
        const BitString ch = node_path_challenge(x, y, *it, qobs, cfg).flatten();
        if (cfg.respond2(x, y, ch) == ResponseVerdict::HasEnt) return *it;
    }
    return TreeNode::root();
}

/// Full record of one evaluation.
struct PipelineTrace {
    int n = 0;
    BitString x, y;
    std::map<std::string, bool> favored_right_x, favored_right_y;
    std::vector<TreeNode> pobs, qobs;
    std::vector<std::pair<TreeNode, ResponseVerdict>> step2;
    TreeNode vmid;
    BitString output;
    std::map<std::string, ChallengeMatrix> matrices_x, matrices_y;

    json to_json() const {
        auto path_json = [](const std::vector<TreeNode>& p) {
            json arr = json::array();
            for (const auto& v : p) arr.push_back(v.to_string());
            return arr;
        };
        json fx = json::object(), fy = json::object();
        for (const auto& [node, r] : favored_right_x) fx[node] = r;
        for (const auto& [node, r] : favored_right_y) fy[node] = r;
        json mats_x = json::object(), mats_y = json::object();
        for (const auto& [node, m] : matrices_x) mats_x[node] = m.to_json();
        for (const auto& [node, m] : matrices_y) mats_y[node] = m.to_json();
        json s2 = json::array();
        for (const auto& [v, verdict] : step2)
            s2.push_back(json{{"node", v.to_string()}, {"verdict", verdict_name(verdict)}});
        return json{{"n", n},
                    {"x", x.to_string()},
                    {"y", y.to_string()},
                    {"favoredRightX", fx},
                    {"favoredRightY", fy},
                    {"pObs", path_json(pobs)},
                    {"qObs", path_json(qobs)},
                    {"step2Verdicts", s2},
                    {"vMidObs", vmid.to_string()},
                    {"output", output.to_string()},
                    {"challengesX", mats_x},
                    {"challengesY", mats_y}};
    }
};

namespace detail {

inline BitString step3_output(const BitString& x, const BitString& y, const TreeNode& vmid,
                              const PipelineConfig& cfg) {
    // left block: x_vmid right-padded with zeros to n bits; right block: x.
    const BitString left = node_substring(x, vmid).zero_extend(cfg.n);
    const BitString block = left.concat(x);
    const BitString weak = y.zero_extend(2 * cfg.n);
    return cfg.make_bext(2 * cfg.n, 2 * cfg.n, cfg.m)->eval(block, weak);
}

}  // namespace detail

inline BitString subext(const BitString& x, const BitString& y, const PipelineConfig& cfg) {
    cfg.validate();
    if (x.size() != cfg.n || y.size() != cfg.n)
        throw std::invalid_argument("subext: input length mismatch");
    detail::StepOneSide sx(x, y, cfg), sy(y, x, cfg);
    const auto pobs = sx.observed_path();
    const auto qobs = sy.observed_path();
    const TreeNode vmid = observed_vmid(x, y, pobs, qobs, cfg);
    return detail::step3_output(x, y, vmid, cfg);
}

inline PipelineTrace subext_trace(const BitString& x, const BitString& y,
                                  const PipelineConfig& cfg) {
    cfg.validate();
    if (x.size() != cfg.n || y.size() != cfg.n)
        throw std::invalid_argument("subext: input length mismatch");
    detail::StepOneSide sx(x, y, cfg), sy(y, x, cfg);
    sx.force_all_nodes();
    sy.force_all_nodes();

    PipelineTrace tr;
    tr.n = cfg.n;
    tr.x = x;
    tr.y = y;
    tr.pobs = sx.observed_path();
    tr.qobs = sy.observed_path();
    for (const auto& [v, r] : sx.decisions()) tr.favored_right_x[v.to_string()] = r;
    for (const auto& [v, r] : sy.decisions()) tr.favored_right_y[v.to_string()] = r;
    for (const auto& [v, m] : sx.matrices()) tr.matrices_x[v.to_string()] = m;
    for (const auto& [v, m] : sy.matrices()) tr.matrices_y[v.to_string()] = m;

    for (const auto& v : tr.pobs) {
        const BitString ch = node_path_challenge(x, y, v, tr.qobs, cfg).flatten();
        tr.step2.emplace_back(v, cfg.respond2(x, y, ch));
    }
    tr.vmid = TreeNode::root();
    for (auto it = tr.step2.rbegin(); it != tr.step2.rend(); ++it)
        if (it->second == ResponseVerdict::HasEnt) {
            tr.vmid = it->first;
            break;
        }
    tr.output = detail::step3_output(x, y, tr.vmid, cfg);
    return tr;
}

}  // namespace subx
