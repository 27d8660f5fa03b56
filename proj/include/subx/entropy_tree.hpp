#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distance.hpp"
#include "source.hpp"
#include "tree_node.hpp"

namespace subx {

enum class Label { F, H, Btop, Bmid, Bbot };

inline std::string label_name(Label l) {
    switch (l) {
        case Label::F: return "F";
        case Label::H: return "H";
        case Label::Btop: return "Btop";
        case Label::Bmid: return "Bmid";
        case Label::Bbot: return "Bbot";
    }
    return "?";
}

inline Label label_from_name(const std::string& s) {
    if (s == "F") return Label::F;
    if (s == "H") return Label::H;
    if (s == "Btop") return Label::Btop;
    if (s == "Bmid") return Label::Bmid;
    if (s == "Bbot") return Label::Bbot;
    throw std::invalid_argument("entropy tree: unknown label " + s);
}

/// Labeled complete binary tree recording where fixed blocks, high-entropy
/// blocks, and the nested block-sources sit. Trees carrying only Btop, or
/// Btop+Bmid, are trimmed variants: the deepest block label is terminal.
struct EntropyTree {
    int depth = 0;
    std::map<std::string, Label> labels;  // keyed by node path

    std::optional<Label> label_of(const TreeNode& v) const {
        auto it = labels.find(v.to_string());
        if (it == labels.end()) return std::nullopt;
        return it->second;
    }

    std::optional<TreeNode> find_unique(Label l) const {
        std::optional<TreeNode> found;
        for (const auto& [path, lbl] : labels)
            if (lbl == l) {
                if (found) return std::nullopt;  // not unique
                found = TreeNode::from_string(path);
            }
        return found;
    }

    int levels() const {
        bool mid = false, bot = false;
        for (const auto& [path, lbl] : labels) {
            mid |= (lbl == Label::Bmid);
            bot |= (lbl == Label::Bbot);
        }
        return bot ? 3 : (mid ? 2 : 1);
    }

    /// The deepest block label present, acting as the dig terminal.
    Label terminal_label() const {
        const int lv = levels();
        return lv == 3 ? Label::Bbot : (lv == 2 ? Label::Bmid : Label::Btop);
    }

    json to_json() const {
        json lbl = json::object();
        for (const auto& [path, l] : labels) lbl[path] = label_name(l);
        return json{{"depth", depth}, {"labels", lbl}};
    }

    static EntropyTree from_json(const json& j) {
        EntropyTree t;
        t.depth = j.at("depth").get<int>();
        for (const auto& [path, name] : j.at("labels").items())
            t.labels[path] = label_from_name(name.get<std::string>());
        return t;
    }
};

struct TreeViolation {
    std::string node;
    std::string rule;
};

/// Empty result means the label rules hold.
inline std::vector<TreeViolation> validate_tree(const EntropyTree& t) {
    std::vector<TreeViolation> out;
    auto add = [&](const std::string& node, const std::string& rule) {
        out.push_back({node, rule});
    };

    int count_top = 0, count_mid = 0, count_bot = 0;
    for (const auto& [path, lbl] : t.labels) {
        if (static_cast<int>(path.size()) > t.depth) add(path, "label beyond tree depth");
        if (lbl == Label::Btop) ++count_top;
        if (lbl == Label::Bmid) ++count_mid;
        if (lbl == Label::Bbot) ++count_bot;
    }
    if (count_top != 1) add("", "uniqueness: exactly one Btop required");
    if (count_mid > 1) add("", "uniqueness: at most one Bmid");
    if (count_bot > 1) add("", "uniqueness: at most one Bbot");
    if (count_bot == 1 && count_mid == 0) add("", "Bbot requires Bmid");

    auto root_label = t.label_of(TreeNode::root());
    if (!root_label || (*root_label != Label::H && *root_label != Label::Btop))
        add("", "root must be labeled H or Btop");

    const auto vtop = t.find_unique(Label::Btop);
    const auto vmid = t.find_unique(Label::Bmid);
    const auto vbot = t.find_unique(Label::Bbot);
    if (count_mid == 1 && vtop && vmid) {
        if (vtop->depth() >= t.depth || !vtop->leftson().is_ancestor_or_self_of(*vmid))
            add(vmid->to_string(), "Bmid must descend from leftson(Btop)");
    }
    if (count_bot == 1 && vmid && vbot) {
        if (vmid->depth() >= t.depth || !vmid->leftson().is_ancestor_or_self_of(*vbot))
            add(vbot->to_string(), "Bbot must descend from leftson(Bmid)");
    }

    const Label terminal = t.terminal_label();
    // walk every labeled or son-of-labeled node
    for (const auto& [path, lbl] : t.labels) {
        const TreeNode v = TreeNode::from_string(path);
        if (v.depth() >= t.depth) continue;  // leaf of this tree: no son rules
        const auto left = t.label_of(v.leftson());
        const auto right = t.label_of(v.rightson());
        const bool chain_label =
            lbl == Label::H || ((lbl == Label::Btop || lbl == Label::Bmid) && lbl != terminal);
        if (chain_label) {
            if (!left) {
                add(path, "H-like node needs a labeled left son");
            } else if (*left == Label::F) {
                if (!right) add(path, "left son F requires a labeled right son");
                else if (*right == Label::F) add(path, "right son must not be F");
            } else if (right) {
                add(path, "right son must be unlabeled when left son is not F");
            }
        } else {  // F, terminal block, or Bbot
            if (left) add(path, "F/terminal sons must be unlabeled");
            if (right) add(path, "F/terminal sons must be unlabeled");
        }
    }
    // unlabeled nodes with labeled sons
    for (const auto& [path, lbl] : t.labels) {
        const TreeNode v = TreeNode::from_string(path);
        if (!v.is_root() && !t.label_of(v.parent())) add(path, "labeled son of an unlabeled node");
    }
    return out;
}

/// Unique root-to-terminal-block path.
inline std::vector<TreeNode> entropy_path(const EntropyTree& t) {
    if (!validate_tree(t).empty()) throw std::invalid_argument("entropy_path: invalid tree");
    const auto target = t.find_unique(t.terminal_label());
    if (!target) throw std::invalid_argument("entropy_path: missing terminal block node");
    std::vector<TreeNode> path;
    for (int d = 0; d <= target->depth(); ++d) path.push_back(target->ancestor_at(d));
    return path;
}

struct StructureCheck {
    std::string node;
    std::string kind;  // "fixed" | "min-entropy" | "block-distance"
    double measured = 0;
    double required = 0;
    bool pass = false;
};

struct StructureReport {
    std::vector<StructureCheck> checks;
    bool pass = true;

    json to_json() const {
        json rows = json::array();
        for (const auto& c : checks)
            rows.push_back(json{{"node", c.node},
                                {"kind", c.kind},
                                {"measured", c.measured},
                                {"required", c.required},
                                {"pass", c.pass}});
        return json{{"checks", rows}, {"pass", pass}};
    }
};

/// Checks that src realizes the tree's labels at parameter k: fixed nodes
/// are point masses, block nodes are eps-close to block-sources at the
/// k^(1/2) / k^(1/4) / k^(1/8) levels, and H nodes clear the min-entropy
/// threshold implied by their position relative to Btop and Bmid. The
/// position test is syntactic on the tree only.
inline StructureReport validate_structure(const ExplicitSource& src, const EntropyTree& t,
                                          double k, double eps) {
    if (!validate_tree(t).empty())
        throw std::invalid_argument("validate_structure: invalid tree");
    if (!is_pow2(src.n()) || ilog2(src.n()) < t.depth)
        throw std::invalid_argument("validate_structure: source shape mismatch");

    const auto vtop = t.find_unique(Label::Btop);
    const auto vmid = t.find_unique(Label::Bmid);
    StructureReport rep;

    for (const auto& [path, lbl] : t.labels) {
        const TreeNode v = TreeNode::from_string(path);
        const ExplicitSource marg = marginalize(src, v);
        StructureCheck c;
        c.node = path;
        switch (lbl) {
            case Label::F:
                c.kind = "fixed";
                c.measured = static_cast<double>(marg.support_size());
                c.required = 1;
                c.pass = marg.support_size() == 1;
                break;
            case Label::Btop:
            case Label::Bmid:
            case Label::Bbot: {
                c.kind = "block-distance";
                const double level = lbl == Label::Btop   ? std::sqrt(k)
                                     : lbl == Label::Bmid ? std::pow(k, 0.25)
                                                          : std::pow(k, 0.125);
                c.required = eps;
                if (level > marg.n() / 2.0 + 1e-12) {
                    c.measured = 1.0;  // level unreachable at this block size
                    c.pass = false;
                } else {
                    c.measured = distance_to_block_source(marg, level);
                    c.pass = c.measured <= eps + 1e-12;
                }
                break;
            }
            case Label::H: {
                c.kind = "min-entropy";
                double thr;
                if (vtop && v.is_strict_ancestor_of(*vtop)) thr = k;
                else if (vtop && vtop->is_strict_ancestor_of(v) && vmid &&
                         v.is_strict_ancestor_of(*vmid))
                    thr = std::sqrt(k);
                else if (vmid && vmid->is_strict_ancestor_of(v)) thr = std::pow(k, 0.25);
                else thr = k;  // isolated H defaults to the top threshold
                c.required = thr;
                c.measured = distance_to_min_entropy(marg, std::min(thr, static_cast<double>(marg.n())));
                c.pass = thr <= marg.n() && c.measured <= 1e-9;
                break;
            }
        }
        rep.checks.push_back(c);
        rep.pass = rep.pass && c.pass;
    }
    return rep;
}

}  // namespace subx
