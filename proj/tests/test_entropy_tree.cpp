#include <catch2/catch_amalgamated.hpp>

#include "subx/entropy_tree.hpp"

#include "support/generators.hpp"

using namespace subx;

namespace {

EntropyTree full_three_level_tree() {
    EntropyTree t;
    t.depth = 3;
    t.labels[""] = Label::Btop;
    t.labels["0"] = Label::Bmid;
    t.labels["00"] = Label::Bbot;
    return t;
}

bool has_violation(const std::vector<TreeViolation>& v, const std::string& needle) {
    for (const auto& x : v)
        if (x.rule.find(needle) != std::string::npos) return true;
    return false;
}

/// n=16 source realizing: "" H, "0" F, "1" Btop, "10" H, "100" Bmid at k=1.
ExplicitSource layered_source16() {
    std::vector<BitString> sup;
    const BitString c8 = BitString::from_string("01011010");
    for (std::uint64_t l = 0; l < 16; ++l)
        for (const char* r : {"0011", "1100"})
            sup.push_back(c8.concat(BitString::from_uint(l, 4)).concat(BitString::from_string(r)));
    return ExplicitSource::flat(sup);
}

EntropyTree layered_tree16() {
    EntropyTree t;
    t.depth = 4;
    t.labels[""] = Label::H;
    t.labels["0"] = Label::F;
    t.labels["1"] = Label::Btop;
    t.labels["10"] = Label::H;
    t.labels["100"] = Label::Bmid;
    return t;
}

}  // namespace

TEST_CASE("valid trees pass validation", "[tree]") {
    REQUIRE(validate_tree(full_three_level_tree()).empty());
    REQUIRE(validate_tree(layered_tree16()).empty());

    EntropyTree trimmed;  // single-level variant
    trimmed.depth = 2;
    trimmed.labels[""] = Label::Btop;
    REQUIRE(validate_tree(trimmed).empty());
    REQUIRE(trimmed.levels() == 1);
    REQUIRE(trimmed.terminal_label() == Label::Btop);
}

TEST_CASE("label rule violations are reported by node and rule", "[tree]") {
    {
        EntropyTree t = full_three_level_tree();
        t.labels["010"] = Label::Bbot;  // second Bbot
        REQUIRE(has_violation(validate_tree(t), "uniqueness"));
    }
    {
        EntropyTree t;
        t.depth = 2;
        t.labels[""] = Label::H;
        t.labels["0"] = Label::F;
        t.labels["1"] = Label::Btop;
        t.labels["00"] = Label::H;  // F node with a labeled son
        REQUIRE(has_violation(validate_tree(t), "unlabeled"));
    }
    {
        EntropyTree t;
        t.depth = 2;
        t.labels["0"] = Label::Btop;  // root unlabeled
        REQUIRE(has_violation(validate_tree(t), "root"));
    }
    {
        EntropyTree t;
        t.depth = 3;
        t.labels[""] = Label::Btop;
        t.labels["0"] = Label::H;
        t.labels["01"] = Label::Bmid;  // not under leftson(Bmid)'s chain rules
        t.labels["1"] = Label::H;     // also breaks the right-son rule
        auto v = validate_tree(t);
        REQUIRE(!v.empty());
    }
    {
        EntropyTree t = full_three_level_tree();
        t.labels.erase("00");  // Bmid present without Bbot is fine (two-level trim)
        REQUIRE(validate_tree(t).empty());
        REQUIRE(t.levels() == 2);
    }
}

TEST_CASE("entropy path runs root to terminal through the block chain", "[tree]") {
    const EntropyTree t = full_three_level_tree();
    const auto path = entropy_path(t);
    REQUIRE(path.size() == 3);
    REQUIRE(path[0] == TreeNode::root());
    REQUIRE(path[1] == TreeNode::from_string("0"));
    REQUIRE(path[2] == TreeNode::from_string("00"));
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        REQUIRE(path[i + 1].parent() == path[i]);

    // passes through Btop and Bmid
    const auto vtop = t.find_unique(Label::Btop);
    const auto vmid = t.find_unique(Label::Bmid);
    REQUIRE(std::find(path.begin(), path.end(), *vtop) != path.end());
    REQUIRE(std::find(path.begin(), path.end(), *vmid) != path.end());

    const auto layered = entropy_path(layered_tree16());
    REQUIRE(layered.size() == 4);
    REQUIRE(layered[1] == TreeNode::from_string("1"));
    REQUIRE(layered[3] == TreeNode::from_string("100"));
}

TEST_CASE("structure validation on a uniform source", "[tree]") {
    EntropyTree t;
    t.depth = 2;
    t.labels[""] = Label::Btop;
    const auto u4 = ExplicitSource::uniform(4);
    REQUIRE(validate_structure(u4, t, 4.0, 0.0).pass);       // sqrt(4) = 2 <= n/2
    REQUIRE(validate_structure(u4, t, 3.7, 0.0).pass);       // non-integral k
    REQUIRE(!validate_structure(u4, t, 4.9, 0.0).pass);      // sqrt exceeds n/2
}

TEST_CASE("structure validation flags broken labels", "[tree]") {
    EntropyTree t;
    t.depth = 2;
    t.labels[""] = Label::H;
    t.labels["0"] = Label::F;
    t.labels["1"] = Label::Btop;
    const auto u4 = ExplicitSource::uniform(4);  // left half is not fixed
    const auto rep = validate_structure(u4, t, 1.0, 0.0);
    REQUIRE(!rep.pass);
    bool f_failed = false;
    for (const auto& c : rep.checks)
        if (c.node == "0" && c.kind == "fixed") f_failed = !c.pass;
    REQUIRE(f_failed);
}

TEST_CASE("layered fixture validates and respects monotonicity", "[tree]") {
    const auto src = layered_source16();
    const auto t = layered_tree16();
    REQUIRE(validate_structure(src, t, 1.0, 0.0).pass);
    REQUIRE(validate_structure(src, t, 1.0, 0.25).pass);   // monotone in eps
    REQUIRE(!validate_structure(src, t, 9.0, 0.0).pass);   // antitone in k: root H needs 9 bits
}

TEST_CASE("tree json round trip", "[tree]") {
    const EntropyTree t = layered_tree16();
    const EntropyTree back = EntropyTree::from_json(t.to_json());
    REQUIRE(back.depth == t.depth);
    REQUIRE(back.labels == t.labels);
    REQUIRE(validate_tree(back).empty());
}
