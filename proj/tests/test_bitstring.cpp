#include <catch2/catch_amalgamated.hpp>

#include "subx/bitstring.hpp"
#include "subx/rng.hpp"
#include "subx/tree_node.hpp"

using namespace subx;

TEST_CASE("bitstring basics", "[bitstring]") {
    BitString s = BitString::from_string("0101");
    REQUIRE(s.size() == 4);
    REQUIRE(s.to_string() == "0101");
    REQUIRE(s.to_uint() == 0b0101);
    REQUIRE(BitString::from_uint(0b0101, 4) == s);
    REQUIRE(s.left_half().to_string() == "01");
    REQUIRE(s.right_half().to_string() == "01");
    REQUIRE(s.concat(BitString::from_string("11")).to_string() == "010111");
    REQUIRE(s.slice(1, 2).to_string() == "10");
    REQUIRE(s.rotl(1).to_string() == "1010");
    REQUIRE(s.rotl(4) == s);
    REQUIRE((s ^ BitString::from_string("1111")).to_string() == "1010");
    REQUIRE(s.zero_extend(6).to_string() == "010100");
    REQUIRE(BitString::from_string("0110").to_hex() == "6");
    REQUIRE(BitString::from_string("01100001").to_hex() == "61");
}

TEST_CASE("bitstring order is lexicographic by position", "[bitstring]") {
    REQUIRE(BitString::from_string("0011") < BitString::from_string("0100"));
    REQUIRE(BitString::from_string("10") < BitString::from_string("11"));
    REQUIRE(!(BitString::from_string("11") < BitString::from_string("11")));
    SplitRng rng(7);
    for (int i = 0; i < 200; ++i) {
        BitString a = rng.next_bits(9), b = rng.next_bits(9);
        REQUIRE((a < b) == (a.to_string() < b.to_string()));
    }
}

TEST_CASE("dot is the GF(2) inner product", "[bitstring]") {
    for (std::uint64_t x = 0; x < 16; ++x)
        for (std::uint64_t y = 0; y < 16; ++y) {
            bool expect = __builtin_parityll(x & y);
            REQUIRE(BitString::from_uint(x, 4).dot(BitString::from_uint(y, 4)) == expect);
        }
}

TEST_CASE("tree node substring association", "[tree]") {
    const BitString x = BitString::from_string("01100101");
    REQUIRE(node_substring(x, TreeNode::root()) == x);
    REQUIRE(node_substring(x, TreeNode::from_string("0")).to_string() == "0110");
    REQUIRE(node_substring(x, TreeNode::from_string("1")).to_string() == "0101");
    REQUIRE(node_substring(x, TreeNode::from_string("011")).to_string() == "0");  // bit x_4
    REQUIRE_THROWS(node_substring(x, TreeNode::from_string("0000")));
}

TEST_CASE("node substring concatenation identity", "[tree][property]") {
    SplitRng rng(11);
    for (int n : {2, 4, 8, 16}) {
        for (int rep = 0; rep < 20; ++rep) {
            const BitString x = rng.next_bits(n);
            for (int d = 0; d + 1 <= ilog2(n); ++d) {
                for (std::uint32_t p = 0; p < (1u << d); ++p) {
                    TreeNode v = TreeNode::root();
                    for (int i = 0; i < d; ++i) v = ((p >> i) & 1) ? v.rightson() : v.leftson();
                    REQUIRE(node_substring(x, v.leftson())
                                .concat(node_substring(x, v.rightson())) == node_substring(x, v));
                }
            }
        }
    }
}

TEST_CASE("tree node relations", "[tree]") {
    const TreeNode v = TreeNode::from_string("10");
    REQUIRE(v.parent() == TreeNode::from_string("1"));
    REQUIRE(v.leftson() == TreeNode::from_string("100"));
    REQUIRE(TreeNode::root().is_ancestor_or_self_of(v));
    REQUIRE(TreeNode::from_string("1").is_strict_ancestor_of(v));
    REQUIRE(!TreeNode::from_string("0").is_ancestor_or_self_of(v));
    REQUIRE(v.is_ancestor_or_self_of(v));
    REQUIRE(!v.is_strict_ancestor_of(v));
}

TEST_CASE("split rng determinism", "[rng]") {
    SplitRng a(42), b(42);
    for (int i = 0; i < 10; ++i) REQUIRE(a.next_u64() == b.next_u64());
    SplitRng c = a.split(1), d = b.split(1);
    REQUIRE(c.next_u64() == d.next_u64());
    SplitRng e = a.split(2);
    REQUIRE(c.key() != e.key());
}
