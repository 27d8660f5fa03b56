#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "bitstring.hpp"

namespace subx {

/// Address of a node in the complete binary tree associated with a string:
/// a sequence of left/right steps from the root (0 = left, 1 = right).
class TreeNode {
public:
    TreeNode() = default;

    static TreeNode root() { return TreeNode(); }

    static TreeNode from_string(const std::string& path) {
        TreeNode v;
        for (char c : path) {
            if (c == '0') v = v.leftson();
            else if (c == '1') v = v.rightson();
            else throw std::invalid_argument("tree node: bad path character");
        }
        return v;
    }

    int depth() const { return depth_; }
    bool is_root() const { return depth_ == 0; }

    bool step(int i) const {
        if (i < 0 || i >= depth_) throw std::out_of_range("tree node: step index");
        return (path_ >> i) & 1u;
    }

    TreeNode leftson() const { return child(false); }
    TreeNode rightson() const { return child(true); }

    TreeNode parent() const {
        if (depth_ == 0) throw std::invalid_argument("tree node: root has no parent");
        TreeNode v = *this;
        --v.depth_;
        v.path_ &= (1u << v.depth_) - 1u;
        return v;
    }

    /// Prefix of the path at the given depth.
    TreeNode ancestor_at(int d) const {
        if (d < 0 || d > depth_) throw std::out_of_range("tree node: ancestor depth");
        TreeNode v;
        v.depth_ = d;
        v.path_ = path_ & ((d == 32 ? ~0u : (1u << d)) - 1u);
        return v;
    }

    bool is_ancestor_or_self_of(const TreeNode& other) const {
        return depth_ <= other.depth_ && other.ancestor_at(depth_) == *this;
    }

    bool is_strict_ancestor_of(const TreeNode& other) const {
        return depth_ < other.depth_ && is_ancestor_or_self_of(other);
    }

    std::string to_string() const {
        std::string s;
        for (int i = 0; i < depth_; ++i) s.push_back(step(i) ? '1' : '0');
        return s;
    }

    /// First bit index of the substring x_v inside an n-bit string.
    int substring_start(int n) const {
        if (depth_ > ilog2(n)) throw std::out_of_range("tree node: deeper than tree");
        int start = 0;
        for (int i = 0; i < depth_; ++i)
            if (step(i)) start += n >> (i + 1);
        return start;
    }

    int substring_len(int n) const {
        if (depth_ > ilog2(n)) throw std::out_of_range("tree node: deeper than tree");
        return n >> depth_;
    }

    bool operator==(const TreeNode& other) const {
        return depth_ == other.depth_ && path_ == other.path_;
    }
    bool operator!=(const TreeNode& other) const { return !(*this == other); }
    bool operator<(const TreeNode& other) const {
        if (depth_ != other.depth_) return depth_ < other.depth_;
        return path_ < other.path_;
    }

private:
    TreeNode child(bool right) const {
        if (depth_ >= 31) throw std::out_of_range("tree node: too deep");
        TreeNode v = *this;
        if (right) v.path_ |= (1u << depth_);
        ++v.depth_;
        return v;
    }

    int depth_ = 0;
    std::uint32_t path_ = 0;
};

/// The substring of x associated with node v by the recursive
/// left-half / right-half decomposition.
inline BitString node_substring(const BitString& x, const TreeNode& v) {
    const int n = x.size();
    return x.slice(v.substring_start(n), v.substring_len(n));
}

}  // namespace subx
