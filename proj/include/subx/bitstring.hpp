#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace subx {

/// Fixed-length bit string. Positions are 1-based in the math notation;
/// here index 0 denotes the leftmost bit.
class BitString {
public:
    BitString() = default;

    explicit BitString(int n) : n_(n), w_((check_len(n) + 63) / 64, 0) {}

    static BitString zeros(int n) { return BitString(n); }

    static BitString ones(int n) {
        BitString s(n);
        for (int i = 0; i < n; ++i) s.set(i, true);
        return s;
    }

    static BitString from_string(const std::string& bits) {
        BitString s(static_cast<int>(bits.size()));
        for (int i = 0; i < s.n_; ++i) {
            if (bits[i] == '1') s.set(i, true);
            else if (bits[i] != '0') throw std::invalid_argument("bitstring: bad character");
        }
        return s;
    }

    /// Interprets the low n bits of v, most significant bit first,
    /// so from_uint(0b0101, 4) == "0101".
    static BitString from_uint(std::uint64_t v, int n) {
        if (n > 64) throw std::invalid_argument("bitstring: from_uint limited to 64 bits");
        BitString s(n);
        for (int i = 0; i < n; ++i) s.set(i, (v >> (n - 1 - i)) & 1u);
        return s;
    }

    int size() const { return n_; }

    bool bit(int i) const {
        range_check(i);
        return (w_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u;
    }

    void set(int i, bool v) {
        range_check(i);
        const std::uint64_t mask = 1ull << (i & 63);
        if (v) w_[static_cast<std::size_t>(i) >> 6] |= mask;
        else   w_[static_cast<std::size_t>(i) >> 6] &= ~mask;
    }

    BitString slice(int pos, int len) const {
        if (pos < 0 || len <= 0 || pos + len > n_) throw std::out_of_range("bitstring: bad slice");
        BitString s(len);
        for (int i = 0; i < len; ++i) s.set(i, bit(pos + i));
        return s;
    }

    BitString left_half() const { return slice(0, half_len()); }
    BitString right_half() const { return slice(half_len(), half_len()); }

    BitString concat(const BitString& other) const {
        BitString s(n_ + other.n_);
        for (int i = 0; i < n_; ++i) s.set(i, bit(i));
        for (int i = 0; i < other.n_; ++i) s.set(n_ + i, other.bit(i));
        return s;
    }

    /// Cyclic left shift by k: result[i] = this[(i + k) mod n].
    BitString rotl(int k) const {
        BitString s(n_);
        if (n_ == 0) return s;
        k %= n_;
        if (k < 0) k += n_;
        for (int i = 0; i < n_; ++i) s.set(i, bit((i + k) % n_));
        return s;
    }

    BitString operator^(const BitString& other) const {
        if (other.n_ != n_) throw std::invalid_argument("bitstring: xor length mismatch");
        BitString s(n_);
        for (std::size_t j = 0; j < w_.size(); ++j) s.w_[j] = w_[j] ^ other.w_[j];
        return s;
    }

    /// GF(2) inner product <this, other>.
    bool dot(const BitString& other) const {
        if (other.n_ != n_) throw std::invalid_argument("bitstring: dot length mismatch");
        std::uint64_t acc = 0;
        for (std::size_t j = 0; j < w_.size(); ++j) acc ^= (w_[j] & other.w_[j]);
        return __builtin_parityll(acc);
    }

    /// Right-pad with zeros to length n.
    BitString zero_extend(int n) const {
        if (n < n_) throw std::invalid_argument("bitstring: zero_extend shrinks");
        BitString s(n);
        for (int i = 0; i < n_; ++i) s.set(i, bit(i));
        return s;
    }

    std::uint64_t to_uint() const {
        if (n_ > 64) throw std::invalid_argument("bitstring: to_uint limited to 64 bits");
        std::uint64_t v = 0;
        for (int i = 0; i < n_; ++i) v = (v << 1) | static_cast<std::uint64_t>(bit(i));
        return v;
    }

    std::string to_string() const {
        std::string out(static_cast<std::size_t>(n_), '0');
        for (int i = 0; i < n_; ++i) if (bit(i)) out[static_cast<std::size_t>(i)] = '1';
        return out;
    }

    /// Hex with the leftmost bit as the most significant bit of the first
    /// digit; length is padded up to a whole number of digits.
    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (int pos = 0; pos < n_; pos += 4) {
            int nib = 0;
            for (int i = 0; i < 4; ++i) nib = (nib << 1) | ((pos + i < n_ && bit(pos + i)) ? 1 : 0);
            out.push_back(digits[nib]);
        }
        return out;
    }

    bool operator==(const BitString& other) const { return n_ == other.n_ && w_ == other.w_; }
    bool operator!=(const BitString& other) const { return !(*this == other); }

    /// Lexicographic by bit position, shorter strings first.
    bool operator<(const BitString& other) const {
        if (n_ != other.n_) return n_ < other.n_;
        for (std::size_t j = 0; j < w_.size(); ++j) {
            const std::uint64_t d = w_[j] ^ other.w_[j];
            if (d) {
                const int i = __builtin_ctzll(d);
                return ((w_[j] >> i) & 1u) == 0;  // first differing bit: 0 sorts first
            }
        }
        return false;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(n_);
        for (std::uint64_t w : w_) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return h;
    }

    const std::vector<std::uint64_t>& words() const { return w_; }

private:
    static int check_len(int n) {
        if (n <= 0) throw std::invalid_argument("bitstring: length must be positive");
        return n;
    }
    void range_check(int i) const {
        if (i < 0 || i >= n_) throw std::out_of_range("bitstring: index");
    }
    int half_len() const {
        if (n_ % 2 != 0) throw std::invalid_argument("bitstring: halves of odd-length string");
        return n_ / 2;
    }

    int n_ = 0;
    std::vector<std::uint64_t> w_;
};

inline int ilog2(int n) {
    if (n <= 0) throw std::invalid_argument("ilog2: nonpositive");
    int d = 0;
    while ((1 << d) < n) ++d;
    if ((1 << d) != n) throw std::invalid_argument("ilog2: not a power of two");
    return d;
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace subx
