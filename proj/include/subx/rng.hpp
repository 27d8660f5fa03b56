#pragma once

#include <cstdint>

#include "bitstring.hpp"

namespace subx {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based splittable generator. A value is a pure function of
/// (key, counter), so identical states reproduce identical streams and
/// derived streams are independent of consumption order.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t key = 0) : key_(key) {}

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64() {
        return detail::mix64(key_ ^ detail::mix64(counter_++));
    }

    /// Child generator for an independent labeled stream.
    SplitRng split(std::uint64_t label) const {
        return SplitRng(detail::mix64(key_ ^ detail::mix64(detail::mix64(label) + 0x5851f42d4c957f2dull)));
    }

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * ((~0ull) / bound);
        for (;;) {
            const std::uint64_t v = next_u64();
            if (v < limit || limit == 0) return v % bound;
        }
    }

    bool next_bool() { return next_u64() & 1u; }

    double next_double() {  // in [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    BitString next_bits(int n) {
        BitString s(n);
        for (int i = 0; i < n; ++i) s.set(i, next_bool());
        return s;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace subx
