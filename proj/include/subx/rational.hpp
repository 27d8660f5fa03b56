#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>

namespace subx {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// 2^e as an exact rational, e may be negative.
inline Rational pow2_rational(int e) {
    BigInt one = 1;
    if (e >= 0) return Rational(one << e);
    return Rational(one, one << (-e));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// -log2(r) for r in (0, 1]; exact-to-double for the magnitudes used here.
inline double neg_log2(const Rational& r) {
    if (r <= 0) throw std::domain_error("neg_log2: nonpositive");
    const double d = to_double(r);
    if (d > 0 && std::isfinite(d)) return -std::log2(d);
    // fall back for extreme magnitudes
    const double ln = static_cast<double>(boost::multiprecision::msb(boost::multiprecision::numerator(r)));
    const double ld = static_cast<double>(boost::multiprecision::msb(boost::multiprecision::denominator(r)));
    return ld - ln;
}

inline bool is_integral(double x, double tol = 1e-12) {
    return std::abs(x - std::round(x)) <= tol;
}

}  // namespace subx
