#pragma once

#include <cstdint>
#include <gmpxx.h>
#include <string>

namespace ccvt {

// Exact arithmetic mode. All core quantities (endpoints, weights, centroids,
// distortions) are field expressions in the inputs, so with rational inputs
// every result is exact and inequality checks need no tolerance.
using rational = mpq_class;

// Per-scalar glue: construction from exact fractions and input strings,
// conversion for printing, and the comparison tolerance to use in searches
// (rational mode always compares exactly).
template <typename S>
struct scalar_ops;

template <>
struct scalar_ops<double> {
    static constexpr bool exact = false;
    static double from_fraction(long long num, long long den) {
        return static_cast<double>(num) / static_cast<double>(den);
    }
    static double from_string(const std::string& text);
    static double to_double(double v) { return v; }
    static double tolerance(double requested) { return requested; }
    static double abs(double v) { return v < 0 ? -v : v; }
    static const char* mode_name() { return "float"; }
};

template <>
struct scalar_ops<rational> {
    static constexpr bool exact = true;
    static rational from_fraction(long long num, long long den) {
        rational q(mpz_class(static_cast<long>(num)), mpz_class(static_cast<long>(den)));
        q.canonicalize();
        return q;
    }
    static rational from_string(const std::string& text);
    static double to_double(const rational& v) { return v.get_d(); }
    static rational tolerance(double) { return rational(0); }
    static rational abs(const rational& v) { return ::abs(v); }
    static const char* mode_name() { return "rational"; }
};

// Parses "3/7", "0.4375", "1e-3" (float mode only for exponents) or "2".
double parse_double(const std::string& text);
rational parse_rational(const std::string& text);

inline double scalar_ops<double>::from_string(const std::string& text) {
    return parse_double(text);
}
inline rational scalar_ops<rational>::from_string(const std::string& text) {
    return parse_rational(text);
}

// Fixed decimal rendering with 12 significant digits and no exponent,
// so reports diff stably across runs and platforms.
std::string format_real(double v);
std::string format_real(const rational& v);

// "num/den" form, used for the exact fields emitted in rational mode.
std::string exact_string(const rational& v);

}  // namespace ccvt
