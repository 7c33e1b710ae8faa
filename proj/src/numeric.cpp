#include "ccvt/numeric.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace ccvt {

namespace {

std::string trimmed(const std::string& text) {
    size_t a = 0, b = text.size();
    while (a < b && std::isspace(static_cast<unsigned char>(text[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
    return text.substr(a, b - a);
}

}  // namespace

double parse_double(const std::string& text) {
    const std::string s = trimmed(text);
    if (s.empty()) throw std::invalid_argument("empty number");
    const size_t slash = s.find('/');
    if (slash != std::string::npos) {
        const double num = parse_double(s.substr(0, slash));
        const double den = parse_double(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
        return num / den;
    }
    size_t used = 0;
    double v;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse number '" + text + "'");
    }
    if (used != s.size()) throw std::invalid_argument("trailing junk in number '" + text + "'");
    return v;
}

rational parse_rational(const std::string& text) {
    const std::string s = trimmed(text);
    if (s.empty()) throw std::invalid_argument("empty number");
    const size_t slash = s.find('/');
    if (slash != std::string::npos) {
        rational num = parse_rational(s.substr(0, slash));
        rational den = parse_rational(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
        rational q = num / den;
        q.canonicalize();
        return q;
    }
    bool negative = false;
    size_t pos = 0;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        negative = (s[pos] == '-');
        ++pos;
    }
    std::string digits;
    long frac_len = 0;
    bool seen_dot = false, seen_digit = false;
    for (; pos < s.size(); ++pos) {
        const char c = s[pos];
        if (c == '.') {
            if (seen_dot) throw std::invalid_argument("malformed number '" + text + "'");
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            if (seen_dot) ++frac_len;
            seen_digit = true;
        } else {
            throw std::invalid_argument(
                "rational mode cannot parse '" + text + "' (use a/b or a plain decimal)");
        }
    }
    if (!seen_digit) throw std::invalid_argument("malformed number '" + text + "'");
    mpz_class num(digits.empty() ? "0" : digits, 10);
    mpz_class den = 1;
    for (long i = 0; i < frac_len; ++i) den *= 10;
    rational q(num, den);
    q.canonicalize();
    if (negative) q = -q;
    return q;
}

std::string format_real(double v) {
    if (v == 0.0) return "0";
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    const double mag = std::fabs(v);
    int exponent = static_cast<int>(std::floor(std::log10(mag)));
    // log10 can land one off at power-of-ten boundaries; nudge into place.
    if (std::pow(10.0, exponent) > mag) --exponent;
    if (std::pow(10.0, exponent + 1) <= mag) ++exponent;
    int precision = 11 - exponent;
    if (precision < 0) precision = 0;
    if (precision > 40) precision = 40;
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string format_real(const rational& v) { return format_real(v.get_d()); }

std::string exact_string(const rational& v) { return v.get_str(); }

}  // namespace ccvt
