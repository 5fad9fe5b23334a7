#ifndef MQM_RATIONAL_HPP
#define MQM_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mqm {

// Exact non-negative rational, always kept reduced with den > 0.
// Frame rates and downsampling factors are represented this way so that
// cluster arithmetic never touches floating point.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;

    Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
        if (den == 0)
            throw std::invalid_argument("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    bool positive() const { return num > 0; }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    std::string str() const {
        if (den == 1)
            return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num * b.den < b.num * a.den;
    }
    friend bool operator<=(const Rational& a, const Rational& b) {
        return a.num * b.den <= b.num * a.den;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }
};

// Parses "30" or "30000/1001". Decimal rates are rejected on purpose:
// 29.97 is not exactly representable and would corrupt the cluster math,
// callers must pass the exact fraction instead.
Rational parse_rational(std::string_view text);

}  // namespace mqm

#endif
