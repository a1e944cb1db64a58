#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>

#include "sqlab/arith.hpp"
#include "sqlab/error.hpp"

namespace sqlab {

/// Exact fraction with 64-bit numerator and positive 64-bit denominator,
/// always in lowest terms. Intermediate products use 128 bits; a result that
/// does not fit back into 64 bits throws OverflowError instead of wrapping.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(i64 n) : num_(n) {}  // NOLINT(google-explicit-constructor)
    Rational(i64 n, i64 d) { *this = make(n, d); }

    [[nodiscard]] constexpr i64 num() const noexcept { return num_; }
    [[nodiscard]] constexpr i64 den() const noexcept { return den_; }
    [[nodiscard]] double to_double() const noexcept {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }
    [[nodiscard]] constexpr bool is_zero() const noexcept { return num_ == 0; }
    [[nodiscard]] Rational abs() const noexcept { return from_reduced(num_ < 0 ? -num_ : num_, den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw DomainError("Rational: division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const { return make(-i128(num_), den_); }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ <=> i128(b.num_) * a.den_;
    }

    [[nodiscard]] std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    static i128 gcd128(i128 a, i128 b) noexcept {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b != 0) {
            const i128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    static Rational make(i128 n, i128 d) {
        if (d == 0) throw DomainError("Rational: zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const i128 g = gcd128(n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        constexpr i128 lo = std::numeric_limits<i64>::min() + 1;
        constexpr i128 hi = std::numeric_limits<i64>::max();
        if (n < lo || n > hi || d > hi) throw OverflowError("Rational: result exceeds 64-bit range");
        return from_reduced(static_cast<i64>(n), static_cast<i64>(d));
    }

    static constexpr Rational from_reduced(i64 n, i64 d) noexcept {
        Rational r;
        r.num_ = n;
        r.den_ = d;
        return r;
    }

    i64 num_ = 0;
    i64 den_ = 1;
};

}  // namespace sqlab
