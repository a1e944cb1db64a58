#pragma once

#include <cmath>
#include <complex>
#include <span>

namespace sqlab {

/// Neumaier's variant of Kahan summation. Order of additions is the caller's
/// responsibility; results are reproducible for a fixed order.
class CompensatedSum {
public:
    CompensatedSum& add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }

    CompensatedSum& operator+=(double x) noexcept { return add(x); }

    CompensatedSum& operator+=(const CompensatedSum& other) noexcept {
        add(other.sum_);
        add(other.comp_);
        return *this;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    CompensatedComplexSum& add(std::complex<double> z) noexcept {
        re_.add(z.real());
        im_.add(z.imag());
        return *this;
    }

    CompensatedComplexSum& operator+=(const CompensatedComplexSum& other) noexcept {
        re_ += other.re_;
        im_ += other.im_;
        return *this;
    }

    [[nodiscard]] std::complex<double> value() const noexcept { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_;
    CompensatedSum im_;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

}  // namespace sqlab
