#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sqlab/error.hpp"

namespace sqlab {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// floor(a / b) for b != 0, rounding toward negative infinity.
constexpr i64 floor_div(i64 a, i64 b) noexcept {
    const i64 q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

constexpr i64 ceil_div(i64 a, i64 b) noexcept { return -floor_div(-a, b); }

/// Least non-negative residue of a mod m, m >= 1.
constexpr u64 mod_floor(i64 a, u64 m) noexcept {
    const i128 r = static_cast<i128>(a) % static_cast<i128>(m);
    return static_cast<u64>(r < 0 ? r + static_cast<i128>(m) : r);
}

constexpr u64 abs_u64(i64 x) noexcept {
    return x < 0 ? u64(0) - static_cast<u64>(x) : static_cast<u64>(x);
}

constexpr u64 mul_mod(u64 a, u64 b, u64 m) noexcept {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

constexpr u64 pow_mod(u64 base, u64 exp, u64 m) noexcept {
    u64 result = 1 % m;
    base %= m;
    while (exp != 0) {
        if (exp & 1u) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

/// floor(sqrt(n)), exact for all 64-bit n.
inline u64 isqrt(u64 n) noexcept {
    u64 r = static_cast<u64>(std::sqrt(static_cast<long double>(n)));
    while (r > 0 && static_cast<u128>(r) * r > n) --r;
    while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
    return r;
}

// ---------------------------------------------------------------------------
// Primes
// ---------------------------------------------------------------------------

/// All primes p <= limit, Eratosthenes over odd numbers.
inline std::vector<u64> primes_up_to(u64 limit) {
    std::vector<u64> out;
    if (limit < 2) return out;
    out.push_back(2);
    const u64 n_odd = (limit - 1) / 2;  // odd numbers 3, 5, ..., <= limit
    std::vector<bool> composite(n_odd + 1, false);
    for (u64 i = 1; i <= n_odd; ++i) {
        if (composite[i]) continue;
        const u64 p = 2 * i + 1;
        out.push_back(p);
        for (u64 j = (p * p - 1) / 2; j <= n_odd; j += p) composite[j] = true;
    }
    return out;
}

inline constexpr u64 kSmallPrimeLimit = 1'000'000;

/// Primes up to 10^6; enough to sieve squarefree indicators up to 10^12.
inline const std::vector<u64>& small_primes() {
    static const std::vector<u64> table = primes_up_to(kSmallPrimeLimit);
    return table;
}

/// Deterministic Miller-Rabin for all 64-bit inputs.
inline bool is_prime(u64 n) noexcept {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1u) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < s; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

/// Prime nearest to x; ties resolve to the smaller prime.
inline u64 nearest_prime(double x) {
    if (x <= 2.0) return 2;
    const u64 base = static_cast<u64>(std::floor(x));
    u64 below = base;
    while (!is_prime(below)) --below;
    u64 above = base + 1;
    while (!is_prime(above)) ++above;
    return (x - static_cast<double>(below) <= static_cast<double>(above) - x) ? below : above;
}

// ---------------------------------------------------------------------------
// Factorization
// ---------------------------------------------------------------------------

struct PrimePower {
    u64 prime;
    unsigned exponent;

    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

struct Factorization {
    u64 n = 1;
    std::vector<PrimePower> factors;  // strictly increasing primes

    [[nodiscard]] bool squarefree() const noexcept {
        for (const auto& f : factors)
            if (f.exponent > 1) return false;
        return true;
    }
};

namespace detail {

// Brent's variant of Pollard rho; n must be composite and odd.
inline u64 pollard_brent(u64 n) {
    if (n % 2 == 0) return 2;
    for (u64 c = 1;; ++c) {
        u64 y = 2, g = 1, q = 1, x = 2, ys = 2;
        const u64 m = 128;
        u64 r = 1;
        auto f = [&](u64 v) { return (mul_mod(v, v, n) + c) % n; };
        do {
            x = y;
            for (u64 i = 0; i < r; ++i) y = f(y);
            u64 k = 0;
            do {
                ys = y;
                for (u64 i = 0; i < std::min(m, r - k); ++i) {
                    y = f(y);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                g = std::gcd(q, n);
                k += m;
            } while (k < r && g == 1);
            r *= 2;
        } while (g == 1);
        if (g == n) {
            do {
                ys = f(ys);
                g = std::gcd(x > ys ? x - ys : ys - x, n);
            } while (g == 1);
        }
        if (g != n) return g;
    }
}

inline void split_large(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime(n)) {
        out.push_back(n);
        return;
    }
    const u64 d = pollard_brent(n);
    split_large(d, out);
    split_large(n / d, out);
}

}  // namespace detail

/// Prime factorization of 1 <= n <= 2^63. Trial division by the primes below
/// 10^6, then Miller-Rabin and Pollard-Brent on whatever cofactor is left.
inline Factorization factorize(u64 n) {
    if (n == 0) throw DomainError("factorize: n must be positive");
    if (n > (u64(1) << 63)) throw DomainError("factorize: n exceeds 2^63");
    Factorization fz{n, {}};
    u64 m = n;
    for (u64 p : small_primes()) {
        if (p * p > m) break;
        if (m % p != 0) continue;
        unsigned e = 0;
        while (m % p == 0) {
            m /= p;
            ++e;
        }
        fz.factors.push_back({p, e});
    }
    if (m == 1) return fz;
    if (m < kSmallPrimeLimit * kSmallPrimeLimit || is_prime(m)) {
        // m has no prime factor below min(sqrt(m), 10^6): prime
        fz.factors.push_back({m, 1});
        return fz;
    }
    std::vector<u64> rest;
    detail::split_large(m, rest);
    std::sort(rest.begin(), rest.end());
    for (u64 p : rest) {
        if (!fz.factors.empty() && fz.factors.back().prime == p)
            ++fz.factors.back().exponent;
        else
            fz.factors.push_back({p, 1});
    }
    return fz;
}

// ---------------------------------------------------------------------------
// Multiplicative functions
// ---------------------------------------------------------------------------

enum class MultKind { mu, mu2, d, d3, omega, sigma_squarefull };

inline i64 mult_eval(const Factorization& fz, MultKind kind) {
    i64 v = 1;
    switch (kind) {
        case MultKind::mu:
            for (const auto& f : fz.factors) {
                if (f.exponent > 1) return 0;
                v = -v;
            }
            return v;
        case MultKind::mu2:
            return fz.squarefree() ? 1 : 0;
        case MultKind::d:
            for (const auto& f : fz.factors) v *= f.exponent + 1;
            return v;
        case MultKind::d3:
            for (const auto& f : fz.factors) v *= i64(f.exponent + 1) * (f.exponent + 2) / 2;
            return v;
        case MultKind::omega:
            return static_cast<i64>(fz.factors.size());
        case MultKind::sigma_squarefull:
            for (const auto& f : fz.factors)
                if (f.exponent >= 2) v *= static_cast<i64>(f.prime);
            return v;
    }
    return 0;
}

inline i64 mult_eval(MultKind kind, u64 n) {
    if (n == 0) throw DomainError("mult_eval: n must be positive");
    return mult_eval(factorize(n), kind);
}

/// Positive divisors of the factored number, ascending.
inline std::vector<u64> divisors(const Factorization& fz) {
    std::vector<u64> out{1};
    for (const auto& f : fz.factors) {
        const std::size_t base = out.size();
        u64 pk = 1;
        for (unsigned e = 1; e <= f.exponent; ++e) {
            pk *= f.prime;
            for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline bool is_squarefree(i64 n) {
    if (n == 0) return false;
    return factorize(abs_u64(n)).squarefree();
}

// ---------------------------------------------------------------------------
// Modular inverse
// ---------------------------------------------------------------------------

/// Inverse of a modulo q in [1, q-1] (q >= 2), via the extended Euclidean
/// algorithm.
inline u64 mod_inverse(i64 a, u64 q) {
    if (q < 2) throw DomainError("mod_inverse: modulus must be >= 2");
    i128 old_r = mod_floor(a, q), r = q;
    i128 old_s = 1, s = 0;
    while (r != 0) {
        const i128 t = old_r / r;
        old_r -= t * r;
        std::swap(old_r, r);
        old_s -= t * s;
        std::swap(old_s, s);
    }
    // old_r now holds gcd(a, q)
    if (old_r != 1) throw NotInvertibleError("mod_inverse: gcd(a, q) > 1");
    i128 inv = old_s % static_cast<i128>(q);
    if (inv < 0) inv += q;
    return static_cast<u64>(inv);
}

// ---------------------------------------------------------------------------
// Periodic Bernoulli functions
// ---------------------------------------------------------------------------

/// x - floor(x) in [0, 1).
inline double frac(double x) {
    if (!std::isfinite(x)) throw DomainError("frac: non-finite argument");
    const double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

inline double b1_periodic(double x) { return frac(x) - 0.5; }

inline double b2_periodic(double x) {
    const double t = frac(x);
    return 0.5 * t * t - 0.5 * t + 1.0 / 12.0;
}

inline double bernoulli(int k, double x) {
    switch (k) {
        case 1:
            return b1_periodic(x);
        case 2:
            return b2_periodic(x);
        default:
            throw DomainError("bernoulli: only k = 1 and k = 2 are supported");
    }
}

}  // namespace sqlab
