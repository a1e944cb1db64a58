#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "sqlab/arith.hpp"
#include "sqlab/error.hpp"
#include "sqlab/rational.hpp"
#include "sqlab/summation.hpp"

namespace sqlab {

inline constexpr double kSixOverPiSq = 6.0 / (std::numbers::pi * std::numbers::pi);

// ---------------------------------------------------------------------------
// h, beta, kappa
// ---------------------------------------------------------------------------

/// h(d) = mu^2(d) prod_{p | d} (1 - 2/p^2)^{-1}.
inline Rational h_value(const Factorization& fz) {
    Rational v{1};
    for (const auto& f : fz.factors) {
        if (f.exponent > 1) return Rational{0};
        const i64 p2 = static_cast<i64>(f.prime * f.prime);
        v *= Rational(p2, p2 - 2);
    }
    return v;
}

inline Rational h_value(u64 d) {
    if (d == 0) throw DomainError("h_value: d must be positive");
    return h_value(factorize(d));
}

/// beta with h = beta * 1 (Dirichlet convolution). On prime powers
/// beta(p) = h(p) - 1 = 2/(p^2 - 2), beta(p^2) = -h(p) = -p^2/(p^2 - 2) and
/// beta(p^k) = 0 for k >= 3.
inline Rational beta_value(const Factorization& fz) {
    Rational v{1};
    for (const auto& f : fz.factors) {
        const i64 p2 = static_cast<i64>(f.prime * f.prime);
        switch (f.exponent) {
            case 1:
                v *= Rational(2, p2 - 2);
                break;
            case 2:
                v *= Rational(-p2, p2 - 2);
                break;
            default:
                return Rational{0};
        }
    }
    return v;
}

inline Rational beta_value(u64 m) {
    if (m == 0) throw DomainError("beta_value: m must be positive");
    return beta_value(factorize(m));
}

/// |beta(m)| as a double; used for truncation bookkeeping.
inline double beta_abs(u64 m) { return beta_value(m).abs().to_double(); }

inline Rational kappa_prime_power(u64 p, unsigned alpha) {
    const i64 p2 = static_cast<i64>(p * p), pp = static_cast<i64>(p);
    switch (alpha) {
        case 0:
            return Rational{1};
        case 1:
            return Rational(p2 - pp - 1, p2 - 1);
        case 2:
            return Rational(p2 - pp, p2 - 1);
        default:
            return Rational{0};
    }
}

/// Multiplicative extension of the prime-power kappa table to all n >= 1.
inline Rational kappa_value(const Factorization& fz) {
    Rational v{1};
    for (const auto& f : fz.factors) v *= kappa_prime_power(f.prime, f.exponent);
    return v;
}

inline Rational kappa_value(u64 n) {
    if (n == 0) throw DomainError("kappa_value: n must be positive");
    return kappa_value(factorize(n));
}

// ---------------------------------------------------------------------------
// u_p: local obstruction counts
// ---------------------------------------------------------------------------

namespace detail {

inline void check_u_p_args(u64 p, i64 l, i64 r) {
    if (!is_prime(p)) throw DomainError("u_p: p must be prime");
    if (l == 0) throw DomainError("u_p: l must be nonzero");
    if (r == 0) throw DomainError("u_p: r must be nonzero");
}

}  // namespace detail

/// Number of v mod p^2 with p^2 | v or p^2 | r v + l, from the five-case
/// table (r squarefree).
inline i64 u_p(u64 p, i64 l, i64 r) {
    detail::check_u_p_args(p, l, r);
    const u64 al = abs_u64(l), ar = abs_u64(r);
    const bool p_div_r = ar % p == 0;
    const bool p2_div_l = al % (p * p) == 0;
    const bool p_div_l = al % p == 0;
    if (p_div_r) {
        if (p2_div_l) return static_cast<i64>(p);
        if (p_div_l) return static_cast<i64>(p) + 1;
        return 1;
    }
    return p2_div_l ? 1 : 2;
}

/// Direct count over v in [0, p^2 - 1]. sigma(n) = prod_{p^2 | n} p is divisible
/// by p exactly when p^2 | n, and v = 0 always qualifies.
inline i64 u_p_bruteforce(u64 p, i64 l, i64 r) {
    detail::check_u_p_args(p, l, r);
    if (p > 1000) throw DomainError("u_p_bruteforce: p must be <= 1000");
    const u64 m = p * p;
    const u64 step = mod_floor(r, m);
    u64 w = mod_floor(l, m);  // r v + l mod p^2
    i64 count = 0;
    for (u64 v = 0; v < m; ++v) {
        if (v == 0 || w == 0) ++count;
        w += step;
        if (w >= m) w -= m;
    }
    return count;
}

// ---------------------------------------------------------------------------
// Zeta helpers for the C_2 tail
// ---------------------------------------------------------------------------

/// zeta(s) - 1 for real s >= 2 by Euler-Maclaurin with N = 16 and six
/// Bernoulli correction terms; accurate to double precision.
inline double zeta_minus_one(double s) {
    if (s < 2.0) throw DomainError("zeta_minus_one: s must be >= 2");
    constexpr int N = 16;
    constexpr double b2k[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730};
    CompensatedSum acc;
    for (int n = N - 1; n >= 2; --n) acc.add(std::pow(n, -s));
    const double Nd = N;
    acc.add(std::pow(Nd, 1.0 - s) / (s - 1.0));
    acc.add(0.5 * std::pow(Nd, -s));
    // B_{2k}/(2k)! * s (s+1) ... (s+2k-2) * N^{-s-2k+1}
    double rising = s;
    double fact = 2.0;
    for (int k = 1; k <= 6; ++k) {
        acc.add(b2k[k - 1] / fact * rising * std::pow(Nd, -s - 2.0 * k + 1.0));
        rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return acc.value();
}

/// Prime zeta P(s) = sum_p p^{-s} = sum_k mu(k)/k log zeta(k s), s >= 2.
inline double prime_zeta(double s) {
    CompensatedSum acc;
    for (u64 k = 1; k * s < 80.0; ++k) {
        const i64 mu = mult_eval(MultKind::mu, k);
        if (mu == 0) continue;
        acc.add(static_cast<double>(mu) / static_cast<double>(k) * std::log1p(zeta_minus_one(k * s)));
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// C_2 and friends
// ---------------------------------------------------------------------------

/// prod_{p <= P} (1 - 2/p^2).
inline double c2_partial(u64 P) {
    CompensatedSum log_sum;
    for (u64 p : primes_up_to(P)) log_sum.add(std::log1p(-2.0 / static_cast<double>(p * p)));
    return std::exp(log_sum.value());
}

/// C_2 = prod_p (1 - 2/p^2) to relative accuracy eps in [1e-14, 1e-3]. Primes
/// p <= P are multiplied directly; the tail contributes exp(-2 sum_{p>P} p^-2)
/// with sum_{p>P} p^-2 = P(2) - sum_{p<=P} p^-2. The neglected higher-order
/// part sum_{j>=2} (2^j/j) sum_{p>P} p^{-2j} is bounded by
/// sum_{j>=2} 2^j / (j (2j-1) P^{2j-1}), and P is chosen so that this is <= eps/4.
inline double c2_constant(double eps) {
    if (!(eps >= 1e-14 && eps <= 1e-3)) throw DomainError("c2_constant: eps must lie in [1e-14, 1e-3]");
    auto remainder_bound = [](double P) {
        double total = 0.0;
        for (int j = 2; j < 40; ++j)
            total += std::pow(2.0, j) / (j * (2.0 * j - 1.0) * std::pow(P, 2.0 * j - 1.0));
        return total;
    };
    u64 P = 100;
    while (remainder_bound(static_cast<double>(P)) > eps / 4 && P < kSmallPrimeLimit) P *= 10;
    CompensatedSum log_head, inv_sq;
    for (u64 p : small_primes()) {
        if (p > P) break;
        const double p2 = static_cast<double>(p * p);
        log_head.add(std::log1p(-2.0 / p2));
        inv_sq.add(1.0 / p2);
    }
    const double tail_sq = prime_zeta(2.0) - inv_sq.value();
    return std::exp(log_head.value() - 2.0 * tail_sq);
}

/// Memoized C_2 at eps = 1e-14.
inline double c2() {
    static const double value = c2_constant(1e-14);
    return value;
}

/// C(q) = (6/pi^2) (1 - q^-2)^-1.
inline double cq_constant(u64 q) {
    if (q < 2) throw DomainError("cq_constant: q must be >= 2");
    const double qq = static_cast<double>(q);
    return kSixOverPiSq / (1.0 - 1.0 / (qq * qq));
}

// ---------------------------------------------------------------------------
// f(l, r)
// ---------------------------------------------------------------------------

struct DensityValue {
    Rational rational_part;
    bool includes_c2 = true;
    double approx = 0.0;
};

/// prod_{p | r} (p^2 - 1)/(p^2 - 2).
inline Rational r_factor(const Factorization& r_fz) {
    Rational v{1};
    for (const auto& f : r_fz.factors) {
        const i64 p2 = static_cast<i64>(f.prime * f.prime);
        v *= Rational(p2 - 1, p2 - 2);
    }
    return v;
}

/// The l-dependent part of f: prod_{p^2 | l, p not| r} (p^2-1)/(p^2-2) times
/// kappa((l, r^2)). Signs of l and r are ignored.
inline Rational reduced_density(const Factorization& l_fz, const Factorization& r_fz) {
    Rational v{1};
    std::size_t j = 0;
    for (const auto& f : l_fz.factors) {
        while (j < r_fz.factors.size() && r_fz.factors[j].prime < f.prime) ++j;
        const bool divides_r = j < r_fz.factors.size() && r_fz.factors[j].prime == f.prime;
        if (divides_r) {
            // (l, r^2) has exponent min(v_p(l), 2) at p since r is squarefree
            v *= kappa_prime_power(f.prime, std::min(f.exponent, 2u));
        } else if (f.exponent >= 2) {
            const i64 p2 = static_cast<i64>(f.prime * f.prime);
            v *= Rational(p2 - 1, p2 - 2);
        }
    }
    return v;
}

inline Factorization squarefree_factorization(i64 r, const char* who) {
    if (r == 0) throw DomainError(std::string(who) + ": r must be nonzero");
    Factorization fz = factorize(abs_u64(r));
    if (!fz.squarefree()) throw DomainError(std::string(who) + ": r must be squarefree");
    return fz;
}

/// f(l, r) = C_2 prod_{p|r} (p^2-1)/(p^2-2) prod_{p^2|l, p not| r} (p^2-1)/(p^2-2) kappa((l, r^2)).
inline DensityValue f_density(i64 l, i64 r) {
    if (l == 0) throw DomainError("f_density: l must be nonzero");
    const Factorization r_fz = squarefree_factorization(r, "f_density");
    const Rational part = r_factor(r_fz) * reduced_density(factorize(abs_u64(l)), r_fz);
    return DensityValue{part, true, part.to_double() * c2()};
}

// ---------------------------------------------------------------------------
// rho-sigma sums, lambda and Lambda
// ---------------------------------------------------------------------------

/// sum over rho sigma | r^2 of kappa(rho) mu(sigma) / (rho sigma), by direct
/// enumeration of divisor pairs.
inline Rational rho_sigma_sum(i64 r) {
    const Factorization r_fz = squarefree_factorization(r, "rho_sigma_sum");
    Factorization r2{r_fz.n * r_fz.n, r_fz.factors};
    for (auto& f : r2.factors) f.exponent = 2;
    Rational total{0};
    for (u64 rho : divisors(r2)) {
        const Rational k = kappa_value(rho);
        for (u64 sigma : divisors(factorize(r2.n / rho))) {
            const i64 mu = mult_eval(MultKind::mu, sigma);
            if (mu == 0) continue;
            total += k * Rational(mu, static_cast<i64>(rho * sigma));
        }
    }
    return total;
}

/// prod_{p | r} (p^2 - 1)/p^2.
inline Rational rho_sigma_product(i64 r) {
    const Factorization r_fz = squarefree_factorization(r, "rho_sigma_product");
    Rational v{1};
    for (const auto& f : r_fz.factors) {
        const i64 p2 = static_cast<i64>(f.prime * f.prime);
        v *= Rational(p2 - 1, p2);
    }
    return v;
}

inline constexpr u64 kMaxHValue = 1'000'000'000'000ull;

/// h(d) as doubles for d in [lo, hi), sieved: zero on non-squarefree d.
inline std::vector<double> h_values(u64 lo, u64 hi) {
    if (lo < 1 || hi <= lo) throw DomainError("h_values: need 1 <= lo < hi");
    if (hi > kMaxHValue) throw CapacityError("h_values: hi exceeds 10^12");
    const std::size_t n = static_cast<std::size_t>(hi - lo);
    std::vector<double> h(n, 1.0);
    std::vector<u64> rest(n);
    for (std::size_t i = 0; i < n; ++i) rest[i] = lo + i;
    const u64 root = isqrt(hi - 1);
    for (u64 p : small_primes()) {
        if (p > root) break;
        const double factor = static_cast<double>(p * p) / static_cast<double>(p * p - 2);
        for (u64 m = (lo + p - 1) / p * p; m < hi; m += p) {
            const std::size_t i = static_cast<std::size_t>(m - lo);
            h[i] *= factor;
            rest[i] /= p;
        }
        const u64 p2 = p * p;
        for (u64 m = (lo + p2 - 1) / p2 * p2; m < hi; m += p2) h[m - lo] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (h[i] != 0.0 && rest[i] > 1) {
            const double big = static_cast<double>(rest[i]);
            h[i] *= big * big / (big * big - 2.0);
        }
    }
    return h;
}

struct LambdaFactors {
    double lambda = 0.0;        // lambda(q, r), series truncated at cutoff
    double Lambda = 0.0;        // closed form (6/pi^2)^2 (1 + 1/(q^2 (q^2 - 2)))^-1
    Rational rho_sigma;         // sum_{rho sigma | r^2} kappa(rho) mu(sigma)/(rho sigma)
    double h_series = 0.0;      // sum_{d <= cutoff, (d, q r) = 1} h(d)/d^4
    double h_tail_bound = 0.0;  // 3.1 / cutoff^3
    u64 cutoff = 0;
};

inline double Lambda_closed_form(u64 q) {
    const double qq = static_cast<double>(q);
    return kSixOverPiSq * kSixOverPiSq / (1.0 + 1.0 / (qq * qq * (qq * qq - 2.0)));
}

/// lambda(q, r) and Lambda(q, r) for q prime, r squarefree, q not| r. The
/// h(d)/d^4 series is cut at `cutoff` with tail <= (1/C_2) / (3 cutoff^3) < 3.1/cutoff^3.
inline LambdaFactors lambda_factors(u64 q, i64 r, u64 cutoff = 20000) {
    if (!is_prime(q)) throw DomainError("lambda_factors: q must be prime");
    const Factorization r_fz = squarefree_factorization(r, "lambda_factors");
    if (abs_u64(r) % q == 0) throw DomainError("lambda_factors: q divides r");
    if (cutoff < 1) throw DomainError("lambda_factors: cutoff must be positive");
    LambdaFactors out;
    out.cutoff = cutoff;
    out.rho_sigma = rho_sigma_sum(r);
    const u64 qr = q * r_fz.n;
    const auto h = h_values(1, cutoff + 1);
    CompensatedSum acc;
    for (u64 d = cutoff; d >= 1; --d) {  // small terms first
        if (std::gcd(d, qr) != 1) continue;
        const double dd = static_cast<double>(d);
        acc.add(h[d - 1] / (dd * dd * dd * dd));
    }
    out.h_series = acc.value();
    out.h_tail_bound = 3.1 / std::pow(static_cast<double>(cutoff), 3.0);
    out.lambda = out.rho_sigma.to_double() * out.h_series;
    out.Lambda = Lambda_closed_form(q);
    return out;
}

/// C_2 prod_{p|r} (p^2-1)/(p^2-2) lambda(q, r): the series route to Lambda.
inline double Lambda_via_series(u64 q, i64 r, u64 cutoff = 20000) {
    const LambdaFactors lf = lambda_factors(q, r, cutoff);
    return c2() * r_factor(factorize(abs_u64(r))).to_double() * lf.lambda;
}

}  // namespace sqlab
