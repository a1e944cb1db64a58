#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sqlab/arith.hpp"
#include "sqlab/error.hpp"
#include "sqlab/localdensity.hpp"
#include "sqlab/parallel.hpp"
#include "sqlab/summation.hpp"

namespace sqlab {

using ComplexValue = std::complex<double>;

/// e(k/q) = exp(2 pi i k/q) evaluated from the reduced fraction, 0 <= k < q.
inline ComplexValue e_fraction(u64 k, u64 q) noexcept {
    double t = static_cast<double>(k) / static_cast<double>(q);
    if (t > 0.5) t -= 1.0;
    const double angle = 2.0 * std::numbers::pi * t;
    return {std::cos(angle), std::sin(angle)};
}

/// Realized truncation of an infinite sum: the analytic bound on everything
/// omitted beyond `cutoff` is `tail_bound`, and tail_bound <= tolerance.
struct TruncationBudget {
    double tolerance = 0.0;
    u64 cutoff = 0;
    double tail_bound = 0.0;
};

struct TruncatedSum {
    double value = 0.0;
    TruncationBudget budget;
};

inline constexpr u64 kMaxCutoff = 1'000'000'000;
inline constexpr std::size_t kInverseBatch = 4096;

namespace detail {

/// Calls fn(n, n^-1 mod q) for every n in [n_begin, n_end) coprime to q, in
/// increasing n. One extended-Euclid inversion per batch of 4096 via prefix
/// products.
template <class Fn>
void for_each_inverse(u64 n_begin, u64 n_end, u64 q, Fn&& fn) {
    std::vector<u64> ns, xs, prefix;
    ns.reserve(kInverseBatch);
    xs.reserve(kInverseBatch);
    prefix.reserve(kInverseBatch);
    for (u64 start = n_begin; start < n_end; start += kInverseBatch) {
        const u64 stop = std::min(n_end, start + kInverseBatch);
        ns.clear();
        xs.clear();
        prefix.clear();
        u64 acc = 1 % q;
        for (u64 n = start; n < stop; ++n) {
            const u64 x = n % q;
            if (std::gcd(x, q) != 1) continue;
            ns.push_back(n);
            xs.push_back(x);
            acc = mul_mod(acc, x, q);
            prefix.push_back(acc);
        }
        if (ns.empty()) continue;
        std::vector<u64> inv(ns.size());
        u64 running = mod_inverse(static_cast<i64>(prefix.back()), q);
        for (std::size_t i = ns.size(); i-- > 0;) {
            inv[i] = i == 0 ? running : mul_mod(running, prefix[i - 1], q);
            running = mul_mod(running, xs[i], q);
        }
        for (std::size_t i = 0; i < ns.size(); ++i) fn(ns[i], inv[i]);
    }
}

inline constexpr u64 kSumBlock = u64(1) << 16;

}  // namespace detail

// ---------------------------------------------------------------------------
// Inverse-square exponential sums
// ---------------------------------------------------------------------------

/// sum_{n <= N, (n, q) = 1} e(a nbar^2 / q). Blocks of n are summed
/// independently and combined in block order.
inline ComplexValue incomplete_invsq_sum(u64 N, u64 q, i64 a, unsigned workers = 1) {
    if (q < 2) throw DomainError("incomplete_invsq_sum: q must be >= 2");
    if (N > kMaxCutoff) throw CapacityError("incomplete_invsq_sum: N exceeds 10^9");
    if (std::gcd(mod_floor(a, q), q) != 1) throw DomainError("incomplete_invsq_sum: gcd(a, q) > 1");
    const u64 ar = mod_floor(a, q);
    const std::size_t n_blocks = static_cast<std::size_t>((N + detail::kSumBlock - 1) / detail::kSumBlock);
    const auto partials = map_blocks<CompensatedComplexSum>(n_blocks, workers, [&](std::size_t b) {
        CompensatedComplexSum acc;
        const u64 lo = 1 + b * detail::kSumBlock;
        const u64 hi = std::min(N + 1, lo + detail::kSumBlock);
        detail::for_each_inverse(lo, hi, q, [&](u64, u64 inv) {
            acc.add(e_fraction(mul_mod(ar, mul_mod(inv, inv, q), q), q));
        });
        return acc;
    });
    CompensatedComplexSum total;
    for (const auto& p : partials) total += p;
    return total.value();
}

/// The sum over a full period of residues coprime to q.
inline ComplexValue complete_invsq_sum(u64 q, i64 a) { return incomplete_invsq_sum(q, q, a); }

// ---------------------------------------------------------------------------
// Bernoulli-difference sums
// ---------------------------------------------------------------------------

/// Delta = B2(z + k/q) - B2(k/q) with z = Y^2 / n^2.
inline double b2_difference(double z, u64 k, u64 q) {
    const double base = static_cast<double>(k) / static_cast<double>(q);
    return b2_periodic(frac(z) + base) - b2_periodic(base);
}

/// A(Y; q, a) with the n-sum cut at `cutoff`; tail bound Y^2 / (2 cutoff)
/// from |B1| <= 1/2.
inline TruncatedSum a_sum_to(double Y, u64 q, i64 a, u64 cutoff, unsigned workers = 1) {
    if (!(Y >= 0.0) || !std::isfinite(Y)) throw DomainError("a_sum: Y must be finite and non-negative");
    if (q < 2) throw DomainError("a_sum: q must be >= 2");
    if (std::gcd(mod_floor(a, q), q) != 1) throw DomainError("a_sum: gcd(a, q) > 1");
    if (cutoff < 1) throw DomainError("a_sum: cutoff must be positive");
    if (cutoff > kMaxCutoff) throw CapacityError("a_sum: cutoff exceeds 10^9");
    const u64 ar = mod_floor(a, q);
    const double Y2 = Y * Y;
    const std::size_t n_blocks = static_cast<std::size_t>((cutoff + detail::kSumBlock - 1) / detail::kSumBlock);
    const auto partials = map_blocks<CompensatedSum>(n_blocks, workers, [&](std::size_t b) {
        CompensatedSum acc;
        const u64 lo = 1 + b * detail::kSumBlock;
        const u64 hi = std::min(cutoff + 1, lo + detail::kSumBlock);
        detail::for_each_inverse(lo, hi, q, [&](u64 n, u64 inv) {
            const double nd = static_cast<double>(n);
            acc.add(b2_difference(Y2 / (nd * nd), mul_mod(ar, mul_mod(inv, inv, q), q), q));
        });
        return acc;
    });
    CompensatedSum total;
    for (const auto& p : partials) total += p;
    const double tail = Y2 / (2.0 * static_cast<double>(cutoff));
    return TruncatedSum{total.value(), TruncationBudget{tail, cutoff, tail}};
}

/// Cutoff T = ceil(Y^2 / (2 tolerance)), so the tail is at most `tolerance`.
inline u64 a_sum_cutoff(double Y, double tolerance) {
    if (!(tolerance > 0.0)) throw DomainError("a_sum: tolerance must be positive");
    const double T = std::ceil(Y * Y / (2.0 * tolerance));
    if (T > static_cast<double>(kMaxCutoff)) throw CapacityError("a_sum: tolerance needs a cutoff above 10^9");
    return std::max<u64>(1, static_cast<u64>(T));
}

inline TruncatedSum a_sum(double Y, u64 q, i64 a, double tolerance, unsigned workers = 1) {
    if (Y > 1e6) throw DomainError("a_sum: Y exceeds 10^6");
    TruncatedSum out = a_sum_to(Y, q, a, a_sum_cutoff(Y, tolerance), workers);
    out.budget.tolerance = tolerance;
    return out;
}

/// B(D; q, a; r) = sum_{(d, q r) = 1} h(d) Delta_D(d; q, a), cut at `cutoff`,
/// tail bound (1/C_2) D^2 / (2 cutoff) from h <= 1/C_2.
inline TruncatedSum b_sum_to(double D, u64 q, i64 a, i64 r, u64 cutoff, unsigned workers = 1) {
    if (!(D >= 0.0) || !std::isfinite(D)) throw DomainError("b_sum: D must be finite and non-negative");
    if (q < 2) throw DomainError("b_sum: q must be >= 2");
    if (std::gcd(mod_floor(a, q), q) != 1) throw DomainError("b_sum: gcd(a, q) > 1");
    const Factorization r_fz = squarefree_factorization(r, "b_sum");
    if (std::gcd(r_fz.n, q) != 1) throw DomainError("b_sum: gcd(q, r) > 1");
    if (cutoff < 1) throw DomainError("b_sum: cutoff must be positive");
    if (cutoff > kMaxCutoff) throw CapacityError("b_sum: cutoff exceeds 10^9");
    const u64 ar = mod_floor(a, q);
    const u64 rr = r_fz.n;
    const double D2 = D * D;
    const std::size_t n_blocks = static_cast<std::size_t>((cutoff + detail::kSumBlock - 1) / detail::kSumBlock);
    const auto partials = map_blocks<CompensatedSum>(n_blocks, workers, [&](std::size_t b) {
        CompensatedSum acc;
        const u64 lo = 1 + b * detail::kSumBlock;
        const u64 hi = std::min(cutoff + 1, lo + detail::kSumBlock);
        const std::vector<double> h = h_values(lo, hi);
        detail::for_each_inverse(lo, hi, q, [&](u64 d, u64 inv) {
            const double hd = h[d - lo];
            if (hd == 0.0 || std::gcd(d, rr) != 1) return;
            const double dd = static_cast<double>(d);
            acc.add(hd * b2_difference(D2 / (dd * dd), mul_mod(ar, mul_mod(inv, inv, q), q), q));
        });
        return acc;
    });
    CompensatedSum total;
    for (const auto& p : partials) total += p;
    const double tail = D2 / (2.0 * static_cast<double>(cutoff)) / c2();
    return TruncatedSum{total.value(), TruncationBudget{tail, cutoff, tail}};
}

inline TruncatedSum b_sum(double D, u64 q, i64 a, i64 r, double tolerance, unsigned workers = 1) {
    if (!(tolerance > 0.0)) throw DomainError("b_sum: tolerance must be positive");
    const double T = std::ceil(D * D / (2.0 * tolerance * c2()));
    if (T > static_cast<double>(kMaxCutoff)) throw CapacityError("b_sum: tolerance needs a cutoff above 10^9");
    TruncatedSum out = b_sum_to(D, q, a, r, std::max<u64>(1, static_cast<u64>(T)), workers);
    out.budget.tolerance = tolerance;
    return out;
}

// ---------------------------------------------------------------------------
// G(Y; q, s; r) through the beta-convolution of A-sums
// ---------------------------------------------------------------------------

/// m runs over [1, m_cutoff]; each inner A-sum at Z = sqrt(Y / (rho sigma tau^2 m^2))
/// is cut at max(1, ceil(n_scale Z^2)). Doubling both parameters only adds terms.
struct GSumCutoffs {
    u64 m_cutoff = 1;
    double n_scale = 1.0;
};

struct GTerm {
    double coefficient;  // kappa(rho) mu(sigma) mu(tau) rho sigma
    u64 denominator;     // rho sigma tau^2
};

namespace detail {

inline std::vector<GTerm> g_outer_terms(const Factorization& r_fz) {
    Factorization r2{r_fz.n * r_fz.n, r_fz.factors};
    for (auto& f : r2.factors) f.exponent = 2;
    std::vector<GTerm> out;
    for (u64 rho : divisors(r2)) {
        const double kappa = kappa_value(rho).to_double();
        if (kappa == 0.0) continue;
        for (u64 sigma : divisors(factorize(r2.n / rho))) {
            const i64 mu_s = mult_eval(MultKind::mu, sigma);
            if (mu_s == 0) continue;
            for (u64 tau : divisors(r_fz)) {
                const i64 mu_t = mult_eval(MultKind::mu, tau);
                out.push_back({kappa * static_cast<double>(mu_s * mu_t) * static_cast<double>(rho * sigma),
                               rho * sigma * tau * tau});
            }
        }
    }
    return out;
}

inline void check_g_args(double Y, u64 q, i64 s, const Factorization& r_fz) {
    if (!(Y >= 0.0) || !std::isfinite(Y)) throw DomainError("g_sum: Y must be finite and non-negative");
    if (!is_prime(q)) throw DomainError("g_sum: q must be prime");
    if (r_fz.n % q == 0 || mod_floor(s, q) == 0) throw DomainError("g_sum: q divides r s");
}

}  // namespace detail

/// G(Y; q, s; r) = sum over rho sigma | r^2, tau | r, (m, q r) = 1 of
/// kappa(rho) mu(sigma) mu(tau) rho sigma beta(m) A(sqrt(Y/(rho sigma tau^2 m^2)); q, (rho sigma tau^2 m^2)^-1 s).
///
/// Tail bound: |A(Z)| <= (pi^2/12) Z^2 and |beta| <= 1/C_2 bound the m > M part by
/// (pi^2/12) (1/C_2) Y/(rho sigma tau^2 M) per outer term; each retained A-sum adds
/// its own Z^2 / (2 T) times |coefficient beta(m)|.
inline TruncatedSum g_sum_to(double Y, u64 q, i64 s, i64 r, const GSumCutoffs& cut, unsigned workers = 1) {
    const Factorization r_fz = squarefree_factorization(r, "g_sum");
    detail::check_g_args(Y, q, s, r_fz);
    if (cut.m_cutoff < 1 || !(cut.n_scale > 0.0)) throw DomainError("g_sum: cutoffs must be positive");
    const std::vector<GTerm> outer = detail::g_outer_terms(r_fz);
    const u64 qr = q * r_fz.n;

    struct Item {
        double weight;  // coefficient * beta(m)
        double Z;
        u64 residue;
        u64 n_cutoff;
    };
    std::vector<double> betas(cut.m_cutoff + 1, 0.0);
    for (u64 m = 1; m <= cut.m_cutoff; ++m)
        if (std::gcd(m, qr) == 1) betas[m] = beta_value(m).to_double();

    std::vector<Item> items;
    CompensatedSum tail;
    const double inv_c2 = 1.0 / c2();
    for (const GTerm& t : outer) {
        const double Z0sq = Y / static_cast<double>(t.denominator);
        tail.add(std::fabs(t.coefficient) * (std::numbers::pi * std::numbers::pi / 12.0) * inv_c2 * Z0sq /
                 static_cast<double>(cut.m_cutoff));
        for (u64 m = 1; m <= cut.m_cutoff; ++m) {
            const double beta = betas[m];
            if (beta == 0.0) continue;
            const double md = static_cast<double>(m);
            const double Zsq = Z0sq / (md * md);
            const double Tn = std::max(1.0, std::ceil(cut.n_scale * Zsq));
            if (Tn > static_cast<double>(kMaxCutoff)) throw CapacityError("g_sum: inner cutoff exceeds 10^9");
            const u64 dm = mul_mod(t.denominator % q, mul_mod(m % q, m % q, q), q);
            const u64 residue = mul_mod(mod_inverse(static_cast<i64>(dm), q), mod_floor(s, q), q);
            const double weight = t.coefficient * beta;
            items.push_back({weight, std::sqrt(Zsq), residue, static_cast<u64>(Tn)});
            tail.add(std::fabs(weight) * Zsq / (2.0 * Tn));
        }
    }
    const auto values = map_blocks<double>(items.size(), workers, [&](std::size_t i) {
        const Item& it = items[i];
        return it.weight * a_sum_to(it.Z, q, static_cast<i64>(it.residue), it.n_cutoff).value;
    });
    CompensatedSum total;
    for (double v : values) total.add(v);
    const double tb = tail.value();
    return TruncatedSum{total.value(), TruncationBudget{tb, cut.m_cutoff, tb}};
}

/// Picks cutoffs so that each half of the tail bound is at most tolerance / 2.
inline GSumCutoffs g_sum_cutoffs(double Y, u64 q, i64 r, double tolerance) {
    if (!(tolerance > 0.0)) throw DomainError("g_sum: tolerance must be positive");
    const Factorization r_fz = squarefree_factorization(r, "g_sum");
    const std::vector<GTerm> outer = detail::g_outer_terms(r_fz);
    double W = 0.0;
    for (const GTerm& t : outer) W += std::fabs(t.coefficient) * Y / static_cast<double>(t.denominator);
    const double M = std::ceil(std::numbers::pi * std::numbers::pi * W / (6.0 * c2() * tolerance));
    if (M > 1e7) throw CapacityError("g_sum: tolerance needs more than 10^7 m-terms");
    GSumCutoffs cut{std::max<u64>(1, static_cast<u64>(M)), 1.0};
    const u64 qr = q * r_fz.n;
    double coef_mass = 0.0, beta_mass = 0.0;
    for (const GTerm& t : outer) coef_mass += std::fabs(t.coefficient);
    for (u64 m = 1; m <= cut.m_cutoff; ++m)
        if (std::gcd(m, qr) == 1) beta_mass += beta_abs(m);
    beta_mass *= coef_mass;
    cut.n_scale = std::max(1.0, beta_mass / tolerance);
    return cut;
}

inline TruncatedSum g_sum(double Y, u64 q, i64 s, i64 r, double tolerance, unsigned workers = 1) {
    TruncatedSum out = g_sum_to(Y, q, s, r, g_sum_cutoffs(Y, q, r, tolerance), workers);
    out.budget.tolerance = tolerance;
    return out;
}

// ---------------------------------------------------------------------------
// Fourier cross-check for B2
// ---------------------------------------------------------------------------

/// sum_{1 <= |h| <= H} e(h x) / (4 pi^2 h^2).
inline double b2_fourier_partial(double x, u64 H) {
    const double t = frac(x);
    CompensatedSum acc;
    for (u64 h = H; h >= 1; --h) {
        const double hd = static_cast<double>(h);
        acc.add(std::cos(2.0 * std::numbers::pi * hd * t) / (2.0 * std::numbers::pi * std::numbers::pi * hd * hd));
    }
    return acc.value();
}

/// sup_x |b2_fourier_partial(x, H) - B2(x)| <= 1 / (2 pi^2 H).
inline double b2_fourier_error_bound(u64 H) {
    return 1.0 / (2.0 * std::numbers::pi * std::numbers::pi * static_cast<double>(H));
}

// ---------------------------------------------------------------------------
// Decay scan
// ---------------------------------------------------------------------------

struct DecayRow {
    u64 q;
    double epsilon;
    u64 N;
    u64 a;
    double abs_sum;
    double ratio;  // abs_sum / N
};

struct DecaySummary {
    u64 q;
    double epsilon;
    u64 N;
    double max_ratio;
    double mean_ratio;
};

struct DecayReport {
    std::vector<DecayRow> rows;
    std::vector<DecaySummary> summaries;
};

/// Evenly spread residues a_j = 1 + floor(j (q - 1) / count), j < count.
inline std::vector<u64> sample_residues(u64 q, u64 count) {
    std::vector<u64> out;
    count = std::min(count, q - 1);
    for (u64 j = 0; j < count; ++j) out.push_back(1 + j * (q - 1) / count);
    return out;
}

/// For each prime q and exponent eps: N = ceil(q^eps) and |sum_{n <= N} e(a nbar^2/q)| / N
/// over sampled a. Observational only.
inline DecayReport decay_scan(const std::vector<u64>& q_list, const std::vector<double>& exponents, u64 a_samples,
                              unsigned workers = 1) {
    DecayReport rep;
    for (u64 q : q_list) {
        if (!is_prime(q)) throw DomainError("decay_scan: every q must be prime");
        if (q > 10'000'000) throw DomainError("decay_scan: q exceeds 10^7");
        for (double eps : exponents) {
            if (!(eps > 0.0) || eps > 1.0) throw DomainError("decay_scan: exponents must lie in (0, 1]");
            const u64 N = std::max<u64>(1, static_cast<u64>(std::ceil(std::pow(static_cast<double>(q), eps))));
            const std::vector<u64> as = sample_residues(q, a_samples);
            const auto sums = map_blocks<double>(as.size(), workers, [&](std::size_t i) {
                return std::abs(incomplete_invsq_sum(N, q, static_cast<i64>(as[i])));
            });
            DecaySummary summary{q, eps, N, 0.0, 0.0};
            CompensatedSum mean;
            for (std::size_t i = 0; i < as.size(); ++i) {
                const double ratio = sums[i] / static_cast<double>(N);
                rep.rows.push_back({q, eps, N, as[i], sums[i], ratio});
                summary.max_ratio = std::max(summary.max_ratio, ratio);
                mean.add(ratio);
            }
            if (!as.empty()) summary.mean_ratio = mean.value() / static_cast<double>(as.size());
            rep.summaries.push_back(summary);
        }
    }
    return rep;
}

}  // namespace sqlab
