#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>

#include "sqlab/expsum.hpp"
#include "sqlab/pairstats.hpp"

using namespace sqlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Inverse by Euler's theorem for prime q, or a linear search otherwise.
u64 slow_inverse(u64 n, u64 q) {
    if (is_prime(q)) return pow_mod(n % q, q - 2, q);
    for (u64 x = 1; x < q; ++x)
        if (n % q * x % q == 1) return x;
    return 0;
}

std::complex<double> direct_invsq_sum(u64 N, u64 q, u64 a) {
    std::complex<double> acc = 0;
    for (u64 n = 1; n <= N; ++n) {
        if (std::gcd(n, q) != 1) continue;
        const u64 inv = slow_inverse(n, q);
        const u64 k = a % q * (inv * inv % q) % q;
        acc += std::polar(1.0, kTwoPi * static_cast<double>(k) / static_cast<double>(q));
    }
    return acc;
}

double B2(double x) {
    const double t = x - std::floor(x);
    return t * t / 2.0 - t / 2.0 + 1.0 / 12.0;
}

// sum_{n <= T, (n, q) = 1} w(n) [B2(Y^2/n^2 + a nbar^2/q) - B2(a nbar^2/q)], plain loop
template <class W>
double direct_delta_sum(double Y, u64 q, u64 a, u64 T, W&& w) {
    long double acc = 0;
    for (u64 n = 1; n <= T; ++n) {
        if (std::gcd(n, q) != 1) continue;
        const double wn = w(n);
        if (wn == 0.0) continue;
        const u64 inv = slow_inverse(n, q);
        const double base = static_cast<double>(a % q * (inv * inv % q) % q) / static_cast<double>(q);
        const double nd = static_cast<double>(n);
        acc += wn * (B2(Y * Y / (nd * nd) + base) - B2(base));
    }
    return static_cast<double>(acc);
}

double h_oracle(u64 d) {
    double v = 1.0;
    for (u64 p = 2; p * p <= d; ++p) {
        if (d % p) continue;
        d /= p;
        if (d % p == 0) return 0.0;
        v *= static_cast<double>(p * p) / static_cast<double>(p * p - 2);
    }
    if (d > 1) v *= static_cast<double>(d * d) / static_cast<double>(d * d - 2);
    return v;
}

std::vector<u64> divisors_of(u64 n) {
    std::vector<u64> out;
    for (u64 d = 1; d <= n; ++d)
        if (n % d == 0) out.push_back(d);
    return out;
}

int mobius(u64 n) {
    int mu = 1;
    for (u64 p = 2; p <= n; ++p) {
        if (n % p) continue;
        n /= p;
        if (n % p == 0) return 0;
        mu = -mu;
    }
    return mu;
}

// G(Y; q, s; r) expanded by hand with the same cutoffs as g_sum_to.
double g_oracle(double Y, u64 q, i64 s, i64 r, const GSumCutoffs& cut) {
    const u64 ra = static_cast<u64>(std::abs(r));
    long double total = 0;
    for (u64 rho : divisors_of(ra * ra))
        for (u64 sigma : divisors_of(ra * ra / rho))
            for (u64 tau : divisors_of(ra)) {
                const double coef = kappa_value(rho).to_double() * mobius(sigma) * mobius(tau) *
                                    static_cast<double>(rho * sigma);
                if (coef == 0.0) continue;
                for (u64 m = 1; m <= cut.m_cutoff; ++m) {
                    if (std::gcd(m, q * ra) != 1) continue;
                    const double beta = beta_value(m).to_double();
                    if (beta == 0.0) continue;
                    const u64 den = rho * sigma * tau * tau * m * m;
                    const double Zsq = Y / static_cast<double>(den);
                    const u64 T = static_cast<u64>(std::max(1.0, std::ceil(cut.n_scale * Zsq)));
                    const u64 residue = slow_inverse(den % q, q) * mod_floor(s, q) % q;
                    total += coef * beta * direct_delta_sum(std::sqrt(Zsq), q, residue, T, [](u64) { return 1.0; });
                }
            }
    return static_cast<double>(total);
}

}  // namespace

TEST(InvSqSum, Example) {
    const ComplexValue v = incomplete_invsq_sum(4, 5, 1);
    EXPECT_NEAR(v.real(), 4.0 * std::cos(kTwoPi / 5.0), 1e-12);
    EXPECT_NEAR(v.real(), 1.2360680, 1e-7);
    EXPECT_NEAR(v.imag(), 0.0, 1e-12);
}

TEST(InvSqSum, MatchesDirectEvaluation) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 40; ++i) {
        const u64 q = 2 + rng() % 3000;
        u64 a = 1 + rng() % (q - 1);
        while (std::gcd(a, q) != 1) a = 1 + rng() % (q - 1);
        const u64 N = rng() % 20000;
        const ComplexValue got = incomplete_invsq_sum(N, q, static_cast<i64>(a));
        const std::complex<double> want = direct_invsq_sum(N, q, a);
        EXPECT_NEAR(got.real(), want.real(), 1e-9) << q << " " << a << " " << N;
        EXPECT_NEAR(got.imag(), want.imag(), 1e-9) << q << " " << a << " " << N;
    }
}

TEST(InvSqSum, GaussMagnitudeOddPrimes) {
    for (u64 q : primes_up_to(400)) {
        if (q == 2) continue;
        for (u64 a = 1; a < q; ++a)
            ASSERT_NEAR(std::abs(complete_invsq_sum(q, static_cast<i64>(a)) + 1.0), std::sqrt(static_cast<double>(q)),
                        1e-9 * std::sqrt(static_cast<double>(q)))
                << q << " " << a;
    }
}

TEST(InvSqSum, ModulusTwoHasNoGaussCancellationLaw) {
    // the only term is n = 1 with e(1/2) = -1, so |sum + 1| = 0 rather than sqrt(2)
    EXPECT_NEAR(std::abs(complete_invsq_sum(2, 1) + 1.0), 0.0, 1e-15);
    for (u64 N : {1ull, 7ull, 100ull}) EXPECT_LE(std::abs(incomplete_invsq_sum(N, 2, 1)), static_cast<double>(N));
}

TEST(InvSqSum, ConjugationSymmetry) {
    for (u64 q : {101ull, 1009ull, 999ull})
        for (i64 a : {1, 2, 10}) {
            if (std::gcd(static_cast<u64>(a), q) != 1) continue;
            const ComplexValue x = incomplete_invsq_sum(5000, q, a);
            const ComplexValue y = incomplete_invsq_sum(5000, q, static_cast<i64>(q) - a);
            EXPECT_NEAR(x.real(), y.real(), 1e-12);
            EXPECT_NEAR(x.imag(), -y.imag(), 1e-12);
        }
}

TEST(InvSqSum, WorkerIndependentAndErrors) {
    const ComplexValue one = incomplete_invsq_sum(1'000'000, 1'000'003, 17, 1);
    const ComplexValue many = incomplete_invsq_sum(1'000'000, 1'000'003, 17, 8);
    EXPECT_EQ(one, many);
    EXPECT_THROW(incomplete_invsq_sum(10, 10, 4), DomainError);
    EXPECT_THROW(incomplete_invsq_sum(10, 1, 1), DomainError);
}

TEST(ASum, MatchesBruteForce) {
    const double Y = 50.0;
    const double brute = direct_delta_sum(Y, 101, 1, 1'000'000, [](u64) { return 1.0; });
    const TruncatedSum a = a_sum(Y, 101, 1, Y * Y / 2e6);
    EXPECT_EQ(a.budget.cutoff, 1'000'000u);
    EXPECT_NEAR(a.value, brute, 1e-6);
    EXPECT_NEAR(a.budget.tail_bound, Y * Y / 2e6, 1e-15);
    EXPECT_LE(a.budget.tail_bound, a.budget.tolerance);
}

TEST(ASum, TrivialBound) {
    std::mt19937_64 rng(23);
    const std::vector<u64> ps = primes_up_to(5000);
    for (int i = 0; i < 200; ++i) {
        const double Y = std::uniform_real_distribution<double>(0.0, 200.0)(rng);
        const u64 q = ps[3 + rng() % (ps.size() - 3)];
        const i64 a = 1 + static_cast<i64>(rng() % (q - 1));
        const double tol = 0.5;
        const TruncatedSum A = a_sum(Y, q, a, tol);
        ASSERT_LE(std::fabs(A.value), 2.0 * Y + tol) << Y << " " << q << " " << a;
    }
}

TEST(ASum, DoublingStaysWithinTail) {
    for (double Y : {10.0, 123.4, 800.0}) {
        const u64 T = a_sum_cutoff(Y, 1.0);
        const TruncatedSum a1 = a_sum_to(Y, 1009, 7, T);
        const TruncatedSum a2 = a_sum_to(Y, 1009, 7, 2 * T);
        EXPECT_LE(std::fabs(a2.value - a1.value), a1.budget.tail_bound);
    }
}

TEST(ASum, Errors) {
    EXPECT_THROW(a_sum(10, 101, 0, 0.1), DomainError);
    EXPECT_THROW(a_sum(10, 101, 1, 0.0), DomainError);
    EXPECT_THROW(a_sum(1e5, 101, 1, 1e-3), CapacityError);
    EXPECT_THROW(a_sum(2e6, 101, 1, 1.0), DomainError);
}

TEST(BSum, MatchesFilteredDirectSum) {
    const u64 T = 100'000;
    // r = 2 drops even d
    const double want2 = direct_delta_sum(40.0, 101, 3, T, [](u64 d) { return d % 2 ? h_oracle(d) : 0.0; });
    EXPECT_NEAR(b_sum_to(40.0, 101, 3, 2, T).value, want2, 1e-9);
    // r = -1 keeps every d coprime to q
    const double want1 = direct_delta_sum(30.0, 101, 1, T, [](u64 d) { return h_oracle(d); });
    EXPECT_NEAR(b_sum_to(30.0, 101, 1, -1, T).value, want1, 1e-6);
    EXPECT_NE(want1, direct_delta_sum(30.0, 101, 1, T, [](u64 d) { return d % 2 ? h_oracle(d) : 0.0; }));
}

TEST(BSum, VanishesAtZeroAndRespectsBudget) {
    EXPECT_EQ(b_sum(0.0, 101, 1, 1, 0.1).value, 0.0);
    EXPECT_LE(std::fabs(b_sum(1e-6, 101, 1, 1, 0.1).value), 1e-9);
    const TruncatedSum b = b_sum(60.0, 1009, 2, 6, 0.5);
    EXPECT_LE(b.budget.tail_bound, 0.5);
    const TruncatedSum b2 = b_sum_to(60.0, 1009, 2, 6, 2 * b.budget.cutoff);
    EXPECT_LE(std::fabs(b2.value - b.value), b.budget.tail_bound);
    EXPECT_THROW(b_sum(10, 101, 1, 202, 0.1), DomainError);
    EXPECT_THROW(b_sum(10, 101, 1, 4, 0.1), DomainError);
}

TEST(GSum, MatchesHandExpansion) {
    for (i64 r : {-1, 1, 6, -10}) {
        const GSumCutoffs cut{40, 3.0};
        const double got = g_sum_to(300.0, 101, 5, r, cut).value;
        const double want = g_oracle(300.0, 101, 5, r, cut);
        EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::fabs(want))) << r;
    }
}

TEST(GSum, UnitMultiplierCollapsesToSingleSeries) {
    // r = +-1: only rho = sigma = tau = 1, so G = sum_m beta(m) A(sqrt(Y)/m; q, mbar^2 s)
    const GSumCutoffs cut{30, 2.0};
    long double want = 0;
    for (u64 m = 1; m <= 30; ++m) {
        if (m % 101 == 0) continue;
        const double beta = beta_value(m).to_double();
        const double Zsq = 500.0 / static_cast<double>(m * m);
        const u64 T = static_cast<u64>(std::max(1.0, std::ceil(2.0 * Zsq)));
        const u64 res = slow_inverse(m * m % 101, 101) * 3 % 101;
        want += beta * a_sum_to(std::sqrt(Zsq), 101, static_cast<i64>(res), T).value;
    }
    EXPECT_NEAR(g_sum_to(500.0, 101, 3, -1, cut).value, static_cast<double>(want), 1e-9);
    EXPECT_EQ(g_sum_to(500.0, 101, 3, -1, cut).value, g_sum_to(500.0, 101, 3, 1, cut).value);
}

TEST(GSum, SignFlipNegatesResidues) {
    const GSumCutoffs cut{25, 2.0};
    for (i64 s : {1, 7, 50}) {
        const double flipped = g_sum_to(250.0, 103, -s, -2, cut).value;
        // every residue argument (rho sigma tau^2 m^2)^-1 s negated
        EXPECT_NEAR(flipped, g_oracle(250.0, 103, 103 - s, -2, cut), 1e-9 * std::max(1.0, std::fabs(flipped)));
        EXPECT_EQ(flipped, g_sum_to(250.0, 103, 103 - s, -2, cut).value);
    }
}

TEST(GSum, DoublingStaysWithinTail) {
    for (i64 r : {-1, 2, -6}) {
        const GSumCutoffs cut = g_sum_cutoffs(200.0, 1009, r, 2.0);
        const TruncatedSum g1 = g_sum_to(200.0, 1009, 3, r, cut);
        const TruncatedSum g2 = g_sum_to(200.0, 1009, 3, r, {2 * cut.m_cutoff, 2 * cut.n_scale});
        EXPECT_LE(g1.budget.tail_bound, 2.0 * (1 + 1e-12));
        EXPECT_LE(std::fabs(g2.value - g1.value), g1.budget.tail_bound) << r;
    }
}

TEST(GSum, CompletedSumIdentityNegativeR) {
    // reduced big sigma = lambda X^2/q - (q/r) [G(X/q) - G((1-r)X/q) + G(-rX/q)], G at residue -s
    struct Case {
        double X;
        u64 q;
        i64 r, s;
    };
    for (const Case& c : {Case{3000, 101, -1, 1}, Case{4000, 103, -1, 17}, Case{2000, 101, -2, 3},
                          Case{1500, 53, -3, 5}}) {
        const double tol = 0.05;
        const double lhs = reduced_big_sigma(c.X, c.q, c.r, c.s);
        const LambdaFactors lf = lambda_factors(c.q, c.r);
        const double qd = static_cast<double>(c.q), rd = static_cast<double>(c.r);
        const TruncatedSum g1 = g_sum(c.X / qd, c.q, -c.s, c.r, tol);
        const TruncatedSum g2 = g_sum((1.0 - rd) * c.X / qd, c.q, -c.s, c.r, tol);
        const TruncatedSum g3 = g_sum(-rd * c.X / qd, c.q, -c.s, c.r, tol);
        const double rhs = lf.lambda * c.X * c.X / qd - (qd / rd) * (g1.value - g2.value + g3.value);
        const double budget = std::fabs(qd / rd) * (g1.budget.tail_bound + g2.budget.tail_bound + g3.budget.tail_bound) +
                              std::fabs(lf.rho_sigma.to_double()) * lf.h_tail_bound * c.X * c.X / qd +
                              1e-9 * std::fabs(lhs);
        std::printf("identity X=%g q=%lu r=%ld s=%ld: |lhs - rhs| = %.3e, budget %.3e\n", c.X,
                    static_cast<unsigned long>(c.q), static_cast<long>(c.r), static_cast<long>(c.s),
                    std::fabs(lhs - rhs), budget);
        EXPECT_LE(std::fabs(lhs - rhs), budget) << c.X << " " << c.q << " " << c.r << " " << c.s;
    }
}

TEST(Fourier, PartialSumsWithinBound) {
    for (u64 H : {10ull, 100ull, 1000ull}) {
        double worst = 0.0;
        for (int i = 0; i <= 200; ++i) {
            const double x = i / 200.0 - 0.37;
            worst = std::max(worst, std::fabs(b2_fourier_partial(x, H) - B2(x)));
        }
        EXPECT_LE(worst, b2_fourier_error_bound(H)) << H;
    }
}

TEST(Decay, RatiosAndCompleteSumLaw) {
    const DecayReport rep = decay_scan({101, 1009}, {0.5, 1.0}, 10, 3);
    ASSERT_EQ(rep.summaries.size(), 4u);
    for (const auto& row : rep.rows) {
        EXPECT_LE(row.ratio, 1.0 + 1e-12);
        EXPECT_GE(row.a, 1u);
        EXPECT_LT(row.a, row.q);
    }
    // eps = 1 gives N = q, the complete sum, whose magnitude is |sqrt(q) e(theta) - 1|
    for (const auto& row : rep.rows) {
        if (row.epsilon != 1.0) continue;
        EXPECT_EQ(row.N, row.q);
        const double sq = std::sqrt(static_cast<double>(row.q));
        EXPECT_GE(row.abs_sum, sq - 1 - 1e-9);
        EXPECT_LE(row.abs_sum, sq + 1 + 1e-9);
    }
    const DecayReport again = decay_scan({101, 1009}, {0.5, 1.0}, 10, 1);
    ASSERT_EQ(again.rows.size(), rep.rows.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) EXPECT_EQ(again.rows[i].abs_sum, rep.rows[i].abs_sum);
    EXPECT_THROW(decay_scan({100}, {0.5}, 3), DomainError);
    EXPECT_THROW(decay_scan({101}, {1.5}, 3), DomainError);
}
