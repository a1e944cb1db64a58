#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sqlab/pairstats.hpp"

using namespace sqlab;

namespace {

bool trial_squarefree(i64 n) {
    if (n <= 0) return false;
    for (i64 p = 2; p * p <= n; ++p)
        if (n % (p * p) == 0) return false;
    return true;
}

// #{n in (0, X) : n and r n + l squarefree, r n + l in (0, X)} by direct scan.
i64 brute_S(i64 X, i64 l, i64 r) {
    i64 count = 0;
    for (i64 n = 1; n < X; ++n) {
        const i64 m = r * n + l;
        if (m > 0 && m < X && trial_squarefree(n) && trial_squarefree(m)) ++count;
    }
    return count;
}

}  // namespace

TEST(IntervalLength, Examples) {
    EXPECT_DOUBLE_EQ(interval_length(10, 3, 1), 7.0);
    EXPECT_DOUBLE_EQ(interval_length(10, 0, 1), 10.0);
    EXPECT_DOUBLE_EQ(interval_length(10, 25, -2), 2.5);
    EXPECT_DOUBLE_EQ(interval_length(10, 100, 1), 0.0);
    EXPECT_THROW(interval_length(10, 1, 0), DomainError);
}

TEST(IntervalLength, LipschitzInL) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> Ux(1.0, 1000.0);
    std::uniform_int_distribution<i64> Ul(-3000, 3000), Ur(-12, 12);
    for (int i = 0; i < 1000; ++i) {
        const double X = Ux(rng);
        const i64 l = Ul(rng);
        i64 r = Ur(rng);
        if (r == 0) r = 1;
        const double d = std::fabs(interval_length(X, static_cast<double>(l), r) -
                                   interval_length(X, static_cast<double>(l + 1), r));
        ASSERT_LE(d, 2.0 / static_cast<double>(std::abs(r)) + 1e-12);
    }
}

TEST(PairCount, Examples) {
    EXPECT_EQ(pair_count_S(10, 1, 1), 4);    // n in {1, 2, 5, 6}
    EXPECT_EQ(pair_count_S(10, 0, 1), 6);    // squarefree n in 1..9: 1, 2, 3, 5, 6, 7
    EXPECT_EQ(pair_count_S(10, 100, 1), 0);  // window empty
}

TEST(PairCount, ZeroShiftIsOpenIntervalCount) {
    for (i64 X : {2, 10, 11, 100, 1000, 12345})
        EXPECT_EQ(pair_count_S(X, 0, 1), static_cast<i64>(count_squarefree(static_cast<u64>(X - 1)))) << X;
}

TEST(PairCount, MatchesBruteForceBothSigns) {
    std::mt19937_64 rng(9);
    const i64 rs[] = {1, -1, 2, -2, 3, -3, 5, -6, 7, -10};
    for (int i = 0; i < 300; ++i) {
        const i64 X = 2 + static_cast<i64>(rng() % 3000);
        const i64 r = rs[rng() % std::size(rs)];
        const i64 l = static_cast<i64>(rng() % 8001) - 4000;
        ASSERT_EQ(pair_count_S(X, l, r), brute_S(X, l, r)) << X << " " << l << " " << r;
    }
}

TEST(PairCount, ReflectionInL) {
    std::mt19937_64 rng(13);
    const i64 X = 10'000;
    const SqfreeSegment seg = sieve_squarefree(1, X);
    for (int i = 0; i < 20; ++i) {
        const i64 l = static_cast<i64>(rng() % 20001) - 10000;
        EXPECT_EQ(pair_count_S(X, l, 1, seg), pair_count_S(X, -l, 1, seg)) << l;
    }
}

TEST(PairCount, Errors) {
    EXPECT_THROW(pair_index_range(std::numeric_limits<i64>::max() / 2, 5, 3), CapacityError);
    EXPECT_THROW(pair_count_S(10, 1, 0), DomainError);
}

TEST(VerifyPairDensity, Examples) {
    const PairDensityReport big = verify_pair_density(1'000'000, 1, {1});
    EXPECT_LT(big.rows[0].rel_dev, 0.01);

    const PairDensityReport four = verify_pair_density(10'000, 1, {4});
    EXPECT_EQ(four.rows[0].f.rational_part, Rational(3, 2));
    EXPECT_NEAR(four.rows[0].f.approx, 1.5 * c2(), 1e-15);

    const PairDensityReport tiny = verify_pair_density(10, 1, {1});
    EXPECT_EQ(tiny.rows[0].S, 4);
    EXPECT_DOUBLE_EQ(tiny.rows[0].interval, 9.0);
    EXPECT_NEAR(tiny.rows[0].abs_dev, std::fabs(4.0 - 9.0 * c2()), 1e-12);
    EXPECT_NEAR(tiny.rows[0].abs_dev, 1.1, 0.01);
}

TEST(VerifyPairDensity, SummaryAndWorkers) {
    std::vector<i64> ls;
    for (i64 l = -20; l <= 20; ++l)
        if (l) ls.push_back(l);
    const PairDensityReport one = verify_pair_density(200'000, -3, ls, 1);
    const PairDensityReport many = verify_pair_density(200'000, -3, ls, 6);
    ASSERT_EQ(one.rows.size(), ls.size());
    double mx = 0.0;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        EXPECT_EQ(one.rows[i].S, many.rows[i].S);
        EXPECT_EQ(one.rows[i].main, many.rows[i].main);
        mx = std::max(mx, one.rows[i].abs_dev);
    }
    EXPECT_EQ(one.max_abs_dev, mx);
    EXPECT_EQ(one.mean_rel_dev, many.mean_rel_dev);
}

TEST(BigSigma, HandEnumeration) {
    // l in {-8, -5, -2, 1, 4, 7}: weights f/C_2 of 3/2, 1, 1, 1, 3/2, 1 and lengths 2, 5, 8, 9, 6, 3
    const BigSigma bs = big_sigma_detail(10, 3, 1, 1);
    EXPECT_NEAR(bs.value / c2(), 37.0, 1e-12);
    EXPECT_EQ(bs.terms, 6u);
}

TEST(BigSigma, MatchesDirectLoop) {
    struct Case {
        double X;
        u64 q;
        i64 r, s;
    };
    for (const Case& c : {Case{1000, 7, -3, 2}, Case{2500.5, 101, 6, -4}, Case{777, 13, -1, 1}, Case{5000, 3, 2, 1}}) {
        CompensatedSum acc;
        const i64 span = static_cast<i64>(std::ceil((1 + std::abs(c.r)) * c.X)) + 1;
        for (i64 l = -span; l <= span; ++l) {
            if (mod_floor(l - c.s, c.q) != 0) continue;
            const double len = interval_length(c.X, static_cast<double>(l), c.r);
            if (len > 0) acc.add(f_density(l, c.r).approx * len);
        }
        EXPECT_NEAR(big_sigma(c.X, c.q, c.r, c.s) / acc.value(), 1.0, 1e-12) << c.q << " " << c.r;
    }
}

TEST(BigSigma, WeightPathsAgree) {
    for (i64 r : {-1, 1, -2, 6, -30}) {
        const double fz = big_sigma_detail(300'000, 101, r, 5, 1, WeightPath::factorize).value;
        const double sv = big_sigma_detail(300'000, 101, r, 5, 1, WeightPath::sieve).value;
        EXPECT_NEAR(sv / fz, 1.0, 1e-12) << r;
    }
}

TEST(BigSigma, CongruenceAndWorkers) {
    const double base = big_sigma(1e6, 1009, -1, 1, 1);
    EXPECT_EQ(big_sigma(1e6, 1009, -1, 1 + 1009, 1), base);
    EXPECT_EQ(big_sigma(1e6, 1009, -1, 1 - 3 * 1009, 1), base);
    EXPECT_EQ(big_sigma(1e6, 1009, -1, 1, 8), base);
}

TEST(BigSigma, NearMainTerm) {
    const double main = big_sigma_main_term(1e6, 1009);
    EXPECT_NEAR(big_sigma(1e6, 1009, -1, 1) / main, 1.0, 1e-3);
    EXPECT_NEAR(big_sigma(1e6, 1009, 2, 3) / main, 1.0, 1e-3);
}

TEST(BigSigma, Errors) {
    EXPECT_THROW(big_sigma(100, 7, 14, 1), DomainError);
    EXPECT_THROW(big_sigma(100, 7, 1, 14), DomainError);
    EXPECT_THROW(big_sigma(100, 8, 1, 1), DomainError);
    EXPECT_THROW(big_sigma(100, 7, 4, 1), DomainError);
    EXPECT_THROW(big_sigma(2e8, 7, 1, 1), DomainError);
}
