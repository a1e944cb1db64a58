#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <unistd.h>

#include "sqlab/arith.hpp"
#include "sqlab/sieve.hpp"

using namespace sqlab;
namespace fs = std::filesystem;

namespace {

bool trial_squarefree(u64 n) {
    for (u64 p = 2; p * p <= n; ++p)
        if (n % (p * p) == 0) return false;
    return true;
}

int trial_mobius(u64 n) {
    int mu = 1;
    for (u64 p = 2; p * p <= n; ++p) {
        if (n % p) continue;
        n /= p;
        if (n % p == 0) return 0;
        mu = -mu;
    }
    return n > 1 ? -mu : mu;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sqlab_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(SieveSquarefree, SmallRange) {
    const SqfreeSegment seg = sieve_squarefree(1, 11);
    for (u64 n = 1; n < 11; ++n) EXPECT_EQ(seg.test(n), trial_squarefree(n)) << n;
    EXPECT_TRUE(seg.test(10));
    EXPECT_FALSE(seg.test(4));
    EXPECT_FALSE(seg.test(8));
    EXPECT_FALSE(seg.test(9));
    EXPECT_EQ(seg.popcount(), 7u);
}

TEST(SieveSquarefree, SingleValue) {
    EXPECT_FALSE(sieve_squarefree(49, 50).test(49));
    EXPECT_TRUE(sieve_squarefree(51, 52).test(51));
}

TEST(SieveSquarefree, FarRange) {
    const u64 lo = 1'000'000'000;
    const SqfreeSegment seg = sieve_squarefree(lo, lo + 10);
    for (u64 n = lo; n < lo + 10; ++n) EXPECT_EQ(seg.test(n), trial_squarefree(n)) << n;
}

TEST(SieveSquarefree, AgreesWithTrialDivisionAcrossBlocks) {
    SieveOptions opts;
    opts.segment_size = 1000;  // rounded to 1024, forces many blocks
    opts.workers = 3;
    const SqfreeSegment seg = sieve_squarefree(123'457, 223'457, opts);
    for (u64 n = seg.lo(); n < seg.hi(); ++n) ASSERT_EQ(seg.test(n), trial_squarefree(n)) << n;
    EXPECT_EQ(seg, sieve_squarefree(123'457, 223'457));
}

TEST(SieveSquarefree, Errors) {
    EXPECT_THROW(sieve_squarefree(0, 10), DomainError);
    EXPECT_THROW(sieve_squarefree(10, 10), DomainError);
    EXPECT_THROW(sieve_squarefree(1, kMaxSieveHi + 1), CapacityError);
}

TEST(SieveSquarefree, JoinConsistency) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const u64 a = 1 + rng() % 9'000'000;
        const u64 c = a + 2 + rng() % 200'000;
        const u64 b = a + 1 + rng() % (c - a - 1);
        const SqfreeSegment joined = concat(sieve_squarefree(a, b), sieve_squarefree(b, c));
        ASSERT_EQ(joined, sieve_squarefree(a, c)) << a << " " << b << " " << c;
    }
}

TEST(SieveMobius, Examples) {
    const auto mu = sieve_mobius(1, 7);
    const std::vector<std::int8_t> expect{1, -1, -1, 0, -1, 1};
    EXPECT_EQ(mu, expect);
    EXPECT_EQ(sieve_mobius(30, 31)[0], -1);
}

TEST(SieveMobius, AgreesWithFactorize) {
    const u64 lo = 1'000'000;
    const auto mu = sieve_mobius(lo, lo + 100);
    for (u64 n = lo; n < lo + 100; ++n) EXPECT_EQ(mu[n - lo], mult_eval(MultKind::mu, n)) << n;
    const auto mu2 = sieve_mobius(1, 20001);
    for (u64 n = 1; n <= 20000; ++n) ASSERT_EQ(mu2[n - 1], trial_mobius(n)) << n;
}

TEST(SieveMobius, SquareMatchesSquarefreeIndicator) {
    SieveOptions opts;
    opts.workers = 4;
    const u64 hi = 1'000'001;
    const auto mu = sieve_mobius(1, hi, opts);
    const SqfreeSegment seg = sieve_squarefree(1, hi, opts);
    for (u64 n = 1; n < hi; ++n) ASSERT_EQ(mu[n - 1] * mu[n - 1], seg.test(n) ? 1 : 0) << n;
}

TEST(CountSquarefree, Examples) {
    EXPECT_EQ(count_squarefree(10), 7u);
    EXPECT_EQ(count_squarefree(100), 61u);
    EXPECT_EQ(count_squarefree(1), 1u);
    EXPECT_THROW(count_squarefree(0), DomainError);
}

TEST(CountSquarefree, EqualsPopcount) {
    for (u64 X : {1'000ull, 100'000ull, 1'000'000ull}) EXPECT_EQ(count_squarefree(X), sieve_squarefree(1, X + 1).popcount());
}

TEST(CountSquarefree, MobiusFormula) {
    // Q(X) = sum_{d <= sqrt X} mu(d) floor(X / d^2)
    for (u64 X : {999ull, 123'456ull, 10'000'000ull}) {
        i64 q = 0;
        for (u64 d = 1; d * d <= X; ++d) q += trial_mobius(d) * static_cast<i64>(X / (d * d));
        EXPECT_EQ(static_cast<i64>(count_squarefree(X)), q) << X;
    }
}

TEST(CountSquarefree, NearMainTerm) {
    const double six_over_pi2 = 6.0 / (std::numbers::pi * std::numbers::pi);
    SieveOptions opts;
    opts.workers = 4;
    for (u64 X = 10'000; X <= 100'000'000; X *= 10) {
        const double Q = static_cast<double>(count_squarefree(X, opts));
        EXPECT_LE(std::fabs(Q - six_over_pi2 * static_cast<double>(X)), std::sqrt(static_cast<double>(X))) << X;
    }
}

TEST(CountSquarefree, WorkerIndependent) {
    SieveOptions one, many;
    one.segment_size = many.segment_size = 1 << 12;
    many.workers = 7;
    EXPECT_EQ(count_squarefree(3'000'000, one), count_squarefree(3'000'000, many));
}

TEST(Cache, EncodingLayout) {
    const SqfreeSegment seg = sieve_squarefree(1, 11);
    const std::string bytes = encode_segment(seg);
    ASSERT_EQ(bytes.size(), 4u + 1u + 8u + 8u + 8u);
    EXPECT_EQ(bytes.substr(0, 4), "SQF1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 1u);   // lo = 1, little endian
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 11u); // hi = 11
    // n = 1, 2, 3, 5, 6, 7, 10 -> bits 0, 1, 2, 4, 5, 6, 9
    EXPECT_EQ(static_cast<unsigned char>(bytes[21]), 0b01110111u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[22]), 0b00000010u);
}

TEST(Cache, RoundTrip) {
    const SqfreeSegment seg = sieve_squarefree(1000, 5000);
    const std::string bytes = encode_segment(seg);
    const auto back = decode_segment(std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, seg);
}

TEST(Cache, RejectsMalformedBytes) {
    const SqfreeSegment seg = sieve_squarefree(1, 200);
    const std::string good = encode_segment(seg);
    auto decode = [](std::string b) {
        return decode_segment(std::span(reinterpret_cast<const unsigned char*>(b.data()), b.size()));
    };
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_FALSE(decode(bad_magic));
    std::string bad_version = good;
    bad_version[4] = 2;
    EXPECT_FALSE(decode(bad_version));
    EXPECT_FALSE(decode(good.substr(0, good.size() - 1)));
    EXPECT_FALSE(decode(good + "x"));
    std::string stray_bit = good;
    stray_bit.back() = static_cast<char>(0x80);  // beyond hi
    EXPECT_FALSE(decode(stray_bit));
}

TEST(Cache, StoreLoadAndIgnoreCorruption) {
    const fs::path dir = fresh_dir("cache");
    const SegmentCache cache(dir);
    EXPECT_FALSE(cache.load(1, 1001).has_value());
    const SqfreeSegment seg = cache.load_or_sieve(1, 1001);
    ASSERT_TRUE(fs::exists(cache.path_for(1, 1001)));
    EXPECT_EQ(*cache.load(1, 1001), seg);

    // overwrite the version byte
    {
        std::fstream f(cache.path_for(1, 1001), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        f.put(9);
    }
    EXPECT_FALSE(cache.load(1, 1001).has_value());
    EXPECT_EQ(cache.load_or_sieve(1, 1001), seg);  // recomputed and rewritten
    EXPECT_TRUE(cache.load(1, 1001).has_value());

    // a file whose header names another range is not trusted
    fs::copy_file(cache.path_for(1, 1001), cache.path_for(1, 2001));
    EXPECT_FALSE(cache.load(1, 2001).has_value());

    // no temporaries left behind
    for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().extension(), ".bin");
    fs::remove_all(dir);
}

TEST(Cache, ObtainSegmentMatchesDirectSieve) {
    const fs::path dir = fresh_dir("obtain");
    const SegmentCache cache(dir);
    SieveOptions opts;
    EXPECT_EQ(obtain_segment(1, 100'000, opts, &cache), sieve_squarefree(1, 100'000));
    EXPECT_EQ(obtain_segment(1, 100'000, opts, &cache), obtain_segment(1, 100'000, opts, nullptr));
    fs::remove_all(dir);
}
