#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cli_common.hpp"
#include "sqlab/apstats.hpp"
#include "sqlab/expsum.hpp"
#include "sqlab/localdensity.hpp"
#include "sqlab/pairstats.hpp"
#include "sqlab/rational.hpp"
#include "sqlab/sieve.hpp"

namespace sqlab::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    std::string measured;   // worst observed value, deterministic
    std::string threshold;  // the bound it is held to
    bool pass = false;
    double seconds = 0.0;
    double limit_seconds = 0.0;
    std::string note;  // free text for the console only
};

struct SuiteOptions {
    unsigned workers = 1;
    std::string cache_dir;     // empty: sieve in memory
    std::set<int> only;        // empty: every criterion
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
}

inline CriterionResult make_result(int id, std::string name, std::string threshold) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    r.threshold = std::move(threshold);
    return r;
}

inline SieveOptions sieve_opts(const SuiteOptions& o) {
    SieveOptions s;
    s.workers = o.workers;
    return s;
}

// 1. exact decomposition of the full correlation sum
inline CriterionResult decomposition(const SuiteOptions& o) {
    auto res = make_result(1, "full correlation equals S_gamma decomposition", "1e-6 * max(1, |S_gamma|)");
    res.limit_seconds = 30.0;
    struct Case {
        i64 X;
        u64 q;
        i64 r, s;
    };
    const Case cases[] = {{100'000, 101, -1, 7}, {1'000'000, 997, 2, 5}, {1'000'000, 1009, -1, 1}};
    double worst = 0.0;
    bool ok = true;
    for (const Case& c : cases) {
        const auto t0 = clock::now();
        const ErrorVector ev = error_vector(c.X, c.q, sieve_opts(o));
        const AffineMap map{c.r, c.s};
        const double lhs = full_correlation(ev, map);
        const double rhs = full_correlation_via_s_gamma(ev, map);
        const double scale = std::max(1.0, std::fabs(static_cast<double>(s_gamma(ev, map))));
        const double rel = std::fabs(lhs - rhs) / scale;
        worst = std::max(worst, rel);
        const double secs = since(t0);
        res.seconds = std::max(res.seconds, secs);
        ok = ok && rel <= 1e-6 && secs < res.limit_seconds;
    }
    res.measured = cli::fmt(worst);
    res.pass = ok;
    return res;
}

// 2. |complete sum + 1| = sqrt(q) for odd primes q <= 2000
inline CriterionResult gauss(const SuiteOptions&) {
    auto res = make_result(2, "Gauss magnitude, odd primes q <= 2000", "1e-9 * sqrt(q)");
    res.limit_seconds = 60.0;
    double worst = 0.0;
    for (u64 q : primes_up_to(2000)) {
        if (q == 2) continue;
        const double sq = std::sqrt(static_cast<double>(q));
        for (u64 a = 1; a <= std::min<u64>(50, q - 1); ++a) {
            const double dev = std::fabs(std::abs(complete_invsq_sum(q, static_cast<i64>(a)) + 1.0) - sq) / sq;
            worst = std::max(worst, dev);
        }
    }
    const double q2 = std::abs(complete_invsq_sum(2, 1) + 1.0);
    res.note = "q = 2 excluded: |sum + 1| = " + cli::fmt(q2) + " since the quadratic Gauss sum mod 2 vanishes";
    res.measured = cli::fmt(worst);
    res.pass = worst <= 1e-9;
    return res;
}

// 3. u_p table against brute force
inline CriterionResult local_counts(const SuiteOptions&) {
    auto res = make_result(3, "u_p equals brute force on the full grid", "mismatches = 0");
    res.limit_seconds = 60.0;
    const i64 rs[] = {1, -1, 2, -2, 3, -3, 5, -5, 6, -6, 7, -7, 10, -10};
    i64 mismatches = 0, checked = 0;
    for (u64 p : primes_up_to(97))
        for (i64 r : rs)
            for (i64 l = -500; l <= 500; ++l) {
                if (l == 0) continue;
                ++checked;
                if (u_p(p, l, r) != u_p_bruteforce(p, l, r)) ++mismatches;
            }
    res.measured = cli::fmt(mismatches);
    res.note = std::to_string(checked) + " cells";
    res.pass = mismatches == 0;
    return res;
}

// 4. sum_{mn = d} beta(m) = h(d), and beta vanishes off cubefree m
inline CriterionResult convolution(const SuiteOptions&) {
    auto res = make_result(4, "beta convolution gives h exactly; beta = 0 off cubefree", "mismatches = 0");
    res.limit_seconds = 10.0;
    i64 bad = 0;
    std::vector<Rational> beta(10'001);
    for (u64 m = 1; m <= 10'000; ++m) beta[m] = beta_value(m);
    for (u64 d = 1; d <= 5000; ++d) {
        Rational acc{0};
        for (u64 m : divisors(factorize(d))) acc += beta[m];
        if (acc != h_value(d)) ++bad;
    }
    for (u64 m = 1; m <= 10'000; ++m) {
        const Factorization fz = factorize(m);
        const bool cubefree = std::all_of(fz.factors.begin(), fz.factors.end(),
                                          [](const PrimePower& f) { return f.exponent < 3; });
        if (!cubefree && beta[m] != Rational{0}) ++bad;
    }
    res.measured = cli::fmt(bad);
    res.pass = bad == 0;
    return res;
}

// 5. rho-sigma sum equals prod (p^2 - 1)/p^2
inline CriterionResult rho_sigma(const SuiteOptions&) {
    auto res = make_result(5, "rho-sigma sum equals prod_{p|r} (p^2-1)/p^2", "mismatches = 0");
    res.limit_seconds = 10.0;
    i64 bad = 0;
    for (i64 r = 1; r <= 50; ++r) {
        if (!is_squarefree(r)) continue;
        Rational expect{1};
        for (const auto& f : factorize(static_cast<u64>(r)).factors) {
            const i64 p2 = static_cast<i64>(f.prime * f.prime);
            expect *= Rational(p2 - 1, p2);
        }
        if (rho_sigma_sum(r) != expect) ++bad;
    }
    res.measured = cli::fmt(bad);
    res.pass = bad == 0;
    return res;
}

// 6. S(X, l, 1) against f(l, 1) |I| at X = 10^7
inline CriterionResult pair_density(const SuiteOptions& o) {
    auto res = make_result(6, "pair counts match f |I| at X = 10^7, l in [1, 100]", "max rel dev <= 0.005");
    res.limit_seconds = 120.0;
    const auto t0 = clock::now();
    const i64 X = 10'000'000;
    std::optional<SegmentCache> cache;
    if (!o.cache_dir.empty()) cache.emplace(o.cache_dir);
    const SqfreeSegment seg = obtain_segment(1, static_cast<u64>(X), sieve_opts(o), cache ? &*cache : nullptr);
    std::vector<i64> ls(100);
    for (i64 l = 1; l <= 100; ++l) ls[static_cast<std::size_t>(l - 1)] = l;
    const PairDensityReport rep = verify_pair_density(X, 1, ls, seg, o.workers);
    res.seconds = since(t0);
    res.measured = cli::fmt(rep.max_rel_dev);
    res.pass = rep.max_rel_dev <= 0.005 && res.seconds < res.limit_seconds;
    return res;
}

// 7. big sigma against Lambda X^2 / q
inline CriterionResult big_sigma_main(const SuiteOptions& o) {
    auto res = make_result(7, "big sigma within 1e-3 of Lambda X^2/q at (10^6, 1009, -1, 1)", "rel dev <= 1e-3");
    res.limit_seconds = 120.0;
    const auto t0 = clock::now();
    const double X = 1e6;
    const double bs = big_sigma(X, 1009, -1, 1, o.workers);
    const double main = big_sigma_main_term(X, 1009);
    res.seconds = since(t0);
    const double rel = std::fabs(bs - main) / main;
    res.measured = cli::fmt(rel);
    res.pass = rel <= 1e-3 && res.seconds < res.limit_seconds;
    return res;
}

// 8. squarefree counting
inline CriterionResult counting(const SuiteOptions& o) {
    auto res = make_result(8, "|Q(X) - 6X/pi^2| <= sqrt(X) for X = 10^4..10^8; Q(100) = 61", "max |Q - 6X/pi^2| / sqrt(X) <= 1");
    res.limit_seconds = 120.0;
    const auto t0 = clock::now();
    double worst = 0.0;
    for (u64 X = 10'000; X <= 100'000'000; X *= 10) {
        const double dev = std::fabs(static_cast<double>(count_squarefree(X, sieve_opts(o))) -
                                     kSixOverPiSq * static_cast<double>(X));
        worst = std::max(worst, dev / std::sqrt(static_cast<double>(X)));
    }
    const u64 q100 = count_squarefree(100);
    res.seconds = since(t0);
    res.measured = cli::fmt(worst);
    res.note = "Q(100) = " + std::to_string(q100);
    res.pass = worst <= 1.0 && q100 == 61 && res.seconds < res.limit_seconds;
    return res;
}

inline double variance_ratio(i64 X, const SuiteOptions& o, u64* q_out = nullptr) {
    const u64 q = nearest_prime(std::pow(static_cast<double>(X), 0.8));
    if (q_out) *q_out = q;
    const ErrorVector ev = error_vector(X, q, sieve_opts(o));
    return variance(ev) / std::sqrt(static_cast<double>(X) * static_cast<double>(q));
}

// 9. V / sqrt(X q) stable between 10^6 and 10^7
inline CriterionResult variance_probe(const SuiteOptions& o) {
    auto res = make_result(9, "V/sqrt(Xq) at X = 10^6 and 10^7 agree within 25%", "|r6 - r7| / min(r6, r7) <= 0.25");
    res.limit_seconds = 300.0;
    const auto t0 = clock::now();
    u64 q6 = 0, q7 = 0;
    const double r6 = variance_ratio(1'000'000, o, &q6);
    const double r7 = variance_ratio(10'000'000, o, &q7);
    res.seconds = since(t0);
    const double spread = std::fabs(r6 - r7) / std::min(r6, r7);
    res.measured = cli::fmt(spread);
    res.note = "q = " + std::to_string(q6) + ": " + cli::fmt(r6) + "; q = " + std::to_string(q7) + ": " + cli::fmt(r7);
    res.pass = spread <= 0.25 && res.seconds < res.limit_seconds;
    return res;
}

// 10. non-homothety correlations against the homothety one
inline CriterionResult independence_probe(const SuiteOptions& o) {
    auto res = make_result(10, "|C_s|/V < |C_0|/V for s = 1, 2, 3 and median <= |C_0|/(3V) at X = 10^7", "median(|C_s|) / |C_0| <= 1/3");
    res.limit_seconds = 300.0;
    const auto t0 = clock::now();
    const i64 X = 10'000'000;
    const u64 q = nearest_prime(std::pow(static_cast<double>(X), 0.8));
    const ErrorVector ev = error_vector(X, q, sieve_opts(o));
    const double V = variance(ev);
    const double c0 = std::fabs(homothety_correlation(ev, -1)) / V;
    std::vector<double> cs;
    for (i64 s = 1; s <= 3; ++s) cs.push_back(std::fabs(correlation(ev, {-1, s})) / V);
    res.seconds = since(t0);
    std::vector<double> sorted = cs;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[1];
    const bool all_smaller = std::all_of(cs.begin(), cs.end(), [&](double c) { return c < c0; });
    res.measured = cli::fmt(median / c0);
    res.note = "q = " + std::to_string(q) + ", |C_0|/V = " + cli::fmt(c0) + ", |C_s|/V = " + cli::fmt(cs[0]) + ", " +
               cli::fmt(cs[1]) + ", " + cli::fmt(cs[2]) + (all_smaller ? "; all below |C_0|" : "; NOT all below |C_0|");
    res.pass = all_smaller && median <= c0 / 3.0 && res.seconds < res.limit_seconds;
    return res;
}

// 11. doubling a cutoff moves the value by at most the reported tail bound
inline CriterionResult truncation(const SuiteOptions& o) {
    auto res = make_result(11, "doubling cutoffs of a_sum, b_sum, g_sum stays within the tail bound", "max |v(2T) - v(T)| / tail_bound(T) <= 1");
    res.limit_seconds = 600.0;
    const auto t0 = clock::now();
    std::mt19937_64 rng(20240611);
    const std::vector<u64> primes = [] {
        std::vector<u64> ps;
        for (u64 p : primes_up_to(10'000))
            if (p >= 101) ps.push_back(p);
        return ps;
    }();
    const i64 rs[] = {-1, 1, 2, -2, 3, -3, 5, 6, -6, 7};
    std::uniform_int_distribution<std::size_t> pick_q(0, primes.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_r(0, std::size(rs) - 1);
    std::uniform_real_distribution<double> pick_y(1.0, 1000.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double Y = pick_y(rng);
        const u64 q = primes[pick_q(rng)];
        const i64 a = static_cast<i64>(std::uniform_int_distribution<u64>(1, q - 1)(rng));
        const i64 r = rs[pick_r(rng)];

        // tolerances scale with Y, the size of the trivial bound |A| <= 2Y
        const u64 Ta = a_sum_cutoff(Y, Y / 100.0);
        const TruncatedSum a1 = a_sum_to(Y, q, a, Ta, o.workers);
        const TruncatedSum a2 = a_sum_to(Y, q, a, 2 * Ta, o.workers);
        worst = std::max(worst, std::fabs(a2.value - a1.value) / a1.budget.tail_bound);

        const TruncatedSum b1 = b_sum(Y, q, a, r, Y / 100.0, o.workers);
        const TruncatedSum b2 = b_sum_to(Y, q, a, r, 2 * b1.budget.cutoff, o.workers);
        worst = std::max(worst, std::fabs(b2.value - b1.value) / b1.budget.tail_bound);

        const GSumCutoffs cut = g_sum_cutoffs(Y, q, r, Y / 50.0);
        const TruncatedSum g1 = g_sum_to(Y, q, a, r, cut, o.workers);
        const TruncatedSum g2 = g_sum_to(Y, q, a, r, {2 * cut.m_cutoff, 2.0 * cut.n_scale}, o.workers);
        worst = std::max(worst, std::fabs(g2.value - g1.value) / g1.budget.tail_bound);
    }
    res.seconds = since(t0);
    res.measured = cli::fmt(worst);
    res.pass = worst <= 1.0 && res.seconds < res.limit_seconds;
    return res;
}

/// The CSV-producing commands exercised by the determinism check.
inline std::vector<cli::RunConfig> determinism_runs() {
    std::vector<cli::RunConfig> runs;
    auto base = [](const char* cmd) {
        cli::RunConfig c;
        c.command = cmd;
        c.segment_size = u64(1) << 16;  // several blocks even at small X
        return c;
    };
    {
        auto c = base("sieve-count");
        c.X = 3'000'000;
        runs.push_back(c);
    }
    {
        auto c = base("evector");
        c.X = 1'000'000;
        c.q = 997;
        runs.push_back(c);
    }
    {
        auto c = base("correlate");
        c.X = 1'000'000;
        c.q = 997;
        c.r = -1;
        c.s = 1;
        runs.push_back(c);
    }
    {
        auto c = base("pairs");
        c.X = 1'000'000;
        c.r = 1;
        for (i64 l = 1; l <= 30; ++l) c.l_list.push_back(l);
        runs.push_back(c);
    }
    {
        auto c = base("bigsigma");
        c.X = 1'000'000;
        c.q = 1009;
        c.r = -1;
        c.s = 1;
        runs.push_back(c);
    }
    {
        auto c = base("asum");
        c.Y = 300.0;
        c.q = 1009;
        c.a = 5;
        c.tolerance = 0.01;
        runs.push_back(c);
    }
    {
        auto c = base("decay");
        c.q_list = {101, 1009, 10007};
        c.eps_list = {0.25, 0.5, 0.75, 1.0};
        c.a_samples = 16;
        runs.push_back(c);
    }
    return runs;
}

// 12. CSV bytes do not depend on the worker count
inline CriterionResult determinism(const SuiteOptions&) {
    auto res = make_result(12, "CSV outputs byte-identical for --workers 1 and 8", "differing outputs = 0");
    res.limit_seconds = 300.0;
    const auto t0 = clock::now();
    i64 differing = 0;
    for (cli::RunConfig c : determinism_runs()) {
        c.workers = 1;
        const std::string one = cli::run_command(c).csv;
        c.workers = 8;
        const std::string eight = cli::run_command(c).csv;
        if (one != eight) ++differing;
    }
    res.seconds = since(t0);
    res.measured = cli::fmt(differing);
    res.pass = differing == 0 && res.seconds < res.limit_seconds;
    return res;
}

}  // namespace detail

using CriterionFn = std::function<CriterionResult(const SuiteOptions&)>;

inline std::vector<std::pair<int, CriterionFn>> criteria() {
    return {{1, detail::decomposition},   {2, detail::gauss},          {3, detail::local_counts},
            {4, detail::convolution},     {5, detail::rho_sigma},      {6, detail::pair_density},
            {7, detail::big_sigma_main},  {8, detail::counting},       {9, detail::variance_probe},
            {10, detail::independence_probe}, {11, detail::truncation}, {12, detail::determinism}};
}

/// Runs the selected criteria, printing one line per criterion to `log`.
/// Exceptions count as failures.
inline std::vector<CriterionResult> run_suite(const SuiteOptions& opts, std::ostream& log) {
    std::vector<CriterionResult> out;
    for (const auto& [id, fn] : criteria()) {
        if (!opts.only.empty() && !opts.only.count(id)) continue;
        const auto t0 = detail::clock::now();
        CriterionResult res;
        try {
            res = fn(opts);
        } catch (const std::exception& e) {
            res.id = id;
            res.name = "criterion " + std::to_string(id);
            res.measured = "error";
            res.note = e.what();
            res.pass = false;
        }
        const double total = detail::since(t0);
        if (res.seconds == 0.0) res.seconds = total;
        if (res.limit_seconds > 0.0 && res.seconds >= res.limit_seconds) res.pass = false;
        char timing[64];
        std::snprintf(timing, sizeof timing, "%.2fs", total);
        log << (res.pass ? "PASS" : "FAIL") << " [" << id << "] " << res.name << " | measured " << res.measured
            << " vs " << res.threshold << " | " << timing;
        if (!res.note.empty()) log << " | " << res.note;
        log << std::endl;
        out.push_back(std::move(res));
    }
    return out;
}

inline std::string results_csv(const cli::RunConfig& c, const std::vector<CriterionResult>& results) {
    cli::CsvWriter w(c, "id,criterion,measured,threshold,pass");
    for (const auto& r : results)
        w.raw_row(std::to_string(r.id) + ",\"" + r.name + "\"," + r.measured + ",\"" + r.threshold + "\"," +
                  (r.pass ? "1" : "0"));
    return w.str();
}

}  // namespace sqlab::acceptance
