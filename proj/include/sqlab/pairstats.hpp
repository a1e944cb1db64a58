#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sqlab/arith.hpp"
#include "sqlab/error.hpp"
#include "sqlab/localdensity.hpp"
#include "sqlab/parallel.hpp"
#include "sqlab/sieve.hpp"
#include "sqlab/summation.hpp"

namespace sqlab {

/// Lebesgue length of I(X, l, r) = {u : u in (0, X) and r u + l in (0, X)}.
inline double interval_length(double X, double l, i64 r) {
    if (!(X > 0.0)) throw DomainError("interval_length: X must be positive");
    if (r == 0) throw DomainError("interval_length: r must be nonzero");
    const double rr = static_cast<double>(r);
    double len;
    if (r > 0)
        len = std::min(X, (X - l) / rr) - std::max(0.0, -l / rr);
    else
        len = std::min(X, -l / rr) - std::max(0.0, (X - l) / rr);
    return std::max(0.0, len);
}

struct PairWindow {
    double X;
    i64 l;
    i64 r;
    double length;
};

inline PairWindow pair_window(double X, i64 l, i64 r) {
    return PairWindow{X, l, r, interval_length(X, static_cast<double>(l), r)};
}

// ---------------------------------------------------------------------------
// S(l, r)
// ---------------------------------------------------------------------------

struct IndexRange {
    i64 first;  // inclusive
    i64 last;   // inclusive; empty when last < first
};

/// Integers n with 0 < n < X and 0 < r n + l < X.
inline IndexRange pair_index_range(i64 X, i64 l, i64 r) {
    if (X < 1) throw DomainError("pair_index_range: X must be positive");
    if (r == 0) throw DomainError("pair_index_range: r must be nonzero");
    constexpr i64 limit = i64(1) << 62;
    if (static_cast<i128>(abs_u64(r)) * X + abs_u64(l) >= limit)
        throw CapacityError("pair_count_S: r n + l overflows");
    i64 first = 1, last = X - 1;
    if (r > 0) {
        first = std::max(first, floor_div(-l, r) + 1);
        last = std::min(last, ceil_div(X - l, r) - 1);
    } else {
        const i64 ar = -r;
        last = std::min(last, ceil_div(l, ar) - 1);
        first = std::max(first, floor_div(l - X, ar) + 1);
    }
    return {first, last};
}

/// S(l, r) = sum over integers n in I(X, l, r) of mu^2(n) mu^2(r n + l); `seg`
/// must cover [1, X).
inline i64 pair_count_S(i64 X, i64 l, i64 r, const SqfreeSegment& seg) {
    const IndexRange range = pair_index_range(X, l, r);
    if (range.last < range.first) return 0;
    if (seg.lo() > 1 || seg.hi() < static_cast<u64>(X))
        throw DomainError("pair_count_S: segment must cover [1, X)");
    i64 count = 0;
    i64 m = r * range.first + l;
    for (i64 n = range.first; n <= range.last; ++n, m += r)
        count += static_cast<i64>(seg.test(static_cast<u64>(n)) & seg.test(static_cast<u64>(m)));
    return count;
}

inline i64 pair_count_S(i64 X, i64 l, i64 r) {
    if (X > 100'000'000) throw CapacityError("pair_count_S: X exceeds 10^8");
    if (X < 2) return 0;
    return pair_count_S(X, l, r, sieve_squarefree(1, static_cast<u64>(X)));
}

struct PairDensityRow {
    i64 l;
    i64 S;
    DensityValue f;
    double interval;
    double main;  // f |I|
    double abs_dev;
    double rel_dev;  // abs_dev / main, infinity when main = 0 and S > 0
};

struct PairDensityReport {
    i64 X;
    i64 r;
    std::vector<PairDensityRow> rows;
    double max_abs_dev = 0.0;
    double mean_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    double mean_rel_dev = 0.0;
};

/// Compares S(l, r) with f(l, r) |I(X, l, r)| for every l in `ls`; reports
/// deviations without judging them.
inline PairDensityReport verify_pair_density(i64 X, i64 r, const std::vector<i64>& ls, const SqfreeSegment& seg,
                                             unsigned workers = 1) {
    PairDensityReport rep{X, r, std::vector<PairDensityRow>(ls.size())};
    for_each_block(ls.size(), workers, [&](std::size_t i, unsigned) {
        const i64 l = ls[i];
        PairDensityRow row{};
        row.l = l;
        row.S = pair_count_S(X, l, r, seg);
        row.f = f_density(l, r);
        row.interval = interval_length(static_cast<double>(X), static_cast<double>(l), r);
        row.main = row.f.approx * row.interval;
        row.abs_dev = std::fabs(static_cast<double>(row.S) - row.main);
        row.rel_dev = row.main > 0.0 ? row.abs_dev / row.main
                                     : (row.S == 0 ? 0.0 : std::numeric_limits<double>::infinity());
        rep.rows[i] = row;
    });
    CompensatedSum abs_sum, rel_sum;
    for (const auto& row : rep.rows) {
        rep.max_abs_dev = std::max(rep.max_abs_dev, row.abs_dev);
        rep.max_rel_dev = std::max(rep.max_rel_dev, row.rel_dev);
        abs_sum.add(row.abs_dev);
        rel_sum.add(row.rel_dev);
    }
    if (!rep.rows.empty()) {
        rep.mean_abs_dev = abs_sum.value() / static_cast<double>(rep.rows.size());
        rep.mean_rel_dev = rel_sum.value() / static_cast<double>(rep.rows.size());
    }
    return rep;
}

inline PairDensityReport verify_pair_density(i64 X, i64 r, const std::vector<i64>& ls, unsigned workers = 1) {
    if (X > 100'000'000) throw CapacityError("verify_pair_density: X exceeds 10^8");
    if (X < 2) throw DomainError("verify_pair_density: X must be >= 2");
    SieveOptions opts;
    opts.workers = workers;
    return verify_pair_density(X, r, ls, sieve_squarefree(1, static_cast<u64>(X), opts), workers);
}

// ---------------------------------------------------------------------------
// Completed main-term sum over a residue class of l
// ---------------------------------------------------------------------------

enum class WeightPath { automatic, factorize, sieve };

struct BigSigma {
    double value = 0.0;    // sum_{l = s (q)} f(l, r) |I(X, l, r)|
    double reduced = 0.0;  // same sum without C_2 prod_{p|r} (p^2-1)/(p^2-2)
    u64 terms = 0;         // progression terms with a nonzero window
};

namespace detail {

inline constexpr std::size_t kBigSigmaBlock = 4096;
inline constexpr u64 kFactorizePathMaxTerms = u64(1) << 20;

// Reduced weights prod_{p^2 | l, p not| r} (p^2-1)/(p^2-2) kappa((l, r^2)) for
// l = l0 + q k, k in [0, n), by sieving prime squares along the progression.
inline std::vector<double> progression_weights(i64 l0, u64 q, std::size_t n, const Factorization& r_fz) {
    std::vector<double> w(n, 1.0);
    if (n == 0) return w;
    const i64 l_last = l0 + static_cast<i64>(q) * static_cast<i64>(n - 1);
    const u64 max_abs = std::max(abs_u64(l0), abs_u64(l_last));
    const u64 root = isqrt(max_abs);
    for (u64 p : small_primes()) {
        if (p > root) break;
        if (p == q) continue;  // q never divides l here
        bool divides_r = false;
        for (const auto& f : r_fz.factors) divides_r = divides_r || f.prime == p;
        if (divides_r) continue;
        const u64 p2 = p * p;
        // l0 + q k = 0 (mod p^2)  <=>  k = -l0 q^-1 (mod p^2)
        const u64 k0 = mul_mod(mod_floor(-l0, p2), mod_inverse(static_cast<i64>(q % p2), p2), p2);
        const double factor = static_cast<double>(p2 - 1) / static_cast<double>(p2 - 2);
        for (u64 k = k0; k < n; k += p2) w[k] *= factor;
    }
    for (const auto& f : r_fz.factors) {
        const u64 p = f.prime;
        const double k1 = kappa_prime_power(p, 1).to_double();
        const double k2 = kappa_prime_power(p, 2).to_double();
        for (std::size_t k = 0; k < n; ++k) {
            const u64 al = abs_u64(l0 + static_cast<i64>(q) * static_cast<i64>(k));
            if (al % p != 0) continue;
            w[k] *= (al % (p * p) == 0) ? k2 : k1;
        }
    }
    return w;
}

}  // namespace detail

/// Exact finite evaluation of sum_{l = s (mod q)} f(l, r) |I(X, l, r)| for q
/// prime, q not| r s, r squarefree. Blocks of l are reduced in a fixed order so
/// the result does not depend on `workers`.
inline BigSigma big_sigma_detail(double X, u64 q, i64 r, i64 s, unsigned workers = 1,
                                 WeightPath path = WeightPath::automatic) {
    if (!(X > 0.0) || X > 1e8) throw DomainError("big_sigma: X must lie in (0, 10^8]");
    if (!is_prime(q)) throw DomainError("big_sigma: q must be prime");
    const Factorization r_fz = squarefree_factorization(r, "big_sigma");
    if (abs_u64(r) % q == 0 || mod_floor(s, q) == 0) throw DomainError("big_sigma: q divides r s");
    if (abs_u64(r) > 1000) throw DomainError("big_sigma: |r| too large");

    // nonzero windows need l in (-r X, X) for r > 0 and (0, (1 - r) X) for r < 0
    const double ar = static_cast<double>(abs_u64(r));
    const double l_min = r > 0 ? -ar * X : 0.0;
    const double l_max = r > 0 ? X : (1.0 + ar) * X;
    const i64 qi = static_cast<i64>(q);
    const i64 s0 = static_cast<i64>(mod_floor(s, q));
    const i64 l_first = s0 + qi * ceil_div(static_cast<i64>(std::floor(l_min)) - s0, qi);
    const i64 l_last = s0 + qi * floor_div(static_cast<i64>(std::ceil(l_max)) - s0, qi);
    BigSigma out;
    if (l_last < l_first) return out;
    const u64 n_terms = static_cast<u64>((l_last - l_first) / qi + 1);
    const bool use_sieve = path == WeightPath::sieve ||
                           (path == WeightPath::automatic && n_terms > detail::kFactorizePathMaxTerms);

    struct Partial {
        CompensatedSum reduced;
        u64 terms = 0;
    };
    const std::size_t block = detail::kBigSigmaBlock;
    const std::size_t n_blocks = static_cast<std::size_t>((n_terms + block - 1) / block);
    const auto partials = map_blocks<Partial>(n_blocks, workers, [&](std::size_t b) {
        Partial part;
        const u64 k_begin = b * block;
        const std::size_t n = static_cast<std::size_t>(std::min<u64>(block, n_terms - k_begin));
        const i64 l_begin = l_first + qi * static_cast<i64>(k_begin);
        std::vector<double> weights;
        if (use_sieve) weights = detail::progression_weights(l_begin, q, n, r_fz);
        for (std::size_t k = 0; k < n; ++k) {
            const i64 l = l_begin + qi * static_cast<i64>(k);
            const double len = interval_length(X, static_cast<double>(l), r);
            if (len <= 0.0) continue;
            const double w =
                use_sieve ? weights[k] : reduced_density(factorize(abs_u64(l)), r_fz).to_double();
            part.reduced.add(w * len);
            ++part.terms;
        }
        return part;
    });
    CompensatedSum total;
    for (const auto& p : partials) {
        total += p.reduced;
        out.terms += p.terms;
    }
    out.reduced = total.value();
    // f(l, r) = C_2 prod_{p|r}(...) times the reduced weight; the common
    // factor is applied once to the exact sum of reduced terms
    out.value = c2() * r_factor(r_fz).to_double() * out.reduced;
    return out;
}

inline double big_sigma(double X, u64 q, i64 r, i64 s, unsigned workers = 1) {
    return big_sigma_detail(X, q, r, s, workers).value;
}

inline double reduced_big_sigma(double X, u64 q, i64 r, i64 s, unsigned workers = 1) {
    return big_sigma_detail(X, q, r, s, workers).reduced;
}

/// Lambda(q, r) X^2 / q.
inline double big_sigma_main_term(double X, u64 q) {
    return Lambda_closed_form(q) * X * X / static_cast<double>(q);
}

}  // namespace sqlab
