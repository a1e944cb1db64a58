#pragma once

#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sqlab/arith.hpp"
#include "sqlab/error.hpp"
#include "sqlab/localdensity.hpp"
#include "sqlab/parallel.hpp"
#include "sqlab/sieve.hpp"
#include "sqlab/summation.hpp"

namespace sqlab {

/// Residue counts of squarefree n <= X modulo q and the error terms
/// E[a] = counts[a] - C(q) X / q.
struct ErrorVector {
    i64 X = 0;
    u64 q = 0;
    std::vector<i64> counts;
    double main_term = 0.0;
    std::vector<double> E;
    i64 total = 0;  // Q(X)
};

/// gamma(a) = r a + s, reduced modulo q by the caller.
struct AffineMap {
    i64 r = 1;
    i64 s = 0;

    [[nodiscard]] u64 apply(u64 a, u64 q) const noexcept {
        return static_cast<u64>((static_cast<i128>(mod_floor(r, q)) * a + mod_floor(s, q)) % q);
    }
};

namespace detail {

// Adds the residues mod q of the set bits of `words` (bit 0 = n0) into counts.
inline void accumulate_residues(std::span<const u64> words, u64 n0, u64 q, std::vector<i64>& counts) {
    u64 base = n0 % q;
    const u64 step = 64 % q;
    for (u64 w : words) {
        while (w != 0) {
            const unsigned i = static_cast<unsigned>(std::countr_zero(w));
            u64 res = base + i;
            while (res >= q) res -= q;
            ++counts[res];
            w &= w - 1;
        }
        base += step;
        if (base >= q) base -= q;
    }
}

inline ErrorVector finish_error_vector(i64 X, u64 q, std::vector<i64> counts) {
    ErrorVector ev;
    ev.X = X;
    ev.q = q;
    ev.counts = std::move(counts);
    ev.main_term = cq_constant(q) * static_cast<double>(X) / static_cast<double>(q);
    ev.E.resize(q);
    for (u64 a = 0; a < q; ++a) ev.E[a] = static_cast<double>(ev.counts[a]) - ev.main_term;
    ev.total = std::accumulate(ev.counts.begin(), ev.counts.end(), i64{0});
    return ev;
}

}  // namespace detail

/// Error vector from a segment covering [1, X + 1).
inline ErrorVector error_vector(const SqfreeSegment& seg, u64 q) {
    if (seg.lo() != 1) throw DomainError("error_vector: segment must start at 1");
    if (q < 2) throw DomainError("error_vector: q must be >= 2");
    std::vector<i64> counts(q, 0);
    detail::accumulate_residues(seg.words(), 1, q, counts);
    return detail::finish_error_vector(static_cast<i64>(seg.hi() - 1), q, std::move(counts));
}

/// Error vector for n <= X, 2 <= q, X <= 10^9. Without a cache the range is
/// sieved block by block; each worker keeps its own residue counts and the
/// integer totals are merged afterwards.
inline ErrorVector error_vector(i64 X, u64 q, const SieveOptions& opts = {}, const SegmentCache* cache = nullptr) {
    if (q < 2) throw DomainError("error_vector: q must be >= 2");
    if (X < 1) throw DomainError("error_vector: X must be positive");
    if (X > 1'000'000'000) throw CapacityError("error_vector: X exceeds 10^9");
    if (cache) return error_vector(cache->load_or_sieve(1, static_cast<u64>(X) + 1, opts), q);

    const u64 hi = static_cast<u64>(X) + 1;
    const u64 block = opts.block_entries();
    const std::size_t n_blocks = static_cast<std::size_t>((hi - 1 + block - 1) / block);
    const unsigned n_workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(n_blocks)));
    std::vector<std::vector<i64>> per_worker(n_workers, std::vector<i64>(q, 0));
    for_each_block(n_blocks, n_workers, [&](std::size_t b, unsigned worker) {
        const u64 blo = 1 + b * block;
        const u64 bhi = std::min(hi, blo + block);
        std::vector<u64> buf(SqfreeSegment::word_count(bhi - blo));
        detail::sieve_block(blo, bhi, buf);
        detail::accumulate_residues(buf, blo, q, per_worker[worker]);
    });
    std::vector<i64> counts(q, 0);
    for (const auto& wc : per_worker)
        for (u64 a = 0; a < q; ++a) counts[a] += wc[a];
    return detail::finish_error_vector(X, q, std::move(counts));
}

/// sum over a with gcd(a, q) = 1 of E[a]^2.
inline double variance(const ErrorVector& ev) {
    CompensatedSum acc;
    for (u64 a = 1; a < ev.q; ++a)
        if (std::gcd(a, ev.q) == 1) acc.add(ev.E[a] * ev.E[a]);
    return acc.value();
}

/// S[gamma](X, q) = #{(n1, n2) : n1, n2 <= X squarefree, n2 = r n1 + s (mod q)}.
inline i64 s_gamma(const ErrorVector& ev, const AffineMap& map) {
    if (mod_floor(map.r, ev.q) == 0) throw HypothesisError("s_gamma: q divides r");
    i128 total = 0;
    for (u64 a = 0; a < ev.q; ++a) total += static_cast<i128>(ev.counts[a]) * ev.counts[map.apply(a, ev.q)];
    if (total > std::numeric_limits<i64>::max()) throw OverflowError("s_gamma: count exceeds 64 bits");
    return static_cast<i64>(total);
}

/// sum over all a mod q of E[a] E[gamma(a)].
inline double full_correlation(const ErrorVector& ev, const AffineMap& map) {
    if (mod_floor(map.r, ev.q) == 0) throw HypothesisError("full_correlation: q divides r");
    CompensatedSum acc;
    for (u64 a = 0; a < ev.q; ++a) acc.add(ev.E[a] * ev.E[map.apply(a, ev.q)]);
    return acc.value();
}

/// S[gamma] - 2 C(q) (X/q) Q(X) + C(q)^2 X^2 / q, which equals the full
/// correlation sum exactly.
inline double full_correlation_via_s_gamma(const ErrorVector& ev, const AffineMap& map) {
    const double Cq = cq_constant(ev.q);
    const double X = static_cast<double>(ev.X), q = static_cast<double>(ev.q);
    CompensatedSum acc;
    acc.add(static_cast<double>(s_gamma(ev, map)));
    acc.add(-2.0 * Cq * (X / q) * static_cast<double>(ev.total));
    acc.add(Cq * Cq * X * X / q);
    return acc.value();
}

/// gamma^{-1}(0) = -s r^{-1} mod q.
inline u64 gamma_preimage_of_zero(const AffineMap& map, u64 q) {
    return mul_mod(mod_floor(-map.s, q), mod_inverse(map.r, q), q);
}

/// C[gamma](X, q): the correlation sum over a not in {0, gamma^{-1}(0)}, for q
/// prime and q not| r s.
inline double correlation(const ErrorVector& ev, const AffineMap& map) {
    if (!is_prime(ev.q)) throw HypothesisError("correlation: q must be prime");
    if (mod_floor(map.r, ev.q) == 0 || mod_floor(map.s, ev.q) == 0)
        throw HypothesisError("correlation: q divides r s");
    const u64 skip = gamma_preimage_of_zero(map, ev.q);
    CompensatedSum acc;
    for (u64 a = 1; a < ev.q; ++a) {
        if (a == skip) continue;
        acc.add(ev.E[a] * ev.E[map.apply(a, ev.q)]);
    }
    return acc.value();
}

/// C[gamma_{r,0}](X, q) = sum over a != 0 of E[a] E[r a]; the homothety case
/// excluded from correlation().
inline double homothety_correlation(const ErrorVector& ev, i64 r) {
    if (!is_prime(ev.q)) throw HypothesisError("homothety_correlation: q must be prime");
    if (mod_floor(r, ev.q) == 0) throw HypothesisError("homothety_correlation: q divides r");
    const AffineMap map{r, 0};
    CompensatedSum acc;
    for (u64 a = 1; a < ev.q; ++a) acc.add(ev.E[a] * ev.E[map.apply(a, ev.q)]);
    return acc.value();
}

}  // namespace sqlab
