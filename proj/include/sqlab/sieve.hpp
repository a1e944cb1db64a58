#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "sqlab/arith.hpp"
#include "sqlab/error.hpp"
#include "sqlab/parallel.hpp"

namespace sqlab {

inline constexpr u64 kMaxSieveHi = 1'000'000'000'000ull;  // 10^12
inline constexpr u64 kMaxSegmentLength = u64(1) << 32;

struct SieveOptions {
    u64 segment_size = u64(1) << 22;  // entries per block, rounded up to a multiple of 64
    unsigned workers = 1;

    [[nodiscard]] u64 block_entries() const noexcept {
        const u64 s = segment_size < 64 ? 64 : segment_size;
        return (s + 63) / 64 * 64;
    }
};

/// Packed indicator of mu^2(n) = 1 for n in [lo, hi). Bit i of word w encodes
/// lo + 64 w + i; bits past hi - lo are zero.
class SqfreeSegment {
public:
    SqfreeSegment() = default;
    SqfreeSegment(u64 lo, u64 hi, std::vector<u64> words) : lo_(lo), hi_(hi), words_(std::move(words)) {
        if (hi <= lo) throw DomainError("SqfreeSegment: empty range");
        if (words_.size() != word_count(hi - lo))
            throw DomainError("SqfreeSegment: word count does not match range");
    }

    [[nodiscard]] u64 lo() const noexcept { return lo_; }
    [[nodiscard]] u64 hi() const noexcept { return hi_; }
    [[nodiscard]] u64 size() const noexcept { return hi_ - lo_; }
    [[nodiscard]] std::span<const u64> words() const noexcept { return words_; }
    [[nodiscard]] std::span<u64> mutable_words() noexcept { return words_; }

    [[nodiscard]] bool contains(u64 n) const noexcept { return n >= lo_ && n < hi_; }

    /// mu^2(n) for n in [lo, hi); no range check.
    [[nodiscard]] bool test(u64 n) const noexcept {
        const u64 i = n - lo_;
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    [[nodiscard]] u64 popcount() const noexcept {
        u64 c = 0;
        for (u64 w : words_) c += static_cast<u64>(std::popcount(w));
        return c;
    }

    static constexpr std::size_t word_count(u64 len) noexcept { return static_cast<std::size_t>((len + 63) / 64); }

    friend bool operator==(const SqfreeSegment&, const SqfreeSegment&) = default;

private:
    u64 lo_ = 0;
    u64 hi_ = 0;
    std::vector<u64> words_;
};

namespace detail {

inline void check_sieve_range(u64 lo, u64 hi) {
    if (lo < 1 || hi <= lo) throw DomainError("sieve: need 1 <= lo < hi");
    if (hi > kMaxSieveHi) throw CapacityError("sieve: hi exceeds 10^12");
    if (hi - lo > kMaxSegmentLength) throw CapacityError("sieve: range longer than 2^32");
}

// Writes the squarefree indicator of [blo, bhi) into `out`, whose bit 0 is blo.
// Only multiples of p^2 are crossed off.
inline void sieve_block(u64 blo, u64 bhi, std::span<u64> out) {
    const u64 len = bhi - blo;
    const std::size_t nw = SqfreeSegment::word_count(len);
    std::fill(out.begin(), out.begin() + nw, ~u64(0));
    if (len % 64 != 0) out[nw - 1] = (u64(1) << (len % 64)) - 1;
    for (u64 p : small_primes()) {
        const u64 p2 = p * p;
        if (p2 >= bhi) break;
        u64 m = (blo + p2 - 1) / p2 * p2;
        for (; m < bhi; m += p2) {
            const u64 i = m - blo;
            out[i >> 6] &= ~(u64(1) << (i & 63));
        }
    }
}

}  // namespace detail

/// Squarefree indicator over [lo, hi), 1 <= lo < hi <= 10^12, hi - lo <= 2^32.
inline SqfreeSegment sieve_squarefree(u64 lo, u64 hi, const SieveOptions& opts = {}) {
    detail::check_sieve_range(lo, hi);
    const u64 len = hi - lo;
    std::vector<u64> words(SqfreeSegment::word_count(len));
    const u64 block = opts.block_entries();
    const std::size_t n_blocks = static_cast<std::size_t>((len + block - 1) / block);
    for_each_block(n_blocks, opts.workers, [&](std::size_t b, unsigned) {
        const u64 blo = lo + b * block;
        const u64 bhi = std::min(hi, blo + block);
        detail::sieve_block(blo, bhi, std::span<u64>(words).subspan(static_cast<std::size_t>(b * block / 64)));
    });
    return SqfreeSegment(lo, hi, std::move(words));
}

/// Concatenation of adjacent segments [a, b) and [b, c).
inline SqfreeSegment concat(const SqfreeSegment& left, const SqfreeSegment& right) {
    if (left.hi() != right.lo()) throw DomainError("concat: segments are not adjacent");
    const u64 lo = left.lo(), hi = right.hi();
    std::vector<u64> words(SqfreeSegment::word_count(hi - lo), 0);
    auto lw = left.words();
    std::copy(lw.begin(), lw.end(), words.begin());
    const u64 offset = left.size();
    auto rw = right.words();
    for (std::size_t w = 0; w < rw.size(); ++w) {
        const u64 bit = offset + 64 * w;
        const std::size_t dst = static_cast<std::size_t>(bit >> 6);
        const unsigned shift = static_cast<unsigned>(bit & 63);
        words[dst] |= rw[w] << shift;
        if (shift != 0 && dst + 1 < words.size()) words[dst + 1] |= rw[w] >> (64 - shift);
    }
    return SqfreeSegment(lo, hi, std::move(words));
}

/// mu(n) for n in [lo, hi), same range limits as sieve_squarefree.
inline std::vector<std::int8_t> sieve_mobius(u64 lo, u64 hi, const SieveOptions& opts = {}) {
    detail::check_sieve_range(lo, hi);
    const u64 len = hi - lo;
    std::vector<std::int8_t> mu(static_cast<std::size_t>(len));
    const u64 block = opts.block_entries();
    const std::size_t n_blocks = static_cast<std::size_t>((len + block - 1) / block);
    const u64 root = isqrt(hi - 1);
    for_each_block(n_blocks, opts.workers, [&](std::size_t b, unsigned) {
        const u64 blo = lo + b * block;
        const u64 bhi = std::min(hi, blo + block);
        const std::size_t n = static_cast<std::size_t>(bhi - blo);
        std::vector<u64> prod(n, 1);
        std::int8_t* out = mu.data() + b * block;
        std::fill(out, out + n, std::int8_t{1});
        for (u64 p : small_primes()) {
            if (p > root) break;
            for (u64 m = (blo + p - 1) / p * p; m < bhi; m += p) {
                const std::size_t i = static_cast<std::size_t>(m - blo);
                out[i] = static_cast<std::int8_t>(-out[i]);
                prod[i] *= p;
            }
            const u64 p2 = p * p;
            for (u64 m = (blo + p2 - 1) / p2 * p2; m < bhi; m += p2) out[m - blo] = 0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            // one prime factor above sqrt(hi) remains when the product falls short
            if (out[i] != 0 && prod[i] != blo + i) out[i] = static_cast<std::int8_t>(-out[i]);
        }
    });
    return mu;
}

/// Q(X) = #{n <= X : n squarefree}, sieved block by block without storing the
/// whole range. 1 <= X <= 10^10.
inline u64 count_squarefree(u64 X, const SieveOptions& opts = {}) {
    if (X == 0) throw DomainError("count_squarefree: X must be positive");
    if (X > 10'000'000'000ull) throw CapacityError("count_squarefree: X exceeds 10^10");
    const u64 lo = 1, hi = X + 1;
    const u64 block = opts.block_entries();
    const std::size_t n_blocks = static_cast<std::size_t>((hi - lo + block - 1) / block);
    const auto counts = map_blocks<u64>(n_blocks, opts.workers, [&](std::size_t b) {
        const u64 blo = lo + b * block;
        const u64 bhi = std::min(hi, blo + block);
        std::vector<u64> buf(SqfreeSegment::word_count(bhi - blo));
        detail::sieve_block(blo, bhi, buf);
        u64 c = 0;
        for (u64 w : buf) c += static_cast<u64>(std::popcount(w));
        return c;
    });
    u64 total = 0;
    for (u64 c : counts) total += c;
    return total;
}

// ---------------------------------------------------------------------------
// Segment cache
//
// File layout (little-endian): "SQF1", u8 version = 1, u64 lo, u64 hi, then
// ceil((hi - lo) / 64) u64 words with the SqfreeSegment bit layout.
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kCacheMagic{'S', 'Q', 'F', '1'};
inline constexpr std::uint8_t kCacheVersion = 1;

namespace detail {

inline void put_u64(std::string& buf, u64 v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline u64 get_u64(const unsigned char* p) noexcept {
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= u64(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::string encode_segment(const SqfreeSegment& seg) {
    std::string buf;
    buf.reserve(21 + 8 * seg.words().size());
    buf.append(kCacheMagic.data(), kCacheMagic.size());
    buf.push_back(static_cast<char>(kCacheVersion));
    detail::put_u64(buf, seg.lo());
    detail::put_u64(buf, seg.hi());
    for (u64 w : seg.words()) detail::put_u64(buf, w);
    return buf;
}

/// Parses a cache image; nullopt for anything malformed (bad magic, version,
/// length, empty range, or nonzero trailing bits).
inline std::optional<SqfreeSegment> decode_segment(std::span<const unsigned char> bytes) {
    constexpr std::size_t header = 4 + 1 + 8 + 8;
    if (bytes.size() < header) return std::nullopt;
    if (std::memcmp(bytes.data(), kCacheMagic.data(), 4) != 0) return std::nullopt;
    if (bytes[4] != kCacheVersion) return std::nullopt;
    const u64 lo = detail::get_u64(bytes.data() + 5);
    const u64 hi = detail::get_u64(bytes.data() + 13);
    if (hi <= lo || hi - lo > kMaxSegmentLength) return std::nullopt;
    const std::size_t nw = SqfreeSegment::word_count(hi - lo);
    if (bytes.size() != header + 8 * nw) return std::nullopt;
    std::vector<u64> words(nw);
    for (std::size_t w = 0; w < nw; ++w) words[w] = detail::get_u64(bytes.data() + header + 8 * w);
    const u64 tail = (hi - lo) % 64;
    if (tail != 0 && (words.back() >> tail) != 0) return std::nullopt;
    return SqfreeSegment(lo, hi, std::move(words));
}

/// Directory of persisted segments keyed by (lo, hi). Unreadable or invalid
/// files are treated as misses and overwritten.
class SegmentCache {
public:
    explicit SegmentCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

    [[nodiscard]] std::filesystem::path path_for(u64 lo, u64 hi) const {
        return dir_ / ("sqf_" + std::to_string(lo) + "_" + std::to_string(hi) + ".bin");
    }

    [[nodiscard]] std::optional<SqfreeSegment> load(u64 lo, u64 hi) const {
        std::ifstream in(path_for(lo, hi), std::ios::binary);
        if (!in) return std::nullopt;
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        auto seg = decode_segment(bytes);
        if (!seg || seg->lo() != lo || seg->hi() != hi) return std::nullopt;
        return seg;
    }

    /// Writes to a temporary file in the cache directory, then renames it over
    /// the final name.
    void store(const SqfreeSegment& seg) const {
        std::filesystem::create_directories(dir_);
        const auto final_path = path_for(seg.lo(), seg.hi());
        std::random_device rd;
        const auto tmp = final_path.string() + ".tmp" + std::to_string(rd());
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            const std::string buf = encode_segment(seg);
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            if (!out) throw Error("SegmentCache: write failed for " + tmp);
        }
        std::error_code ec;
        std::filesystem::rename(tmp, final_path, ec);
        if (ec) {
            std::filesystem::remove(tmp, ec);
            throw Error("SegmentCache: rename failed for " + final_path.string());
        }
    }

    SqfreeSegment load_or_sieve(u64 lo, u64 hi, const SieveOptions& opts = {}) const {
        if (auto seg = load(lo, hi)) return std::move(*seg);
        SqfreeSegment seg = sieve_squarefree(lo, hi, opts);
        store(seg);
        return seg;
    }

private:
    std::filesystem::path dir_;
};

/// Sieves [lo, hi), going through the cache when one is supplied.
inline SqfreeSegment obtain_segment(u64 lo, u64 hi, const SieveOptions& opts, const SegmentCache* cache) {
    return cache ? cache->load_or_sieve(lo, hi, opts) : sieve_squarefree(lo, hi, opts);
}

}  // namespace sqlab
