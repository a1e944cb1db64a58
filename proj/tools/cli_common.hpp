#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sqlab/apstats.hpp"
#include "sqlab/expsum.hpp"
#include "sqlab/localdensity.hpp"
#include "sqlab/pairstats.hpp"
#include "sqlab/sieve.hpp"

namespace sqlab::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Raised for inputs that are rejected before or during dispatch (exit 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    std::string command;
    i64 X = 0;
    i64 q = 0;
    i64 r = -1;
    i64 s = 1;
    std::vector<i64> l_list;
    double Y = 0.0;
    i64 a = 1;
    i64 N = 0;
    double tolerance = 1e-3;
    std::vector<i64> q_list;
    std::vector<double> eps_list;
    i64 a_samples = 8;
    unsigned workers = 1;
    std::string cache_dir;
    std::string output;
    std::string svg;
    bool allow_degenerate = false;
    u64 segment_size = u64(1) << 22;
};

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt(i64 v) { return std::to_string(v); }
inline std::string fmt(u64 v) { return std::to_string(v); }

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += fmt(xs[i]);
    }
    return out;
}

/// The invocation as it would be typed, restricted to flags that can change
/// the numbers. --workers, --cache-dir, --out and --svg are left out so the
/// bytes do not depend on them.
inline std::string canonical_invocation(const RunConfig& c) {
    std::string s = "sqlab " + c.command;
    auto add = [&](const char* flag, const std::string& v) { s += std::string(" ") + flag + " " + v; };
    const std::string& cmd = c.command;
    if (cmd == "sieve-count" || cmd == "evector" || cmd == "variance" || cmd == "correlate" || cmd == "pairs" ||
        cmd == "bigsigma")
        add("--x", fmt(c.X));
    if (cmd == "evector" || cmd == "variance" || cmd == "correlate" || cmd == "bigsigma" || cmd == "expsum" ||
        cmd == "asum")
        add("--q", fmt(c.q));
    if (cmd == "correlate" || cmd == "pairs" || cmd == "density" || cmd == "bigsigma") add("--r", fmt(c.r));
    if (cmd == "correlate" || cmd == "bigsigma") add("--s", fmt(c.s));
    if (cmd == "pairs" || cmd == "density") add("--l", join(c.l_list));
    if (cmd == "asum") add("--y", fmt(c.Y));
    if (cmd == "expsum" || cmd == "asum") add("--a", fmt(c.a));
    if (cmd == "expsum") add("--n", fmt(c.N));
    if (cmd == "asum") add("--tol", fmt(c.tolerance));
    if (cmd == "decay") {
        add("--q-list", join(c.q_list));
        add("--eps-list", join(c.eps_list));
        add("--a-samples", fmt(c.a_samples));
    }
    if (c.allow_degenerate) s += " --allow-degenerate";
    return s;
}

class CsvWriter {
public:
    CsvWriter(const RunConfig& c, const std::string& header) {
        out_ << "# sqlab " << kVersion << " | " << canonical_invocation(c) << '\n' << header << '\n';
    }

    template <class... Ts>
    void row(const Ts&... cols) {
        bool first = true;
        ((out_ << (first ? "" : ",") << fmt(cols), first = false), ...);
        out_ << '\n';
    }

    void raw_row(const std::string& line) { out_ << line << '\n'; }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct Series {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::pair<double, double>> points;
    bool log_x = false;
    bool log_y = false;
    bool connect = false;  // polyline through the points, else markers only
};

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Static SVG 1.1 plot. Output depends only on the series.
inline std::string emit_svg(const Series& series) {
    if (series.points.empty()) throw ValidationError("emit_svg: empty series");
    auto tx = [&](double v) { return series.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return series.log_y ? std::log10(v) : v; };
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : series.points) {
        if ((series.log_x && !(x > 0)) || (series.log_y && !(y > 0))) continue;
        if (!std::isfinite(tx(x)) || !std::isfinite(ty(y))) continue;
        pts.emplace_back(tx(x), ty(y));
    }
    if (pts.empty()) throw ValidationError("emit_svg: no plottable points");
    double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
    for (const auto& [x, y] : pts) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }

    constexpr double W = 640, H = 480, L = 80, R = 20, T = 40, B = 60;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    auto tick = [](double v, bool log) { return fmt(log ? std::pow(10.0, v) : v).substr(0, 10); };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n"
      << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(series.title) << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << svg_num(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << xml_escape(tick(xv, series.log_x)) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << svg_num(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
          << xml_escape(tick(yv, series.log_y)) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(series.x_label + (series.log_x ? " (log)" : "")) << "</text>\n"
      << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << xml_escape(series.y_label + (series.log_y ? " (log)" : "")) << "</text>\n";
    if (series.connect && pts.size() > 1) {
        o << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            o << (i ? " " : "") << svg_num(px(pts[i].first)) << ',' << svg_num(py(pts[i].second));
        o << "\"/>\n";
    }
    for (const auto& [x, y] : pts)
        o << "<circle cx=\"" << svg_num(px(x)) << "\" cy=\"" << svg_num(py(y)) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandOutput {
    std::string csv;
    std::optional<Series> plot;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

inline SieveOptions sieve_opts(const RunConfig& c) {
    SieveOptions o;
    o.segment_size = c.segment_size;
    o.workers = c.workers;
    return o;
}

inline std::optional<SegmentCache> cache_for(const RunConfig& c) {
    if (c.cache_dir.empty()) return std::nullopt;
    return SegmentCache(c.cache_dir);
}

inline void check_regime(const RunConfig& c) {
    require(c.X >= 1, "--x must be positive");
    require(c.q >= 2, "--q must be >= 2");
    require(c.q <= c.X || c.allow_degenerate, "q > X needs --allow-degenerate");
}

inline ErrorVector ev_for(const RunConfig& c) {
    check_regime(c);
    const auto cache = cache_for(c);
    return error_vector(c.X, static_cast<u64>(c.q), sieve_opts(c), cache ? &*cache : nullptr);
}

}  // namespace detail

inline CommandOutput cmd_sieve_count(const RunConfig& c) {
    detail::require(c.X >= 1, "--x must be positive");
    const u64 Q = count_squarefree(static_cast<u64>(c.X), detail::sieve_opts(c));
    const double main = kSixOverPiSq * static_cast<double>(c.X);
    CsvWriter w(c, "X,Q,main,deviation");
    w.row(c.X, Q, main, static_cast<double>(Q) - main);
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_evector(const RunConfig& c) {
    const ErrorVector ev = detail::ev_for(c);
    CsvWriter w(c, "a,count,E");
    Series plot{"E(X, q, a)", "a", "E", {}};
    for (u64 a = 0; a < ev.q; ++a) {
        w.row(a, ev.counts[a], ev.E[a]);
        plot.points.emplace_back(static_cast<double>(a), ev.E[a]);
    }
    return {w.str(), plot};
}

inline CommandOutput cmd_variance(const RunConfig& c) {
    const ErrorVector ev = detail::ev_for(c);
    const double V = variance(ev);
    CsvWriter w(c, "X,q,variance,ratio");
    w.row(c.X, c.q, V, V / std::sqrt(static_cast<double>(c.X) * static_cast<double>(c.q)));
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_correlate(const RunConfig& c) {
    detail::require(is_prime(static_cast<u64>(std::max<i64>(c.q, 0))), "--q must be prime");
    detail::require(c.r != 0 && c.r % c.q != 0, "q must not divide r");
    const bool homothety = mod_floor(c.s, static_cast<u64>(c.q)) == 0;
    detail::require(!homothety || c.allow_degenerate, "s = 0 mod q is the homothety case; pass --allow-degenerate");
    const ErrorVector ev = detail::ev_for(c);
    const AffineMap map{c.r, c.s};
    const double V = variance(ev);
    const double C = homothety ? homothety_correlation(ev, c.r) : correlation(ev, map);
    CsvWriter w(c, "X,q,r,s,S_gamma,full_sum,C,variance,ratio");
    w.row(c.X, c.q, c.r, c.s, s_gamma(ev, map), full_correlation(ev, map), C, V, C / V);
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_pairs(const RunConfig& c) {
    detail::require(c.X >= 2 && c.X <= 100'000'000, "--x must lie in [2, 10^8]");
    detail::require(!c.l_list.empty(), "--l needs at least one value");
    const auto cache = detail::cache_for(c);
    const SqfreeSegment seg =
        obtain_segment(1, static_cast<u64>(c.X), detail::sieve_opts(c), cache ? &*cache : nullptr);
    const PairDensityReport rep = verify_pair_density(c.X, c.r, c.l_list, seg, c.workers);
    CsvWriter w(c, "l,r,S,f,interval,main,abs_dev,rel_dev");
    Series plot{"relative deviation of S from f |I|", "l", "rel_dev", {}};
    for (const auto& row : rep.rows) {
        w.row(row.l, c.r, row.S, row.f.approx, row.interval, row.main, row.abs_dev, row.rel_dev);
        plot.points.emplace_back(static_cast<double>(row.l), row.rel_dev);
    }
    return {w.str(), plot};
}

inline CommandOutput cmd_density(const RunConfig& c) {
    detail::require(!c.l_list.empty(), "--l needs at least one value");
    CsvWriter w(c, "l,r,f,rational_part");
    for (i64 l : c.l_list) {
        const DensityValue f = f_density(l, c.r);
        w.raw_row(fmt(l) + "," + fmt(c.r) + "," + fmt(f.approx) + "," + f.rational_part.str());
    }
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_bigsigma(const RunConfig& c) {
    detail::check_regime(c);
    const BigSigma bs = big_sigma_detail(static_cast<double>(c.X), static_cast<u64>(c.q), c.r, c.s, c.workers);
    const double main = big_sigma_main_term(static_cast<double>(c.X), static_cast<u64>(c.q));
    CsvWriter w(c, "X,q,r,s,sigma,main_term,rel_dev");
    w.row(c.X, c.q, c.r, c.s, bs.value, main, (bs.value - main) / main);
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_expsum(const RunConfig& c) {
    detail::require(c.q >= 2, "--q must be >= 2");
    detail::require(c.N >= 0, "--n must be non-negative");
    const ComplexValue v = incomplete_invsq_sum(static_cast<u64>(c.N), static_cast<u64>(c.q), c.a, c.workers);
    CsvWriter w(c, "N,q,a,re,im,abs");
    w.row(c.N, c.q, c.a, v.real(), v.imag(), std::abs(v));
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_asum(const RunConfig& c) {
    detail::require(c.q >= 2, "--q must be >= 2");
    detail::require(c.tolerance > 0, "--tol must be positive");
    const TruncatedSum t = a_sum(c.Y, static_cast<u64>(c.q), c.a, c.tolerance, c.workers);
    CsvWriter w(c, "Y,q,a,value,cutoff,tail_bound");
    w.row(c.Y, c.q, c.a, t.value, t.budget.cutoff, t.budget.tail_bound);
    return {w.str(), std::nullopt};
}

inline CommandOutput cmd_decay(const RunConfig& c) {
    detail::require(!c.q_list.empty() && !c.eps_list.empty(), "--q-list and --eps-list are required");
    detail::require(c.a_samples >= 1, "--a-samples must be positive");
    std::vector<u64> qs;
    for (i64 q : c.q_list) {
        detail::require(q >= 2, "--q-list entries must be >= 2");
        qs.push_back(static_cast<u64>(q));
    }
    const DecayReport rep = decay_scan(qs, c.eps_list, static_cast<u64>(c.a_samples), c.workers);
    CsvWriter w(c, "q,epsilon,N,a,abs_sum,ratio");
    for (const auto& row : rep.rows) w.row(row.q, row.epsilon, row.N, row.a, row.abs_sum, row.ratio);
    Series plot{"max |sum e(a nbar^2/q)| / N", "N", "ratio", {}, true, true};
    for (const auto& s : rep.summaries) plot.points.emplace_back(static_cast<double>(s.N), s.max_ratio);
    return {w.str(), plot};
}

/// Dispatches every command except selftest.
inline CommandOutput run_command(const RunConfig& c) {
    detail::require(c.workers >= 1, "--workers must be >= 1");
    const std::string& cmd = c.command;
    if (cmd == "sieve-count") return cmd_sieve_count(c);
    if (cmd == "evector") return cmd_evector(c);
    if (cmd == "variance") return cmd_variance(c);
    if (cmd == "correlate") return cmd_correlate(c);
    if (cmd == "pairs") return cmd_pairs(c);
    if (cmd == "density") return cmd_density(c);
    if (cmd == "bigsigma") return cmd_bigsigma(c);
    if (cmd == "expsum") return cmd_expsum(c);
    if (cmd == "asum") return cmd_asum(c);
    if (cmd == "decay") return cmd_decay(c);
    throw ValidationError("unknown command: " + cmd);
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path);
}

}  // namespace sqlab::cli
