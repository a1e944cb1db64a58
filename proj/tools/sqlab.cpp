// sqlab: experiments on squarefree numbers in arithmetic progressions.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "acceptance_suite.hpp"
#include "cli_common.hpp"

namespace {

using sqlab::cli::RunConfig;

int run_selftest(const RunConfig& cfg) {
    sqlab::acceptance::SuiteOptions opts;
    opts.workers = cfg.workers;
    opts.cache_dir = cfg.cache_dir;
    const auto results = sqlab::acceptance::run_suite(opts, std::cout);
    if (!cfg.output.empty()) sqlab::cli::write_file(cfg.output, sqlab::acceptance::results_csv(cfg, results));
    bool ok = true;
    for (const auto& r : results) ok = ok && r.pass;
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"squarefree numbers in arithmetic progressions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sqlab::cli::kVersion);

    RunConfig cfg;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"sieve-count", "count squarefree n <= X"},
        {"evector", "error terms E(X, q, a) for every residue a"},
        {"variance", "sum of E^2 over reduced residues"},
        {"correlate", "correlation sum for gamma(a) = r a + s"},
        {"pairs", "pair counts S(X, l, r) against f(l, r) |I|"},
        {"density", "local density f(l, r)"},
        {"bigsigma", "completed main-term sum over l = s (mod q)"},
        {"expsum", "incomplete sum of e(a nbar^2 / q) for n <= N"},
        {"asum", "Bernoulli-difference sum A(Y; q, a)"},
        {"decay", "cancellation ratios of short inverse-square sums"},
        {"selftest", "run the acceptance suite"},
    };

    for (const Sub& s : subs) {
        CLI::App* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--x", cfg.X, "upper limit X");
        sc->add_option("--q", cfg.q, "modulus q");
        sc->add_option("--r", cfg.r, "multiplier r");
        sc->add_option("--s", cfg.s, "shift s");
        sc->add_option("--l", cfg.l_list, "comma-separated l values")->delimiter(',');
        sc->add_option("--y", cfg.Y, "length Y");
        sc->add_option("--a", cfg.a, "residue a");
        sc->add_option("--n", cfg.N, "number of terms N");
        sc->add_option("--tol", cfg.tolerance, "truncation tolerance")->check(CLI::PositiveNumber);
        sc->add_option("--q-list", cfg.q_list, "comma-separated primes")->delimiter(',');
        sc->add_option("--eps-list", cfg.eps_list, "comma-separated exponents")->delimiter(',');
        sc->add_option("--a-samples", cfg.a_samples, "residues sampled per modulus");
        sc->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
        sc->add_option("--cache-dir", cfg.cache_dir, "sieve cache directory");
        sc->add_option("--out", cfg.output, "CSV output path (default stdout)");
        sc->add_option("--svg", cfg.svg, "SVG plot path");
        sc->add_flag("--allow-degenerate", cfg.allow_degenerate, "permit q > X and s = 0 mod q");
        sc->add_option("--segment-size", cfg.segment_size, "sieve block length")->check(CLI::PositiveNumber);
        sc->callback([&cfg, name = std::string(s.name)] { cfg.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (const char* env = std::getenv("SQLAB_CACHE_DIR"); env && *env) cfg.cache_dir = env;

    try {
        if (cfg.command == "selftest") return run_selftest(cfg);
        const sqlab::cli::CommandOutput out = sqlab::cli::run_command(cfg);
        if (cfg.output.empty())
            std::cout << out.csv;
        else
            sqlab::cli::write_file(cfg.output, out.csv);
        if (!cfg.svg.empty()) {
            if (!out.plot) throw sqlab::cli::ValidationError("--svg: command " + cfg.command + " has no plot");
            sqlab::cli::write_file(cfg.svg, sqlab::cli::emit_svg(*out.plot));
        }
        return 0;
    } catch (const sqlab::cli::ValidationError& e) {
        std::cerr << "sqlab: " << e.what() << '\n';
        return 2;
    } catch (const sqlab::DomainError& e) {
        std::cerr << "sqlab: " << e.what() << '\n';
        return 2;
    } catch (const sqlab::HypothesisError& e) {
        std::cerr << "sqlab: " << e.what() << '\n';
        return 2;
    } catch (const sqlab::CapacityError& e) {
        std::cerr << "sqlab: " << e.what() << '\n';
        return 2;
    } catch (const sqlab::NotInvertibleError& e) {
        std::cerr << "sqlab: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "sqlab: " << e.what() << '\n';
        return 1;
    }
}
