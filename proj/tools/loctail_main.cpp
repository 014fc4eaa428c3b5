// loctail: Monte Carlo local-time moments, tail curves and tour geometry for
// self-similar Gaussian fields.  Every run is a pure function of its manifest;
// re-running a manifest reproduces all numeric outputs byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "loctail/asymptotics.hpp"
#include "loctail/rng.hpp"
#include "loctail/covariance.hpp"
#include "loctail/field_model.hpp"
#include "loctail/kernel.hpp"
#include "loctail/path_sim.hpp"
#include "loctail/serialize.hpp"
#include "loctail/tour.hpp"

namespace {

using loctail::FieldSpec;
using nlohmann::json;

constexpr int kExitPrecondition = 2;
constexpr int kExitCheckFailure = 3;

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("cannot parse ") + what + " entry '" + tok +
                                        "'");
        }
    }
    if (out.empty()) throw std::invalid_argument(std::string("empty ") + what + " list");
    return out;
}

std::vector<long> parse_long_list(const std::string& s, const char* what) {
    std::vector<long> out;
    for (double v : parse_double_list(s, what)) out.push_back(std::lround(v));
    return out;
}

long as_count(double v, const char* what) {
    if (!(v >= 1.0) || v > 9e15)
        throw std::invalid_argument(std::string(what) + " must be a positive count");
    return std::llround(v);
}

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (double x = 1.5; x <= 3.0 + 1e-12; x += 0.25) t.push_back(x);
    return t;
}

int auto_grid(int N) {
    int g = static_cast<int>(std::floor(std::pow(4096.0, 1.0 / N) + 1e-9));
    return std::max(g, 2);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    loctail::write_text_file(path.string(), j.dump(2) + "\n");
}

void emit_line(bool pass, const std::string& text, int& failures) {
    std::cout << (pass ? "[pass] " : "[FAIL] ") << text << "\n";
    if (!pass) ++failures;
}

// ---------------------------------------------------------------- commands

int run_moments(const json& manifest, const std::filesystem::path& out) {
    const FieldSpec spec = loctail::spec_from_json(manifest.at("spec"));
    const auto& p = manifest.at("params");
    loctail::MomentOptions opts;
    opts.median_of_means = !p.value("plain_mean", false);
    auto series =
        loctail::moment_series(spec, p.at("n_max").get<int>(), p.at("samples").get<long>(),
                               manifest.at("seed").get<std::uint64_t>(), p.at("beta").get<double>(),
                               opts);
    loctail::write_text_file((out / "moments.csv").string(), loctail::moments_csv(series));
    write_json_file(out / "moments.json", loctail::moments_json(series));
    std::cout << loctail::spec_summary(spec) << "\n";
    for (const auto& e : series.entries)
        std::cout << "n=" << e.n << "  value=" << e.value << "  se=" << e.se
                  << "  samples=" << e.samples << (e.warning ? "  [rejection > 1%]" : "") << "\n";
    std::cout << "wrote " << (out / "moments.csv").string() << "\n";
    return 0;
}

int run_tails(const json& manifest, const std::filesystem::path& out) {
    const FieldSpec spec = loctail::spec_from_json(manifest.at("spec"));
    const auto& p = manifest.at("params");
    std::vector<int> shape(static_cast<std::size_t>(spec.N()), p.at("grid").get<int>());
    auto curve = loctail::tail_curve(spec, p.at("thresholds").get<std::vector<double>>(),
                                     p.at("replications").get<long>(), shape,
                                     p.at("eps").get<std::vector<double>>(),
                                     manifest.at("seed").get<std::uint64_t>());
    loctail::write_text_file((out / "tail_curve.csv").string(), loctail::tail_curve_csv(curve));
    const double lambda =
        p.at("lambda").get<double>() > 0 ? p.at("lambda").get<double>() : loctail::lambda_exponent(spec);
    json fit_j;
    try {
        auto fit = loctail::tail_exponent_fit(curve, lambda);
        fit_j = loctail::tail_fit_json(fit);
        std::cout << "slope=" << fit.slope << "  95% [" << fit.lo << ", " << fit.hi << "]"
                  << (fit.curvature_flag ? "  [curved: lambda looks off]" : "") << "\n";
    } catch (const std::runtime_error& e) {
        fit_j = json{{"schema_version", 1}, {"error", e.what()}};
        std::cout << "fit unavailable: " << e.what() << "\n";
    }
    write_json_file(out / "tail_fit.json", fit_j);
    std::cout << "wrote " << (out / "tail_curve.csv").string() << "\n";
    return 0;
}

int run_tour(const json& manifest, const std::filesystem::path& out) {
    const auto& p = manifest.at("params");
    loctail::ScalingVector alpha(p.at("alpha").get<std::vector<double>>());
    auto ns = p.at("n").get<std::vector<long>>();
    auto report = loctail::tour_exponent_sweep(ns, alpha, p.at("restarts").get<int>(),
                                               manifest.at("seed").get<std::uint64_t>());
    json j = loctail::tour_json(report);
    json bounds = json::array();
    std::vector<double> logn, logb;
    for (long n : ns) {
        double b = loctail::grid_covering_bound(n, alpha);
        bounds.push_back(b);
        logn.push_back(std::log(static_cast<double>(n)));
        logb.push_back(std::log(b));
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (ns.size() >= 2) {
        double mx = 0, my = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < logn.size(); ++i) mx += logn[i], my += logb[i];
        mx /= logn.size(), my /= logn.size();
        for (std::size_t i = 0; i < logn.size(); ++i)
            sxx += (logn[i] - mx) * (logn[i] - mx), sxy += (logn[i] - mx) * (logb[i] - my);
        slope = sxy / sxx;
    }
    j["covering_bound"] = std::move(bounds);
    j["covering_bound_slope"] = slope;
    write_json_file(out / "tour.json", j);
    std::cout << "n=" << report.n << "  worst tour length=" << report.length
              << "  covering bound=" << report.bound << "\n";
    if (!std::isnan(report.sweep_slope))
        std::cout << "search slope=" << report.sweep_slope << "  bound slope=" << slope << "\n";
    std::cout << "wrote " << (out / "tour.json").string() << "\n";
    return 0;
}

int run_intersect(const json& manifest, const std::filesystem::path& out) {
    const FieldSpec spec = loctail::spec_from_json(manifest.at("spec"));
    if (spec.model().name() != "intersection")
        throw std::invalid_argument("intersect needs an intersection spec (intersect:<a>x<b>)");
    const auto& p = manifest.at("params");
    const double gamma = loctail::lambda_exponent(spec);
    auto series =
        loctail::moment_series(spec, p.at("n_max").get<int>(), p.at("samples").get<long>(),
                               manifest.at("seed").get<std::uint64_t>());
    loctail::write_text_file((out / "moments.csv").string(), loctail::moments_csv(series));

    auto pack = [&](double lam) {
        json arr = json::array();
        for (const auto& g : loctail::growth_ratio(series, lam))
            if (g.n >= 2) arr.push_back({{"n", g.n}, {"ratio", g.ratio}, {"stderr", g.se}});
        return arr;
    };
    json jg = pack(gamma), j2 = pack(2 * gamma);
    bool monotone = true;
    for (std::size_t i = 1; i < jg.size(); ++i)
        monotone = monotone && jg[i]["ratio"].get<double>() > jg[i - 1]["ratio"].get<double>();
    std::vector<double> r2;
    for (const auto& e : j2) r2.push_back(e["ratio"].get<double>());
    std::sort(r2.begin(), r2.end());
    const double med = r2.empty() ? 0.0 : r2[r2.size() / 2];
    double band = 0.0;
    for (const auto& e : j2)
        band = std::max(band, std::abs(e["ratio"].get<double>() / med - 1.0));

    json j{{"schema_version", 1},
           {"fingerprint", spec.fingerprint()},
           {"gamma", gamma},
           {"ratio_at_gamma", jg},
           {"gamma_drifts_upward", monotone},
           {"alt_exponent", 2 * gamma},
           {"ratio_at_alt", j2},
           {"alt_band_rel", band}};
    write_json_file(out / "intersect.json", j);
    std::cout << loctail::spec_summary(spec) << "\n";
    std::cout << "ratios vs n^" << gamma << (monotone ? " drift upward" : " do not drift upward")
              << "; vs n^" << 2 * gamma << " stay within " << band * 100 << "% of their median\n";
    std::cout << "wrote " << (out / "intersect.json").string() << "\n";
    return 0;
}

int run_check(const json& manifest, const std::filesystem::path& out) {
    const FieldSpec spec = loctail::spec_from_json(manifest.at("spec"));
    const auto& p = manifest.at("params");
    const std::uint64_t seed = manifest.at("seed").get<std::uint64_t>();
    int failures = 0;
    std::cout << loctail::spec_summary(spec) << "\n";

    std::string reason;
    if (!spec.theorem_ready(&reason)) throw std::invalid_argument(reason);

    // scaling identity of the kernel under the diagonal flow
    if (spec.model().self_similar()) {
        double worst = 0.0;
        loctail::RngStream rng(seed, 0x5ca1eull);
        for (int trial = 0; trial < 100; ++trial) {
            int n = 1 + static_cast<int>(rng.next_u64() % 4);
            std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
            for (auto& t : pts) {
                t.resize(spec.N());
                for (int i = 0; i < spec.N(); ++i) t[i] = rng.next_unit();
            }
            double omega = 0.5 + 1.5 * rng.next_unit();
            worst = std::max(worst, loctail::self_similarity_residual(spec, omega, pts));
        }
        std::ostringstream os;
        os << "kernel scaling identity (max rel err " << worst << ")";
        emit_line(worst < 1e-8, os.str(), failures);
    }

    auto series = loctail::moment_series(spec, p.at("n_max").get<int>(),
                                         p.at("samples").get<long>(), seed);
    loctail::write_text_file((out / "moments.csv").string(), loctail::moments_csv(series));
    emit_line(loctail::lyapunov_consistent(series), "lyapunov monotonicity of E(Z^n)^{1/n}",
              failures);

    const auto slnd = spec.slnd();
    auto fb = loctail::factorial_bound_check(series, slnd.xi_sum(), series.beta);
    {
        std::ostringstream os;
        os << "factorial moment bound (root trend " << fb.trend_slope << ", c=" << fb.c << ")";
        emit_line(fb.stable, os.str(), failures);
    }

    const double lambda = loctail::lambda_exponent(spec);
    std::vector<int> shape(static_cast<std::size_t>(spec.N()), p.at("grid").get<int>());
    auto curve = loctail::tail_curve(spec, p.at("thresholds").get<std::vector<double>>(),
                                     p.at("replications").get<long>(), shape,
                                     p.at("eps").get<std::vector<double>>(), seed);
    loctail::write_text_file((out / "tail_curve.csv").string(), loctail::tail_curve_csv(curve));

    auto verdict = loctail::limit_diagnostics(series, curve, lambda);
    write_json_file(out / "verdict.json", loctail::verdict_json(verdict));
    {
        std::ostringstream os;
        os << "moment route vs tail route: implied constant " << verdict.implied << " in ["
           << verdict.implied_lo << ", " << verdict.implied_hi << "], tail slope "
           << verdict.slope << " in [" << verdict.slope_lo << ", " << verdict.slope_hi << "]";
        if (verdict.insufficient) os << " (insufficient: " << verdict.note << ")";
        emit_line(verdict.consistent && !verdict.insufficient, os.str(), failures);
    }
    if (verdict.curvature_flag)
        std::cout << "[note] tail curve bends against x^{1/lambda}: lambda looks off\n";

    std::cout << (failures == 0 ? "all checks passed"
                                : std::to_string(failures) + " check(s) failed")
              << "\n";
    return failures == 0 ? 0 : kExitCheckFailure;
}

int run_validate(const json& manifest, const std::filesystem::path& out) {
    const FieldSpec spec = loctail::spec_from_json(manifest.at("spec"));
    const std::uint64_t seed = manifest.at("seed").get<std::uint64_t>();
    std::string reason;
    json report{{"schema_version", 1}, {"fingerprint", spec.fingerprint()}};
    if (!spec.theorem_ready(&reason)) {
        report["ok"] = false;
        report["reason"] = reason;
        write_json_file(out / "validate.json", report);
        std::cout << "invalid spec: " << reason << "\n";
        return kExitPrecondition;
    }

    // small smoke sweep: the covariance must factor and chain on random configs
    loctail::RngStream rng(seed, 0x7a11ull);
    double worst_rel = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 8 && ok; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 3);
        std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
        for (auto& t : pts) {
            t.resize(spec.N());
            for (int i = 0; i < spec.N(); ++i) t[i] = 0.05 + 0.9 * rng.next_unit();
        }
        auto chain = loctail::detcov_chain_check(spec, pts);
        if (chain.degenerate) continue;
        worst_rel = std::max(worst_rel, chain.rel_error);
        ok = chain.rel_error < 1e-6;
    }
    report["ok"] = ok;
    report["detcov_chain_rel_error"] = worst_rel;
    report["summary"] = loctail::spec_summary(spec);
    write_json_file(out / "validate.json", report);
    std::cout << (ok ? "spec ok: " : "spec failed the covariance smoke sweep: ")
              << loctail::spec_summary(spec) << "\n";
    return ok ? 0 : kExitPrecondition;
}

int execute(const json& manifest, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    write_json_file(out / "manifest.json", manifest);
    const std::string cmd = manifest.at("command").get<std::string>();
    if (cmd == "moments") return run_moments(manifest, out);
    if (cmd == "tails") return run_tails(manifest, out);
    if (cmd == "tour") return run_tour(manifest, out);
    if (cmd == "intersect") return run_intersect(manifest, out);
    if (cmd == "check") return run_check(manifest, out);
    if (cmd == "validate") return run_validate(manifest, out);
    throw std::invalid_argument("unknown command '" + cmd + "' in manifest");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "loctail: local-time moments, tail asymptotics and tour geometry of\n"
        "self-similar Gaussian fields.  Deterministic for a fixed seed at any\n"
        "worker count; LOCTAIL_THREADS caps the worker pool."};
    app.require_subcommand(0, 1);

    std::string replay_path, out_dir = "out";
    app.add_option("--replay", replay_path, "re-run a previously written manifest.json");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    std::string spec_arg = "bm";
    std::uint64_t seed = 0;
    double samples = 1e6, beta = 1.0, reps = 1e4, lambda = 0.0;
    int n_max = 6, grid = 0, restarts = 32;
    bool plain_mean = false;
    std::string thresholds_arg, ns_arg = "16,64,256,1024", alpha_arg = "1,1";

    auto add_common = [&](CLI::App* sub, bool with_spec = true) {
        sub->fallthrough();  // --out / --replay may follow the subcommand name
        sub->add_option("--seed", seed, "RNG seed (required; runs never self-seed)")->required();
        if (with_spec)
            sub->add_option("--spec", spec_arg,
                            "preset (bm, fbm:<h>, fbm2d:<h>, aniso:<h>:<p,...>, exceptional, "
                            "intersect:<a>x<b>) or spec JSON path")->capture_default_str();
    };

    auto* c_moments = app.add_subcommand("moments", "Monte Carlo moment series E(Z^n)");
    add_common(c_moments);
    c_moments->add_option("--n-max", n_max, "highest order")->capture_default_str();
    c_moments->add_option("--samples", samples, "total sample budget across orders")->capture_default_str();
    c_moments->add_option("--beta", beta, "kernel power")->capture_default_str();
    c_moments->add_flag("--plain-mean", plain_mean, "report the plain mean, not median-of-means");

    auto* c_tails = app.add_subcommand("tails", "exceedance curve of the extrapolated local time");
    add_common(c_tails);
    c_tails->add_option("--grid", grid, "nodes per axis (0 = auto for the cap)")->capture_default_str();
    c_tails->add_option("--reps", reps, "independent path replications")->capture_default_str();
    c_tails->add_option("--thresholds", thresholds_arg, "comma list (default 1.5..3.0 by 0.25)");
    c_tails->add_option("--lambda", lambda, "exponent probed by the fit (0 = from spec)")->capture_default_str();

    auto* c_tour = app.add_subcommand("tour", "adversarial tours against the covering bound");
    add_common(c_tour, false);
    c_tour->add_option("--n", ns_arg, "comma list of instance sizes")->capture_default_str();
    c_tour->add_option("--alpha", alpha_arg, "metric exponents")->capture_default_str();
    c_tour->add_option("--restarts", restarts, "search restarts per size")->capture_default_str();

    auto* c_intersect =
        app.add_subcommand("intersect", "growth-ratio drift of an intersection field");
    add_common(c_intersect);
    c_intersect->add_option("--n-max", n_max, "highest order")->capture_default_str();
    c_intersect->add_option("--samples", samples, "total sample budget")->capture_default_str();

    auto* c_check = app.add_subcommand("check", "invariants plus the moment/tail consistency loop");
    add_common(c_check);
    c_check->add_option("--n-max", n_max, "highest order")->capture_default_str();
    c_check->add_option("--samples", samples, "total sample budget")->capture_default_str();
    c_check->add_option("--grid", grid, "nodes per axis (0 = auto)")->capture_default_str();
    c_check->add_option("--reps", reps, "path replications")->capture_default_str();
    c_check->add_option("--thresholds", thresholds_arg, "comma list (default 1.5..3.0 by 0.25)");

    auto* c_validate = app.add_subcommand("validate", "schema and precondition validation");
    add_common(c_validate);

    try {
        app.parse(argc, argv);

        if (!replay_path.empty()) {
            json manifest = json::parse(loctail::read_text_file(replay_path));
            std::filesystem::path out =
                app.count("--out") ? std::filesystem::path(out_dir)
                                   : std::filesystem::path(replay_path).parent_path() / "replay";
            return execute(manifest, out);
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help() << "\n";
            return kExitPrecondition;
        }
        CLI::App* sub = app.get_subcommands().front();
        const std::string cmd = sub->get_name();

        json manifest{{"schema_version", 1}, {"command", cmd}, {"seed", seed}};
        json params;
        if (cmd != "tour") {
            FieldSpec spec = loctail::resolve_spec(spec_arg);
            manifest["spec"] = loctail::spec_to_json(spec);
            manifest["spec_source"] = spec_arg;
            if (grid == 0) grid = auto_grid(spec.N());
        }
        if (cmd == "moments" || cmd == "intersect" || cmd == "check") {
            params["n_max"] = n_max;
            params["samples"] = as_count(samples, "--samples");
        }
        if (cmd == "moments") {
            params["beta"] = beta;
            params["plain_mean"] = plain_mean;
        }
        if (cmd == "tails" || cmd == "check") {
            params["grid"] = grid;
            params["replications"] = as_count(reps, "--reps");
            params["thresholds"] = thresholds_arg.empty()
                                       ? default_thresholds()
                                       : parse_double_list(thresholds_arg, "threshold");
            params["eps"] = loctail::default_eps_schedule();
        }
        if (cmd == "tails") params["lambda"] = lambda;
        if (cmd == "tour") {
            params["n"] = parse_long_list(ns_arg, "size");
            params["alpha"] = parse_double_list(alpha_arg, "alpha");
            params["restarts"] = restarts;
        }
        manifest["params"] = std::move(params);
        return execute(manifest, std::filesystem::path(out_dir));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitPrecondition;
    } catch (const CheckFailure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return kExitCheckFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::logic_error& e) {
        std::cerr << "internal check failed: " << e.what() << "\n";
        return kExitCheckFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    }
}
