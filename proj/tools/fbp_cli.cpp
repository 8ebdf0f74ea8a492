// fbp: command-line harness for the backward fractional fourth-order problem.
//
// Subcommands:
//   ml-eval    evaluate E_{gamma,beta}(x) at one or more points x <= 0
//   forward    synthesize a ground truth, solve forward, dump coefficients
//   invert     one backward solve with a chosen method / rule
//   rates      full delta-sweep from a JSON spec file; CSV + SVG artifacts
//   calibrate  (re)generate the versioned ML bound-constant fixture
//
// FBP_THREADS controls the worker count for the `rates` sweep (default 1).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fbp/experiment.hpp"
#include "fbp/io.hpp"

namespace {

int env_threads() {
    const char* s = std::getenv("FBP_THREADS");
    if (!s || !*s) return 1;
    int v = std::atoi(s);
    if (v < 1) throw CLI::ValidationError("FBP_THREADS must be a positive integer");
    return v;
}

// FNV-1a over the little-endian bytes of the grid values, so a fixture is
// pinned to the exact grid it was calibrated on.
std::uint64_t grid_hash(const std::vector<double>& grid) {
    std::uint64_t h = 14695981039346656037ull;
    for (double x : grid) {
        unsigned char b[sizeof(double)];
        std::memcpy(b, &x, sizeof(double));
        for (unsigned char c : b) {
            h ^= c;
            h *= 1099511628211ull;
        }
    }
    return h;
}

struct DomainOpts {
    int dim = 1;
    std::vector<double> side_lengths;
    int n_modes = 256;

    void attach(CLI::App* app) {
        app->add_option("--dim", dim, "spatial dimension (1..7)")->capture_default_str();
        app->add_option("--side", side_lengths,
                        "box side length(s); repeat per dimension (default pi)");
        app->add_option("--n-modes", n_modes, "number of retained eigenmodes")
            ->capture_default_str();
    }

    fbp::SpectralDomain build() const {
        auto sides = side_lengths.empty() ? std::vector<double>(std::size_t(dim), M_PI)
                                          : side_lengths;
        return fbp::build_domain(dim, sides, n_modes);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"backward solver for the time-fractional fourth-order parabolic equation"};
    app.require_subcommand(1);

    // ---- ml-eval ----
    double ml_gamma = 0.5, ml_beta = 1.0;
    std::vector<double> ml_points;
    auto* ml = app.add_subcommand("ml-eval", "evaluate E_{gamma,beta}(x) at points x <= 0");
    ml->add_option("--gamma", ml_gamma, "first ML parameter, in (0,1]")->capture_default_str();
    ml->add_option("--beta", ml_beta, "second ML parameter, > 0")->capture_default_str();
    ml->add_option("points", ml_points, "evaluation points (x <= 0)")->required();

    // ---- forward ----
    DomainOpts fwd_dom;
    double fwd_alpha = 0.5, fwd_tau = 1.0, fwd_p = 2.0, fwd_rho = 1.0;
    std::uint64_t fwd_seed = 1;
    auto* fwd = app.add_subcommand(
        "forward", "synthesize a ground truth, solve forward, dump mode coefficients as CSV");
    fwd_dom.attach(fwd);
    fwd->add_option("--alpha", fwd_alpha, "fractional order, in (0,1)")->capture_default_str();
    fwd->add_option("--tau", fwd_tau, "final time")->capture_default_str();
    fwd->add_option("--p", fwd_p, "smoothness index of the source set")->capture_default_str();
    fwd->add_option("--rho", fwd_rho, "source-set radius")->capture_default_str();
    fwd->add_option("--seed", fwd_seed, "ground-truth seed")->capture_default_str();

    // ---- invert ----
    DomainOpts inv_dom;
    double inv_alpha = 0.5, inv_tau = 1.0, inv_p = 2.0, inv_rho = 1.0;
    std::uint64_t inv_seed = 1;
    std::string inv_method = "qbvm", inv_rule = "apriori";
    int inv_q = 0;
    double inv_delta = 1e-4, inv_split = 0.5;
    double inv_beta = 0.0;
    int inv_ncut = 0;
    fbp::DiscrepancyConfig inv_disc;
    auto* inv = app.add_subcommand("invert", "one backward solve from seeded noisy data");
    inv_dom.attach(inv);
    inv->add_option("--alpha", inv_alpha, "fractional order, in (0,1)")->capture_default_str();
    inv->add_option("--tau", inv_tau, "final time")->capture_default_str();
    inv->add_option("--p", inv_p, "smoothness index")->capture_default_str();
    inv->add_option("--rho", inv_rho, "source-set radius")->capture_default_str();
    inv->add_option("--seed", inv_seed, "ground-truth seed")->capture_default_str();
    inv->add_option("--method", inv_method, "qbvm | mqbvm | ftm")->capture_default_str();
    inv->add_option("--rule", inv_rule, "apriori | aposteriori")->capture_default_str();
    inv->add_option("--q", inv_q, "penalty exponent for mqbvm (>= 1)")->capture_default_str();
    inv->add_option("--delta", inv_delta, "noise level")->capture_default_str();
    inv->add_option("--split", inv_split, "share of the noise budget spent on h")
        ->capture_default_str();
    inv->add_option("--beta", inv_beta, "fixed beta (overrides the rule)");
    inv->add_option("--n-cut", inv_ncut, "fixed FTM cutoff (overrides the rule)");
    inv->add_option("--xi", inv_disc.xi, "discrepancy multiplier for qbvm/mqbvm")
        ->capture_default_str();
    inv->add_option("--mu", inv_disc.mu, "discrepancy multiplier for ftm")->capture_default_str();
    inv->add_option("--nu", inv_disc.nu, "exponent for the q=0 aposteriori target")
        ->capture_default_str();

    // ---- rates ----
    std::string rates_spec_path;
    bool rates_check = false;
    auto* rates = app.add_subcommand("rates", "full delta-sweep from a JSON spec file");
    rates->add_option("spec", rates_spec_path, "path to the experiment spec (JSON)")->required();
    rates->add_flag("--check", rates_check,
                    "exit 2 when any fitted slope leaves [theory-0.10, theory+0.15]");

    // ---- calibrate ----
    double cal_alpha = 0.5, cal_span = 1e10;
    int cal_points = 400;
    std::string cal_out = "calibration.json";
    auto* cal = app.add_subcommand("calibrate", "regenerate the ML bound-constant fixture");
    cal->add_option("--alpha", cal_alpha, "fractional order, in (0,1)")->capture_default_str();
    cal->add_option("--x-span", cal_span, "grid reaches down to -x_span")->capture_default_str();
    cal->add_option("--n-points", cal_points, "grid size")->capture_default_str();
    cal->add_option("--out", cal_out, "fixture output path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ml) {
            fbp::MLOrder order{ml_gamma, ml_beta};
            order.validate();
            for (double x : ml_points)
                std::printf("%.17g %.17g\n", x, fbp::ml_eval(order, x));
            return 0;
        }

        if (*fwd) {
            auto dom = fwd_dom.build();
            fbp::SourceSet set{fwd_rho, fwd_p};
            auto g = fbp::synthesize_source_member(dom, set, fwd_seed);
            auto f = fbp::detail::experiment_source(dom, fwd_rho, fwd_tau);
            auto sol = fbp::forward_solve(dom, fwd_alpha, g, f, fwd_tau);
            auto h = sol.at(fwd_tau);
            std::printf("n,lambda,g,h\n");
            for (int n = 0; n < dom.n_modes; ++n)
                std::printf("%d,%.17g,%.17g,%.17g\n", n + 1, dom.eigenvalues[n], g.coeffs[n],
                            h.coeffs[n]);
            return 0;
        }

        if (*inv) {
            inv_disc.validate();
            auto dom = inv_dom.build();
            auto op = fbp::BackwardOperator::make(dom, inv_alpha, inv_tau);
            fbp::SourceSet set{inv_rho, inv_p};
            auto g = fbp::synthesize_source_member(dom, set, inv_seed);
            auto f = fbp::detail::experiment_source(dom, inv_rho, inv_tau);
            auto fsol = fbp::forward_solve(dom, inv_alpha, g, f, inv_tau);
            auto nd = fbp::inject_noise(dom, fsol.at(inv_tau), f, inv_delta, inv_split,
                                        inv_seed * 2654435761ull + 7919ull);
            auto data = fbp::effective_data(dom, nd.h_noisy, nd.f_noisy, inv_alpha, inv_tau,
                                            fbp::EffectiveData::Provenance::noisy);

            auto m = fbp::method_from_name(inv_method);
            auto rule = fbp::rule_from_name(inv_rule);
            fbp::RegularizedSolution sol;
            if (m == fbp::Method::ftm) {
                int n_cut = inv_ncut;
                if (n_cut < 1) {
                    if (rule == fbp::ChoiceRule::apriori) {
                        auto calc = fbp::estimate_bound_constants(
                            inv_alpha, fbp::default_bound_grid());
                        double c18 = std::sqrt(2.0) / calc.c4(inv_tau, dom.lambda1());
                        n_cut = fbp::apriori_N(inv_delta, inv_rho, inv_p, dom, c18).n;
                    } else {
                        n_cut = fbp::aposteriori_N(data, inv_delta, inv_disc.mu);
                        if (n_cut == 0)
                            throw std::runtime_error("aposteriori N: data is all noise");
                    }
                }
                sol = fbp::ftm_solve(op, data, fbp::FtmConfig{n_cut});
            } else {
                int q = m == fbp::Method::qbvm ? 0 : std::max(inv_q, 1);
                double beta = inv_beta;
                if (!(beta > 0.0)) {
                    if (rule == fbp::ChoiceRule::apriori)
                        beta = fbp::apriori_beta(inv_delta, inv_rho, inv_p, q);
                    else
                        beta = fbp::aposteriori_beta(op, data, inv_delta, q, inv_disc).beta;
                }
                sol = fbp::qbvm_solve(op, data, fbp::QbvmConfig{q, beta});
            }
            sol.choice_rule = rule;

            nlohmann::json out{
                {"method", fbp::method_name(sol.method, sol.q)},
                {"rule", fbp::rule_name(rule)},
                {"delta", inv_delta},
                {"parameter", sol.parameter},
                {"residual", sol.residual},
                {"error", (sol.g_rec - g).l2_norm()},
                {"g_norm", g.l2_norm()},
            };
            std::printf("%s\n", out.dump(2).c_str());
            return 0;
        }

        if (*rates) {
            auto spec = fbp::load_experiment_spec(rates_spec_path);
            auto result = fbp::run_experiment(spec, env_threads());
            auto fits = fbp::fit_slopes(result.records, 1, spec.discrepancy.nu);
            fbp::emit_outputs(result.records, fits, spec.records_csv, spec.fits_csv,
                              spec.svg_path);
            if (!result.truncation_ok)
                std::fprintf(stderr,
                             "warning: truncation bias bound %.3g is not small against the "
                             "smallest expected error %.3g\n",
                             result.truncation_bias_bound, result.smallest_expected_error);
            std::printf("%-12s %-12s %8s %8s %8s %8s\n", "method", "rule", "slope", "theory",
                        "r2", "points");
            bool ok = true;
            for (const auto& f : fits) {
                bool in_band = f.slope >= f.theoretical - 0.10 && f.slope <= f.theoretical + 0.15;
                ok = ok && in_band;
                std::printf("%-12s %-12s %8.3f %8.3f %8.4f %8d%s\n",
                            fbp::method_name(f.method, f.q).c_str(),
                            fbp::rule_name(f.rule).c_str(), f.slope, f.theoretical, f.r2,
                            f.n_points, rates_check && !in_band ? "  <-- out of band" : "");
            }
            std::printf("wrote %s, %s, %s\n", spec.records_csv.c_str(), spec.fits_csv.c_str(),
                        spec.svg_path.c_str());
            return rates_check && !ok ? 2 : 0;
        }

        if (*cal) {
            auto grid = fbp::default_bound_grid(cal_span, cal_points);
            auto constants = fbp::estimate_bound_constants(cal_alpha, grid);
            nlohmann::json fixture{
                {"version", 1},
                {"alpha", cal_alpha},
                {"grid", {{"x_span", cal_span}, {"n_points", cal_points}}},
                {"grid_hash", grid_hash(grid)},
                {"c1_lower", constants.c1_lower},
                {"c1_upper", constants.c1_upper},
            };
            fbp::write_file(cal_out, fixture.dump(2) + "\n");
            std::printf("wrote %s (c1_lower=%.12g, c1_upper=%.12g)\n", cal_out.c_str(),
                        constants.c1_lower, constants.c1_upper);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
