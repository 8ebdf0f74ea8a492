#ifndef FBP_EXPERIMENT_HPP
#define FBP_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fbp/forward.hpp"
#include "fbp/regularization.hpp"

namespace fbp {

struct MethodSpec {
    Method method = Method::qbvm;
    int q = 0;  // meaningful for qbvm/mqbvm
};

struct ExperimentSpec {
    int dim = 1;
    std::vector<double> side_lengths{M_PI};
    int n_modes = 256;
    double alpha = 0.5;
    double tau = 1.0;
    double p = 2.0;
    double rho = 1.0;
    std::vector<MethodSpec> methods;
    std::vector<ChoiceRule> rules{ChoiceRule::apriori, ChoiceRule::aposteriori};
    std::vector<double> delta_grid;  // strictly decreasing; default half-decade 1e-2..1e-7
    int trials = 5;
    double noise_split = 0.5;
    DiscrepancyConfig discrepancy;
    std::string records_csv = "records.csv";
    std::string fits_csv = "fits.csv";
    std::string svg_path = "rates.svg";

    static std::vector<double> default_delta_grid() {
        return {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-7, 1e-7};
    }

    void validate() const {
        if (methods.empty()) throw std::invalid_argument("ExperimentSpec: no methods");
        if (rules.empty()) throw std::invalid_argument("ExperimentSpec: no rules");
        if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
        if (delta_grid.size() < 2)
            throw std::invalid_argument("ExperimentSpec: delta_grid needs >= 2 points");
        for (std::size_t i = 0; i < delta_grid.size(); ++i) {
            if (!(delta_grid[i] > 0.0) || (i && delta_grid[i] >= delta_grid[i - 1]))
                throw std::invalid_argument("ExperimentSpec: delta_grid must be positive and strictly decreasing");
        }
        if (noise_split < 0.0 || noise_split > 1.0)
            throw std::invalid_argument("ExperimentSpec: noise_split must lie in [0,1]");
        discrepancy.validate();
    }
};

struct RateRecord {
    Method method = Method::qbvm;
    ChoiceRule rule = ChoiceRule::apriori;
    int q = 0;
    double p = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    double param = 0.0;     // beta, or N for FTM; 0 on failure
    double error = 0.0;     // ||g - g_rec||; NaN on failure
    double residual = 0.0;  // NaN on failure
    double wall_ms = 0.0;
    bool failed = false;
    std::string failure;    // not serialized in the pinned CSV
};

struct SlopeFit {
    Method method = Method::qbvm;
    ChoiceRule rule = ChoiceRule::apriori;
    int q = 0;
    double p = 0.0;
    double slope = 0.0;      // of log error vs log delta
    double intercept = 0.0;
    double r2 = 0.0;
    double theoretical = 0.0;
    int n_points = 0;
};

// The paper's rate table at a glance.
inline double theoretical_rate(Method m, ChoiceRule rule, int q, double p, double nu) {
    if (m == Method::ftm) return p / (p + 2.0);
    if (rule == ChoiceRule::apriori) {
        if (q == 0) {
            double pe = std::min(p, 2.0);
            return pe / (pe + 2.0);
        }
        return p < q + 2.0 ? p / (p + 2.0) : (q + 2.0) / (q + 4.0);
    }
    if (q == 0) return std::min(p * nu / (p + 2.0), 1.0 - nu);
    return p < double(q) ? p / (p + 2.0) : q / (q + 2.0);
}

struct RunResult {
    std::vector<RateRecord> records;
    double truncation_bias_bound = 0.0;   // rho / lambda_{N_max}^p
    double smallest_expected_error = 0.0; // delta_min^rate over requested methods
    bool truncation_ok = true;
    MLBoundConstants cal;
};

namespace detail {

// fixed per-mode-constant source with ||f|| = rho/10, decaying like n^{-1.5}
inline TimeSource experiment_source(const SpectralDomain& dom, double rho, double tau) {
    std::vector<double> v(dom.n_modes);
    double norm2 = 0.0;
    for (int n = 0; n < dom.n_modes; ++n) {
        v[n] = std::pow(n + 1.0, -1.5);
        norm2 += v[n] * v[n];
    }
    double scale = rho / 10.0 / std::sqrt(norm2);
    for (double& x : v) x *= scale;
    return TimeSource::constant(std::move(v), tau);
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentSpec& spec, int n_threads = 1) {
    spec.validate();
    RunResult out;
    auto dom = build_domain(spec.dim, spec.side_lengths, spec.n_modes);
    auto op = BackwardOperator::make(dom, spec.alpha, spec.tau);
    out.cal = estimate_bound_constants(spec.alpha, default_bound_grid(1e10, 400));
    double c18 = std::sqrt(2.0) / out.cal.c4(spec.tau, dom.lambda1());
    auto f = detail::experiment_source(dom, spec.rho, spec.tau);

    // truncation-bias report: the spectral tail an H_p ball can hide beyond
    // N_max, against the smallest error the rate theorems predict
    out.truncation_bias_bound = spec.rho / std::pow(dom.eigenvalues.back(), spec.p);
    double min_rate = 1.0;
    for (const auto& ms : spec.methods)
        for (auto rule : spec.rules)
            min_rate = std::min(min_rate, theoretical_rate(ms.method, rule, ms.q, spec.p,
                                                           spec.discrepancy.nu));
    out.smallest_expected_error = std::pow(spec.delta_grid.back(), min_rate) *
                                  std::pow(spec.rho, 1.0 - min_rate);
    out.truncation_ok = out.truncation_bias_bound < 0.01 * out.smallest_expected_error;

    SourceSet set{spec.rho, spec.p};
    // ground truth and clean final data per seed (independent of delta/method)
    std::vector<SpectralField> gs(spec.trials), hs(spec.trials);
    for (int s = 0; s < spec.trials; ++s) {
        gs[s] = synthesize_source_member(dom, set, std::uint64_t(s + 1));
        auto sol = forward_solve(dom, spec.alpha, gs[s], f, spec.tau);
        hs[s] = sol.at(spec.tau);
    }

    struct Cell {
        MethodSpec ms;
        ChoiceRule rule;
        std::size_t di;
        int s;
    };
    std::vector<Cell> cells;
    for (const auto& ms : spec.methods)
        for (auto rule : spec.rules)
            for (std::size_t di = 0; di < spec.delta_grid.size(); ++di)
                for (int s = 0; s < spec.trials; ++s) cells.push_back({ms, rule, di, s});
    out.records.resize(cells.size());

    auto run_cell = [&](std::size_t ci) {
        const auto& [ms, rule, di, s] = cells[ci];
        double delta = spec.delta_grid[di];
        RateRecord rec;
        rec.method = ms.method;
        rec.rule = rule;
        rec.q = ms.method == Method::ftm ? 0 : ms.q;
        rec.p = spec.p;
        rec.delta = delta;
        rec.seed = std::uint64_t(s + 1);
        auto t0 = std::chrono::steady_clock::now();
        try {
            std::uint64_t noise_seed =
                rec.seed * 2654435761ull + 7919ull * (di + 1);
            auto nd = inject_noise(dom, hs[s], f, delta, spec.noise_split, noise_seed);
            // budget honesty, re-checked at record time
            double dh = (nd.h_noisy - hs[s]).l2_norm();
            double df = source_diff_sup_norm(nd.f_noisy, f);
            if (dh * dh + dom.theta * df * df > delta * delta)
                throw std::runtime_error("noise budget violated");
            auto data = effective_data(dom, nd.h_noisy, nd.f_noisy, spec.alpha,
                                       spec.tau, EffectiveData::Provenance::noisy);
            RegularizedSolution sol;
            if (ms.method == Method::ftm) {
                int N;
                if (rule == ChoiceRule::apriori) {
                    N = apriori_N(delta, spec.rho, spec.p, dom, c18).n;
                } else {
                    N = aposteriori_N(data, delta, spec.discrepancy.mu);
                    if (N == 0)
                        throw std::runtime_error("aposteriori_N: everything is noise");
                }
                sol = ftm_solve(op, data, FtmConfig{N});
                rec.param = N;
            } else {
                double beta;
                if (rule == ChoiceRule::apriori)
                    beta = apriori_beta(delta, spec.rho, spec.p, ms.q);
                else
                    beta = aposteriori_beta(op, data, delta, ms.q, spec.discrepancy).beta;
                sol = qbvm_solve(op, data, QbvmConfig{ms.q, beta});
                rec.param = beta;
            }
            rec.error = (sol.g_rec - gs[s]).l2_norm();
            rec.residual = sol.residual;
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.failure = e.what();
            rec.param = 0.0;
            rec.error = std::nan("");
            rec.residual = std::nan("");
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        out.records[ci] = std::move(rec);
    };

    // cells are pure and indexed, so any schedule yields the same records
    int workers = std::max(1, n_threads);
    if (workers == 1) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t ci = next++; ci < cells.size(); ci = next++) run_cell(ci);
            });
        for (auto& t : pool) t.join();
    }
    return out;
}

inline std::vector<SlopeFit> fit_slopes(const std::vector<RateRecord>& records, int discard = 1,
                                        double nu = 0.5) {
    struct Key {
        Method m;
        ChoiceRule r;
        int q;
        double p;
        bool operator<(const Key& o) const {
            if (m != o.m) return m < o.m;
            if (r != o.r) return r < o.r;
            if (q != o.q) return q < o.q;
            return p < o.p;
        }
    };
    std::map<Key, std::map<double, std::vector<double>>> cells;  // key -> delta -> errors
    for (const auto& rec : records) {
        if (rec.failed || !(rec.error > 0.0)) continue;
        cells[{rec.method, rec.rule, rec.q, rec.p}][rec.delta].push_back(rec.error);
    }
    std::vector<SlopeFit> fits;
    for (auto& [key, by_delta] : cells) {
        std::vector<std::pair<double, double>> pts;  // (log delta, log median error)
        for (auto& [delta, errs] : by_delta) {
            std::sort(errs.begin(), errs.end());
            double med = errs.size() % 2 ? errs[errs.size() / 2]
                                         : 0.5 * (errs[errs.size() / 2 - 1] + errs[errs.size() / 2]);
            pts.emplace_back(std::log(delta), std::log(med));
        }
        std::sort(pts.begin(), pts.end());  // ascending log delta
        if (discard > 0 && static_cast<int>(pts.size()) > discard)
            pts.resize(pts.size() - discard);  // drop the largest-delta points
        if (pts.size() < 4) continue;
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        double n = double(pts.size());
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double intercept = (sy - slope * sx) / n;
        double ss_res = 0.0, mean_y = sy / n, ss_tot = 0.0;
        for (auto [x, y] : pts) {
            double e = y - (slope * x + intercept);
            ss_res += e * e;
            ss_tot += (y - mean_y) * (y - mean_y);
        }
        SlopeFit fit;
        fit.method = key.m;
        fit.rule = key.r;
        fit.q = key.q;
        fit.p = key.p;
        fit.slope = slope;
        fit.intercept = intercept;
        fit.r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
        fit.theoretical = theoretical_rate(key.m, key.r, key.q, key.p, nu);
        fit.n_points = static_cast<int>(pts.size());
        fits.push_back(fit);
    }
    return fits;
}

}  // namespace fbp

#endif
