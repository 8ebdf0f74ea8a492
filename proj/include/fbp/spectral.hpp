#ifndef FBP_SPECTRAL_HPP
#define FBP_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "fbp/kahan.hpp"

namespace fbp {

// Dirichlet Laplacian eigenstructure of an axis-aligned box in R^d,
// d <= 7. Eigenvalues are the sorted multi-index values
// sum_j (k_j pi / L_j)^2, k_j >= 1; the eigenfunctions are the matching
// normalized sine products and never need to be materialized, so fields
// live entirely in coefficient space.
struct SpectralDomain {
    int dim = 0;
    std::vector<double> side_lengths;
    int n_modes = 0;
    std::vector<double> eigenvalues;  // nondecreasing, lambda_1 > 0
    double e1 = 0.0;                  // envelope: e1 n^{2/d} <= lambda_n <= e2 n^{2/d}
    double e2 = 0.0;
    double theta = 0.0;            // sum_n lambda_n^{-4}, with analytic tail bound
    double theta_tail_bound = 0.0; // bound on the dropped tail of theta

    double lambda1() const { return eigenvalues.front(); }
};

namespace detail {

// All box eigenvalues with every k_j <= k_cap, unsorted.
inline void box_eigenvalues(const std::vector<double>& sides, int k_cap,
                            std::vector<double>& out) {
    out.clear();
    int d = static_cast<int>(sides.size());
    std::vector<int> k(d, 1);
    const double pi = 3.14159265358979323846;
    while (true) {
        double lam = 0.0;
        for (int j = 0; j < d; ++j) {
            double r = k[j] * pi / sides[j];
            lam += r * r;
        }
        out.push_back(lam);
        int j = 0;
        while (j < d && ++k[j] > k_cap) k[j++] = 1;
        if (j == d) break;
    }
}

// S(t) = sum_{k>=1} exp(-a k^2 t), Poisson-switched so both branches
// converge in a handful of terms at any t > 0.
inline double theta_one_dim_sum(double a, double t) {
    if (a * t > 0.3) {
        double s = 0.0;
        for (int k = 1; k < 400; ++k) {
            double term = std::exp(-a * k * k * t);
            s += term;
            if (term < 1e-18 * (s + 1e-300)) break;
        }
        return s;
    }
    double c = M_PI * M_PI / (a * t);
    double m_sum = 1.0;
    for (int m = 1; m < 400; ++m) {
        double term = 2.0 * std::exp(-c * m * m);
        m_sum += term;
        if (term < 1e-18) break;
    }
    return 0.5 * (std::sqrt(M_PI / (a * t)) * m_sum - 1.0);
}

// theta = sum_k lambda_k^{-4} over all multi-indices, via
// 1/lambda^4 = (1/6) int_0^inf t^3 e^{-lambda t} dt, which factorizes the
// lattice sum into one-dimensional theta functions. Substituting t = s^2
// removes the t^{-1/2}-type behaviour at the origin, so composite Simpson
// converges fast for every d <= 7. Returns {theta, error_bound}.
inline std::pair<double, double> theta_via_laplace(const std::vector<double>& sides) {
    int d = static_cast<int>(sides.size());
    std::vector<double> a(d);
    double lam1 = 0.0;
    for (int j = 0; j < d; ++j) {
        a[j] = (M_PI / sides[j]) * (M_PI / sides[j]);
        lam1 += a[j];
    }
    auto f = [&](double s) -> double {
        if (s == 0.0) {
            if (d < 7) return 0.0;
            double c = 1.0 / 6.0 * std::pow(0.5, 7) * std::pow(M_PI, 3.5);
            for (double aj : a) c /= std::sqrt(aj);
            return 2.0 * c;
        }
        double t = s * s;
        double prod = 1.0;
        for (double aj : a) prod *= theta_one_dim_sum(aj, t);
        return 2.0 * s * t * t * t * prod / 6.0;
    };
    double s_max = std::sqrt(100.0 / lam1);
    auto simpson = [&](int n) {
        double h = s_max / n;
        double acc = f(0.0) + f(s_max);
        for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
        return acc * h / 3.0;
    };
    double prev = simpson(256), cur = 0.0, err = 0.0;
    for (int n = 512; n <= 1 << 20; n *= 2) {
        cur = simpson(n);
        err = std::fabs(cur - prev);
        prev = cur;
        if (err <= 1e-13 * std::fabs(cur)) break;
    }
    // tail of the t-integral past t0 = s_max^2: S_j(t) <= 2 e^{-a_j t} there,
    // so tail <= (2^d/6) Gamma(4, lam1 t0) / lam1^4
    double x = lam1 * s_max * s_max;
    double tail = std::pow(2.0, d) / 6.0 * std::exp(-x) *
                  (x * x * x + 3.0 * x * x + 6.0 * x + 6.0) / std::pow(lam1, 4.0);
    return {cur, err + tail};
}

// First n_modes sorted eigenvalues, grown until the k-box provably
// contains them all: any multi-index outside the box has
// lambda >= ((k_cap+1) pi / L_max)^2.
inline std::vector<double> leading_eigenvalues(const std::vector<double>& sides, int n_modes) {
    const double pi = 3.14159265358979323846;
    double lmax = *std::max_element(sides.begin(), sides.end());
    int d = static_cast<int>(sides.size());
    int k_cap = static_cast<int>(std::ceil(std::pow(double(n_modes), 1.0 / d))) + 1;
    std::vector<double> all;
    for (;; ++k_cap) {
        box_eigenvalues(sides, k_cap, all);
        std::sort(all.begin(), all.end());
        double guard = std::pow((k_cap + 1) * pi / lmax, 2.0);
        if (static_cast<int>(all.size()) >= n_modes && all[n_modes - 1] <= guard) break;
    }
    all.resize(n_modes);
    return all;
}

}  // namespace detail

inline SpectralDomain build_domain(int dim, std::vector<double> side_lengths, int n_modes) {
    if (dim < 1 || dim > 7)
        throw std::invalid_argument("build_domain: dim must lie in [1, 7] (theta diverges beyond)");
    if (static_cast<int>(side_lengths.size()) != dim)
        throw std::invalid_argument("build_domain: need one side length per dimension");
    for (double s : side_lengths)
        if (!(s > 0.0)) throw std::invalid_argument("build_domain: sides must be positive");
    if (n_modes < 1) throw std::invalid_argument("build_domain: n_modes must be >= 1");

    SpectralDomain dom;
    dom.dim = dim;
    dom.side_lengths = std::move(side_lengths);
    dom.n_modes = n_modes;
    dom.eigenvalues = detail::leading_eigenvalues(dom.side_lengths, n_modes);

    auto [theta, theta_err] = detail::theta_via_laplace(dom.side_lengths);
    dom.theta = theta;
    dom.theta_tail_bound = theta_err;

    dom.e1 = std::numeric_limits<double>::infinity();
    dom.e2 = 0.0;
    for (int n = 1; n <= n_modes; ++n) {
        double r = dom.eigenvalues[n - 1] / std::pow(double(n), 2.0 / dim);
        dom.e1 = std::min(dom.e1, r);
        dom.e2 = std::max(dom.e2, r);
    }
    return dom;
}

// A function of space as coefficients in the domain's eigenbasis.
struct SpectralField {
    std::vector<double> coeffs;

    double l2_norm() const {
        KahanSum s;
        for (double c : coeffs) s.add(c * c);
        return std::sqrt(s.value());
    }

    // || . ||_{H_p}^2 = sum lambda_n^{2p} g_n^2
    double hp_norm(const SpectralDomain& dom, double p) const {
        if (coeffs.size() > dom.eigenvalues.size())
            throw std::invalid_argument("hp_norm: field has more modes than domain");
        KahanSum s;
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            s.add(std::pow(dom.eigenvalues[i], 2.0 * p) * coeffs[i] * coeffs[i]);
        return std::sqrt(s.value());
    }
};

inline SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    if (a.coeffs.size() != b.coeffs.size())
        throw std::invalid_argument("SpectralField: size mismatch");
    SpectralField r;
    r.coeffs.resize(a.coeffs.size());
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) r.coeffs[i] = a.coeffs[i] - b.coeffs[i];
    return r;
}

// Source set S_{rho,p}: the H_p ball of radius rho.
struct SourceSet {
    double rho;
    double p;

    void validate() const {
        if (!(rho > 0.0) || !(p > 0.0))
            throw std::invalid_argument("SourceSet: rho and p must be positive");
    }
    bool contains(const SpectralDomain& dom, const SpectralField& g) const {
        return g.hp_norm(dom, p) <= rho;
    }
};

// f(.,t) as per-mode time coefficients on [0, tau].
struct TimeSource {
    enum class Kind { zero, per_mode_constant, per_mode_sampled };

    Kind kind = Kind::zero;
    int n_modes = 0;
    double tau = 1.0;
    std::vector<double> mode_values;          // per_mode_constant
    std::vector<double> times;                // per_mode_sampled, sorted, in [0, tau]
    std::vector<std::vector<double>> samples; // [mode][time index]

    static TimeSource zero_source(int n_modes, double tau) {
        TimeSource f;
        f.kind = Kind::zero;
        f.n_modes = n_modes;
        f.tau = tau;
        return f;
    }

    static TimeSource constant(std::vector<double> values, double tau) {
        TimeSource f;
        f.kind = Kind::per_mode_constant;
        f.n_modes = static_cast<int>(values.size());
        f.tau = tau;
        f.mode_values = std::move(values);
        return f;
    }

    static TimeSource sampled(std::vector<double> times, std::vector<std::vector<double>> samples,
                              double tau) {
        TimeSource f;
        f.kind = Kind::per_mode_sampled;
        f.tau = tau;
        f.times = std::move(times);
        f.samples = std::move(samples);
        f.n_modes = static_cast<int>(f.samples.size());
        if (f.times.size() < 2 || f.times.front() != 0.0 || f.times.back() > tau ||
            !std::is_sorted(f.times.begin(), f.times.end()))
            throw std::invalid_argument("TimeSource: sampled grid must be sorted, start at 0, end <= tau");
        for (const auto& m : f.samples)
            if (m.size() != f.times.size())
                throw std::invalid_argument("TimeSource: sample rows must match the time grid");
        return f;
    }

    // ||f||_{L^inf(0,tau;L^2)}; for sampled sources the grid maximum.
    double sup_norm() const {
        switch (kind) {
            case Kind::zero:
                return 0.0;
            case Kind::per_mode_constant: {
                KahanSum s;
                for (double c : mode_values) s.add(c * c);
                return std::sqrt(s.value());
            }
            case Kind::per_mode_sampled: {
                double best = 0.0;
                for (std::size_t i = 0; i < times.size(); ++i) {
                    KahanSum s;
                    for (const auto& m : samples) s.add(m[i] * m[i]);
                    best = std::max(best, s.value());
                }
                return std::sqrt(best);
            }
        }
        return 0.0;
    }
};

// Difference sup-norm ||f - g||_{L^inf(0,tau;L^2)} for sources on the same
// grid structure; supports the kinds produced by inject_noise.
inline double source_diff_sup_norm(const TimeSource& a, const TimeSource& b) {
    auto value_at = [](const TimeSource& f, int mode, std::size_t ti) -> double {
        switch (f.kind) {
            case TimeSource::Kind::zero: return 0.0;
            case TimeSource::Kind::per_mode_constant: return f.mode_values[mode];
            case TimeSource::Kind::per_mode_sampled: return f.samples[mode][ti];
        }
        return 0.0;
    };
    std::size_t nt = 1;
    if (a.kind == TimeSource::Kind::per_mode_sampled) nt = a.times.size();
    if (b.kind == TimeSource::Kind::per_mode_sampled) {
        if (nt > 1 && b.times != a.times)
            throw std::invalid_argument("source_diff_sup_norm: time grids differ");
        nt = b.times.size();
    }
    int n = std::max(a.n_modes, b.n_modes);
    double best = 0.0;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        KahanSum s;
        for (int m = 0; m < n; ++m) {
            double d = (m < a.n_modes ? value_at(a, m, ti) : 0.0) -
                       (m < b.n_modes ? value_at(b, m, ti) : 0.0);
            s.add(d * d);
        }
        best = std::max(best, s.value());
    }
    return std::sqrt(best);
}

// Noisy (h, f) pair with its certified combined budget
//   ||h - h^d||^2 + theta ||f - f^d||^2_{L^inf} <= delta^2.
struct NoisyData {
    SpectralField h_noisy;
    TimeSource f_noisy;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

// Member of the boundary of S_{rho,p}: profile g_n ~ lambda_n^{-p} n^{-0.55}
// with seeded random signs, rescaled to ||g||_{H_p} = rho (1 - 1e-9).
inline SpectralField synthesize_source_member(const SpectralDomain& dom, const SourceSet& set,
                                              std::uint64_t seed) {
    set.validate();
    std::mt19937_64 rng(seed);
    SpectralField g;
    g.coeffs.resize(dom.eigenvalues.size());
    for (std::size_t i = 0; i < g.coeffs.size(); ++i) {
        double mag = std::pow(dom.eigenvalues[i], -set.p) * std::pow(double(i + 1), -0.55);
        g.coeffs[i] = (rng() & 1u) ? mag : -mag;
    }
    double norm = g.hp_norm(dom, set.p);
    double scale = set.rho * (1.0 - 1e-9) / norm;
    for (double& c : g.coeffs) c *= scale;
    return g;
}

// Seeded perturbation saturating (but not exceeding) the combined budget:
// ||h - h^d|| = sqrt(split) * 0.999 * delta and
// theta ||f - f^d||^2 = (1 - split) * 0.998 * delta^2. The perturbation is
// flat over the first 64 modes with random signs.
inline NoisyData inject_noise(const SpectralDomain& dom, const SpectralField& h,
                              const TimeSource& f, double delta, double split,
                              std::uint64_t seed) {
    if (!(delta > 0.0)) throw std::invalid_argument("inject_noise: delta must be positive");
    if (split < 0.0 || split > 1.0)
        throw std::invalid_argument("inject_noise: split must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    int nz = std::min<int>(64, dom.n_modes);

    NoisyData out;
    out.delta = delta;
    out.seed = seed;
    out.h_noisy = h;
    out.h_noisy.coeffs.resize(dom.eigenvalues.size(), 0.0);
    double amp_h = std::sqrt(split) * 0.999 * delta / std::sqrt(double(nz));
    for (int i = 0; i < nz; ++i)
        out.h_noisy.coeffs[i] += (rng() & 1u) ? amp_h : -amp_h;

    double f_budget = (1.0 - split) * 0.998 * delta * delta;  // theta * ||df||^2
    if (f_budget <= 0.0) {
        out.f_noisy = f;
        return out;
    }
    double amp_f = std::sqrt(f_budget / dom.theta) / std::sqrt(double(nz));
    std::vector<double> df(dom.n_modes, 0.0);
    for (int i = 0; i < nz; ++i) df[i] = (rng() & 1u) ? amp_f : -amp_f;

    switch (f.kind) {
        case TimeSource::Kind::zero:
            out.f_noisy = TimeSource::constant(df, f.tau);
            break;
        case TimeSource::Kind::per_mode_constant: {
            std::vector<double> v(dom.n_modes, 0.0);
            for (int i = 0; i < f.n_modes; ++i) v[i] = f.mode_values[i];
            for (int i = 0; i < dom.n_modes; ++i) v[i] += df[i];
            out.f_noisy = TimeSource::constant(std::move(v), f.tau);
            break;
        }
        case TimeSource::Kind::per_mode_sampled: {
            auto samples = f.samples;
            samples.resize(dom.n_modes, std::vector<double>(f.times.size(), 0.0));
            for (int m = 0; m < dom.n_modes; ++m)
                for (double& v : samples[m]) v += df[m];
            out.f_noisy = TimeSource::sampled(f.times, std::move(samples), f.tau);
            break;
        }
    }
    return out;
}

}  // namespace fbp

#endif
