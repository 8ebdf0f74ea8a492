#ifndef FBP_FORWARD_HPP
#define FBP_FORWARD_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fbp/mittag_leffler.hpp"
#include "fbp/spectral.hpp"

namespace fbp {

// The decay argument of every kernel call in the forward problem is the
// squared Laplacian eigenvalue (Delta^2 spectrum). Constructing through
// of_eigenvalue is the only sanctioned path, which keeps the classic
// squared/unsquared bug out of call sites.
struct ModeDecay {
    double lambda_sq;

    static ModeDecay of_eigenvalue(double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("ModeDecay: eigenvalue must be positive");
        return ModeDecay{lambda * lambda};
    }
};

// Psi^{alpha,n}_f(t) = int_0^t (t-s)^{alpha-1} E_{alpha,alpha}(-lambda^2 (t-s)^alpha) f_n(s) ds.
// Constant sources use the closed form c (1 - E_{alpha,1}(-lambda^2 t^alpha)) / lambda^2;
// sampled sources use piecewise-constant collocation with the exact kernel
// antiderivative on each subinterval, so the (t-s)^{alpha-1} singularity
// never meets a quadrature rule.
inline double psi(double alpha, ModeDecay lam2, const TimeSource& f, int mode, double t) {
    if (t < 0.0 || t > f.tau) throw std::domain_error("psi: t must lie in [0, tau]");
    if (t == 0.0 || mode >= f.n_modes) return 0.0;
    switch (f.kind) {
        case TimeSource::Kind::zero:
            return 0.0;
        case TimeSource::Kind::per_mode_constant:
            return f.mode_values[mode] * ml_kernel_l1(alpha, lam2.lambda_sq, t);
        case TimeSource::Kind::per_mode_sampled: {
            // value on [t_i, t_{i+1}) is the left sample; held past the grid end
            double acc = 0.0;
            auto seg = [&](double sa, double sb, double c) {
                if (sb <= sa || c == 0.0) return;
                double ka = ml_kernel_l1(alpha, lam2.lambda_sq, t - sa);
                double kb = (t - sb > 0.0) ? ml_kernel_l1(alpha, lam2.lambda_sq, t - sb) : 0.0;
                acc += c * (ka - kb);
            };
            const auto& ts = f.times;
            for (std::size_t i = 0; i + 1 < ts.size(); ++i)
                seg(ts[i], std::min(ts[i + 1], t), f.samples[mode][i]);
            if (t > ts.back()) seg(ts.back(), t, f.samples[mode].back());
            return acc;
        }
    }
    return 0.0;
}

// v(.,t) = sum_n [E_{alpha,1}(-lambda_n^2 t^alpha) g_n + Psi_n(t)] phi_n,
// evaluated lazily mode-by-mode at any requested t in [0, tau].
struct ForwardSolution {
    const SpectralDomain* domain = nullptr;
    double alpha = 0.5;
    double tau = 1.0;
    SpectralField g0;
    TimeSource source;

    double mode_coeff(int mode, double t) const {
        if (t < 0.0 || t > tau) throw std::domain_error("ForwardSolution: t outside [0, tau]");
        auto lam2 = ModeDecay::of_eigenvalue(domain->eigenvalues[mode]);
        double decay = (t == 0.0) ? 1.0 : ml_eval({alpha, 1.0}, -lam2.lambda_sq * std::pow(t, alpha));
        double g = mode < static_cast<int>(g0.coeffs.size()) ? g0.coeffs[mode] : 0.0;
        return decay * g + psi(alpha, lam2, source, mode, t);
    }

    SpectralField at(double t) const {
        SpectralField v;
        v.coeffs.resize(domain->n_modes);
        for (int n = 0; n < domain->n_modes; ++n) v.coeffs[n] = mode_coeff(n, t);
        return v;
    }
};

inline ForwardSolution forward_solve(const SpectralDomain& domain, double alpha,
                                     const SpectralField& g0, const TimeSource& source,
                                     double tau) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("forward_solve: alpha must lie in (0, 1]");
    if (!(tau > 0.0) || source.tau < tau)
        throw std::invalid_argument("forward_solve: need tau > 0 and a source defined through tau");
    if (static_cast<int>(g0.coeffs.size()) > domain.n_modes ||
        source.n_modes > domain.n_modes)
        throw std::invalid_argument("forward_solve: data has more modes than the domain");
    return ForwardSolution{&domain, alpha, tau, g0, source};
}

struct EffectiveData {
    enum class Provenance { clean, noisy };
    SpectralField upsilon;  // Upsilon_n = h_n - Psi_n(tau)
    Provenance provenance = Provenance::clean;
};

inline EffectiveData effective_data(const SpectralDomain& domain, const SpectralField& h,
                                    const TimeSource& source, double alpha, double tau,
                                    EffectiveData::Provenance prov = EffectiveData::Provenance::clean) {
    EffectiveData out;
    out.provenance = prov;
    out.upsilon.coeffs.resize(domain.n_modes);
    for (int n = 0; n < domain.n_modes; ++n) {
        auto lam2 = ModeDecay::of_eigenvalue(domain.eigenvalues[n]);
        double hn = n < static_cast<int>(h.coeffs.size()) ? h.coeffs[n] : 0.0;
        out.upsilon.coeffs[n] = hn - psi(alpha, lam2, source, n, tau);
    }
    return out;
}

struct StabilityCheck {
    double lhs = 0.0;  // ||u~(t) - u(t)||^2
    double rhs = 0.0;  // (4C^2/t^{2a})(dh^2 + theta df^2) + 2 theta df^2
    bool ok = false;
};

struct DeltaParts {
    double h_sq;       // ||h - h~||^2
    double f_sup_sq;   // ||f - f~||^2_{L^inf(0,tau;L^2)}
};

// Checks the interior stability bound with C = C2 (1 + lambda_1^2 tau^alpha) / (C1 lambda_1^2)
// from the calibrated two-sided Mittag-Leffler constants.
inline StabilityCheck stability_bound_check(const ForwardSolution& u, const ForwardSolution& ut,
                                            double t, const DeltaParts& parts,
                                            const MLBoundConstants& cal) {
    if (u.domain != ut.domain || u.alpha != ut.alpha || u.tau != ut.tau)
        throw std::invalid_argument("stability_bound_check: solutions must share domain/alpha/tau");
    if (!(t > 0.0) || !(t < u.tau))
        throw std::domain_error("stability_bound_check: t must be strictly interior");
    StabilityCheck r;
    KahanSum diff;
    for (int n = 0; n < u.domain->n_modes; ++n) {
        double d = ut.mode_coeff(n, t) - u.mode_coeff(n, t);
        diff.add(d * d);
    }
    r.lhs = diff.value();
    double lam1sq = u.domain->lambda1() * u.domain->lambda1();
    double c_stab = cal.c1_upper * (1.0 + lam1sq * std::pow(u.tau, u.alpha)) /
                    (cal.c1_lower * lam1sq);
    double theta = u.domain->theta;
    r.rhs = 4.0 * c_stab * c_stab / std::pow(t, 2.0 * u.alpha) *
                (parts.h_sq + theta * parts.f_sup_sq) +
            2.0 * theta * parts.f_sup_sq;
    r.ok = r.lhs <= r.rhs * (1.0 + 1e-12);
    return r;
}

}  // namespace fbp

#endif
