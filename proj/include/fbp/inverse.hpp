#ifndef FBP_INVERSE_HPP
#define FBP_INVERSE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fbp/forward.hpp"
#include "fbp/mittag_leffler.hpp"
#include "fbp/spectral.hpp"

namespace fbp {

// T g = sum_n kappa_n <g, phi_n> phi_n with kappa_n = E_{alpha,1}(-lambda_n^2 tau^alpha):
// the map from the initial value to the effective final data.
struct BackwardOperator {
    const SpectralDomain* domain = nullptr;
    double alpha = 0.5;
    double tau = 1.0;
    std::vector<double> kappas;

    static BackwardOperator make(const SpectralDomain& domain, double alpha, double tau) {
        if (!(alpha > 0.0) || alpha > 1.0)
            throw std::invalid_argument("BackwardOperator: alpha must lie in (0, 1]");
        if (!(tau > 0.0)) throw std::invalid_argument("BackwardOperator: tau must be positive");
        BackwardOperator op;
        op.domain = &domain;
        op.alpha = alpha;
        op.tau = tau;
        op.kappas.resize(domain.n_modes);
        double ta = std::pow(tau, alpha);
        for (int n = 0; n < domain.n_modes; ++n) {
            auto lam2 = ModeDecay::of_eigenvalue(domain.eigenvalues[n]);
            op.kappas[n] = ml_eval({alpha, 1.0}, -lam2.lambda_sq * ta);
        }
        return op;
    }

    // worst amplification 1/kappa_{N_max}: experiment scripts use this to
    // confirm noise amplification dominates at the chosen delta
    double worst_amplification() const { return 1.0 / kappas.back(); }
};

inline SpectralField apply_T(const BackwardOperator& op, const SpectralField& g) {
    if (static_cast<int>(g.coeffs.size()) > op.domain->n_modes)
        throw std::invalid_argument("apply_T: field has more modes than the operator");
    SpectralField out;
    out.coeffs.resize(g.coeffs.size());
    for (std::size_t n = 0; n < g.coeffs.size(); ++n)
        out.coeffs[n] = op.kappas[n] * g.coeffs[n];
    return out;
}

// g_n = Upsilon_n / kappa_n: exact on the represented modes, but the
// amplification grows like lambda_n^2, which is the whole point of the
// regularization methods downstream.
inline SpectralField exact_backward(const BackwardOperator& op, const EffectiveData& data) {
    SpectralField g;
    g.coeffs.resize(data.upsilon.coeffs.size());
    for (std::size_t n = 0; n < g.coeffs.size(); ++n)
        g.coeffs[n] = data.upsilon.coeffs[n] / op.kappas[n];
    return g;
}

struct AmplificationReport {
    int n = 0;                       // probed mode (1-based)
    double lambda_n = 0.0;
    double kappa_n = 0.0;
    double data_perturbation = 0.0;      // ||h - h~|| = 1/lambda_n
    double solution_perturbation = 0.0;  // ||u(0) - u~(0)|| = 1/(lambda_n kappa_n)
    double ratio = 0.0;                  // 1/kappa_n
};

// Paper's ill-posedness example: perturb h by lambda_n^{-1} phi_n with f = 0
// and watch the reconstructed initial value move by 1/(lambda_n kappa_n).
inline AmplificationReport illposedness_demo(const BackwardOperator& op, int n_probe) {
    if (n_probe < 1 || n_probe > op.domain->n_modes)
        throw std::invalid_argument("illposedness_demo: probe mode out of range");
    AmplificationReport r;
    r.n = n_probe;
    r.lambda_n = op.domain->eigenvalues[n_probe - 1];
    r.kappa_n = op.kappas[n_probe - 1];
    r.data_perturbation = 1.0 / r.lambda_n;
    r.solution_perturbation = 1.0 / (r.lambda_n * r.kappa_n);
    r.ratio = 1.0 / r.kappa_n;
    return r;
}

// ||g|| <= C3^{p/(p+2)} ||g||_{H_p}^{2/(p+2)} ||Upsilon||^{p/(p+2)} for g
// solving T g = Upsilon, with C3 = (1 + lambda_1^2 tau^alpha) Gamma(1-alpha) / (C1 lambda_1^2).
inline double conditional_stability_c3(const BackwardOperator& op, const MLBoundConstants& cal) {
    double lam1sq = op.domain->lambda1() * op.domain->lambda1();
    return (1.0 + lam1sq * std::pow(op.tau, op.alpha)) * std::tgamma(1.0 - op.alpha) /
           (cal.c1_lower * lam1sq);
}

inline bool conditional_stability_check(const BackwardOperator& op, const SpectralField& g,
                                        const EffectiveData& data, double p, double c3) {
    double gn = g.l2_norm();
    if (gn == 0.0) return true;
    double rhs = std::pow(c3, p / (p + 2.0)) *
                 std::pow(g.hp_norm(*op.domain, p), 2.0 / (p + 2.0)) *
                 std::pow(data.upsilon.l2_norm(), p / (p + 2.0));
    return gn <= rhs * (1.0 + 1e-12);
}

}  // namespace fbp

#endif
