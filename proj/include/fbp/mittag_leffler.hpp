#ifndef FBP_MITTAG_LEFFLER_HPP
#define FBP_MITTAG_LEFFLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <mpfr.h>

#include "fbp/gamma.hpp"
#include "fbp/kahan.hpp"

namespace fbp {

// Fractional orders (gamma, beta) of E_{gamma,beta}. gamma = 1 is admitted
// for classical-limit cross-checks.
struct MLOrder {
    double gamma;
    double beta;

    void validate() const {
        if (!(gamma > 0.0) || gamma > 1.0)
            throw std::invalid_argument("MLOrder: gamma must lie in (0, 1]");
        if (!(beta > 0.0))
            throw std::invalid_argument("MLOrder: beta must be positive");
    }
};

// Empirical two-sided bound constants for E_{alpha,1}(x), x <= 0:
//   c1_lower / (Gamma(1-alpha)(1-x)) <= E_{alpha,1}(x) <= c1_upper / (Gamma(1-alpha)(1-x))
struct MLBoundConstants {
    double c1_lower = 0.0;
    double c1_upper = 0.0;
    double alpha = 0.0;

    // Lower bound on the kernel decay: E_{alpha,1}(-lam^2 tau^alpha) >= c4 / lam^2.
    double c4(double tau, double lambda1) const {
        double l2 = lambda1 * lambda1;
        return c1_lower * l2 / ((1.0 + l2 * std::pow(tau, alpha)) * gamma_fn(1.0 - alpha));
    }
};

namespace detail {

struct BranchResult {
    double value = 0.0;
    double abs_err = std::numeric_limits<double>::infinity();
    bool ok = false;
};

// Power series sum_k x^k / Gamma(k*gamma + beta) in double with compensated
// summation. Only trustworthy while the cancellation ratio max|term|/|sum|
// stays well below 1/eps; the a-posteriori error estimate reports that.
inline BranchResult ml_series_double(double gamma, double beta, double x) {
    BranchResult r;
    KahanSum sum;
    double max_term = 0.0;
    double term = rgamma(beta);
    sum.add(term);
    double prev_mag = std::fabs(term);
    bool past_peak = false;
    const int k_max = 4000;
    for (int k = 1; k <= k_max; ++k) {
        // term_k = x^k * rgamma(gamma k + beta), built in log space so the
        // pre-cancellation magnitudes never overflow silently.
        double lm = static_cast<double>(k) * std::log(std::fabs(x));
        LogRGamma lrg = log_rgamma(gamma * k + beta);
        if (lrg.sign == 0) continue;
        double mag_log = lm + lrg.log_mag;
        if (mag_log > 690.0) return r;  // term overflows double, give up
        double mag = std::exp(mag_log);
        int sign = (x < 0.0 && (k & 1)) ? -lrg.sign : lrg.sign;
        sum.add(sign * mag);
        max_term = std::max(max_term, mag);
        if (mag < prev_mag) past_peak = true;
        if (past_peak && mag < 1e-18 * (std::fabs(sum.value()) + 1e-300)) break;
        prev_mag = mag;
    }
    r.value = sum.value();
    r.abs_err = 8.0 * std::numeric_limits<double>::epsilon() * max_term;
    r.ok = true;
    return r;
}

// Asymptotic expansion for x -> -inf:
//   E_{gamma,beta}(x) ~ -sum_{k>=1} x^{-k} / Gamma(beta - k*gamma),
// truncated at the smallest term. The first omitted term bounds the error.
// Log of the |sin|-free envelope |x|^{-k} / |Gamma(beta - gamma k)| with the
// reflection sine replaced by 1. An upper bound on the true term magnitude,
// and smoothly U-shaped in k, so it is what decides the optimal truncation
// point; the sine factor only makes individual terms smaller.
inline double asym_envelope_log(double gamma, double beta, double x, int k) {
    double a = beta - gamma * k;
    double linv = -std::log(std::fabs(x));
    if (a > 0.5) return k * linv - std::lgamma(a);
    return k * linv + std::lgamma(1.0 - a) - 1.1447298858494002;  // - ln(pi)
}

inline BranchResult ml_asymptotic(double gamma, double beta, double x) {
    BranchResult r;
    if (x >= -1.0) return r;
    KahanSum sum;
    double linv = -std::log(std::fabs(x));
    double prev_env = std::numeric_limits<double>::infinity();
    const int k_max = 400;
    r.abs_err = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
        double env = asym_envelope_log(gamma, beta, x, k);
        if (env > prev_env) {  // past the envelope minimum, tail diverges
            r.abs_err = std::exp(env);
            break;
        }
        prev_env = env;
        LogRGamma lrg = log_rgamma(beta - gamma * k);
        if (lrg.sign != 0) {
            double mag = std::exp(k * linv + lrg.log_mag);
            int sign = ((k & 1) ? -lrg.sign : lrg.sign);  // x^{-k}, x < 0
            sum.add(-static_cast<double>(sign) * mag);
        }
        r.abs_err = std::exp(env);
        if (env < std::log(1e-20 * (std::fabs(sum.value()) + 1e-300))) break;
    }
    r.value = sum.value();
    r.abs_err += 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(r.value);
    r.ok = true;
    return r;
}

// Arbitrary-precision power series. Working precision is sized from the
// peak term magnitude exp(|x|^{1/gamma}) so the cancellation is absorbed
// entirely; the converted double is then correct to ~1e-25 relative.
inline double ml_series_mpfr(double gamma, double beta, double x, double term_floor = 1e-30) {
    double w = std::pow(std::fabs(x), 1.0 / gamma);  // ~ log of peak term
    long prec = 128 + static_cast<long>(1.5 * w / 0.6931) + 8;
    if (prec > 2000000L)
        throw std::domain_error("ml_series_mpfr: required precision is impractical");
    mpfr_t sum, term, arg, xk, g;
    mpfr_inits2(prec, sum, term, arg, xk, g, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(xk, 1.0, MPFR_RNDN);
    mpfr_set_d(sum, 0.0, MPFR_RNDN);
    double max_log2 = 0.0;
    bool past_peak = false;
    double prev_log2 = std::numeric_limits<double>::infinity();
    long k_cap = 200 + static_cast<long>(4.0 * w / gamma);
    for (long k = 0; k <= k_cap; ++k) {
        mpfr_set_d(arg, beta, MPFR_RNDN);
        mpfr_set_d(g, gamma, MPFR_RNDN);
        mpfr_mul_si(g, g, k, MPFR_RNDN);
        mpfr_add(arg, arg, g, MPFR_RNDN);
        mpfr_gamma(g, arg, MPFR_RNDN);
        mpfr_div(term, xk, g, MPFR_RNDN);
        mpfr_add(sum, sum, term, MPFR_RNDN);
        double tl = mpfr_zero_p(term) ? -std::numeric_limits<double>::infinity()
                                      : static_cast<double>(mpfr_get_exp(term));
        max_log2 = std::max(max_log2, tl);
        if (tl < prev_log2) past_peak = true;
        prev_log2 = tl;
        if (past_peak && !mpfr_zero_p(sum)) {
            double sl = static_cast<double>(mpfr_get_exp(sum));
            if (tl < sl + std::log2(term_floor)) break;
        }
        mpfr_mul_d(xk, xk, x, MPFR_RNDN);
    }
    double out = mpfr_get_d(sum, MPFR_RNDN);
    mpfr_clears(sum, term, arg, xk, g, static_cast<mpfr_ptr>(nullptr));
    return out;
}

}  // namespace detail

// E_{gamma,beta}(x) for x <= 0, relative error <= rel_tol.
//
// Branch selection is accuracy-driven: the double series is used while its
// cancellation-based error estimate meets the tolerance, the asymptotic
// expansion when its optimal-truncation error does, and an
// arbitrary-precision series covers the band where neither double branch
// suffices.
inline double ml_eval(const MLOrder& order, double x, double rel_tol = 1e-12) {
    order.validate();
    if (x > 0.0)
        throw std::domain_error("ml_eval: positive arguments are out of scope");
    if (!(rel_tol >= 1e-14) || !(rel_tol <= 1e-6))
        throw std::invalid_argument("ml_eval: rel_tol must lie in [1e-14, 1e-6]");
    if (x == 0.0) return rgamma(order.beta);
    if (order.gamma == 1.0 && order.beta == 1.0) return std::exp(x);

    const double g = order.gamma, b = order.beta;
    // Peak-term exponent of the power series; the double branch is hopeless
    // once it exceeds ~ -log(eps * rel_tol).
    double w = std::pow(std::fabs(x), 1.0 / g);
    if (w < 25.0) {
        detail::BranchResult s = detail::ml_series_double(g, b, x);
        if (s.ok && s.abs_err <= rel_tol * std::fabs(s.value)) return s.value;
    }
    detail::BranchResult a = detail::ml_asymptotic(g, b, x);
    if (a.ok && std::fabs(a.value) > 0.0 && a.abs_err <= 0.5 * rel_tol * std::fabs(a.value))
        return a.value;
    return detail::ml_series_mpfr(g, b, x);
}

// Kernel t^{alpha-1} E_{alpha,alpha}(-lambda t^alpha), t > 0. The t -> 0
// singularity is integrable; callers quadrature around it, never through it.
inline double ml_kernel(double alpha, double lambda, double t, double rel_tol = 1e-12) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("ml_kernel: alpha must lie in (0, 1]");
    if (!(lambda > 0.0))
        throw std::invalid_argument("ml_kernel: lambda must be positive");
    if (!(t > 0.0))
        throw std::domain_error("ml_kernel: t must be strictly positive");
    return std::pow(t, alpha - 1.0) * ml_eval({alpha, alpha}, -lambda * std::pow(t, alpha), rel_tol);
}

// Integral of the kernel over (0, tau), via the antiderivative identity
//   int_0^t s^{alpha-1} E_{alpha,alpha}(-lambda s^alpha) ds
//     = (1 - E_{alpha,1}(-lambda t^alpha)) / lambda,
// which is exact; the value never exceeds 1/lambda.
inline double ml_kernel_l1(double alpha, double lambda, double tau, double quad_tol = 1e-12) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("ml_kernel_l1: alpha must lie in (0, 1]");
    if (!(lambda > 0.0))
        throw std::invalid_argument("ml_kernel_l1: lambda must be positive");
    if (!(tau > 0.0))
        throw std::invalid_argument("ml_kernel_l1: tau must be positive");
    double tol = std::clamp(quad_tol, 1e-14, 1e-6);
    return (1.0 - ml_eval({alpha, 1.0}, -lambda * std::pow(tau, alpha), tol)) / lambda;
}

// Log-spaced calibration grid {-x_span, ..., -x_span*r^k, ..., 0}. The span
// must cover every -lambda_n^2 tau^alpha the downstream bounds are applied
// at, since the empirical constants are only certified on-grid and the
// bounded expression approaches its infimum monotonically at the far end.
inline std::vector<double> default_bound_grid(double x_span = 1e10, int n_points = 400) {
    if (!(x_span > 0.0) || n_points < 2)
        throw std::invalid_argument("default_bound_grid: bad grid spec");
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n_points) + 1);
    double lo = -8.0, hi = std::log10(x_span);
    for (int i = 0; i < n_points; ++i) {
        double e = hi + (lo - hi) * i / (n_points - 1);
        g.push_back(-std::pow(10.0, e));
    }
    g.push_back(0.0);
    return g;
}

// Tightest empirical constants C1, C2 with
//   C1 <= E_{alpha,1}(x) * Gamma(1-alpha) * (1-x) <= C2 on the grid.
inline MLBoundConstants estimate_bound_constants(double alpha, const std::vector<double>& x_grid) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("estimate_bound_constants: alpha must lie in (0, 1)");
    if (x_grid.empty())
        throw std::invalid_argument("estimate_bound_constants: empty grid");
    double gam = gamma_fn(1.0 - alpha);
    MLBoundConstants c;
    c.alpha = alpha;
    c.c1_lower = std::numeric_limits<double>::infinity();
    c.c1_upper = 0.0;
    for (double x : x_grid) {
        if (x > 0.0)
            throw std::invalid_argument("estimate_bound_constants: grid must be <= 0");
        double v = ml_eval({alpha, 1.0}, x) * gam * (1.0 - x);
        c.c1_lower = std::min(c.c1_lower, v);
        c.c1_upper = std::max(c.c1_upper, v);
    }
    return c;
}

}  // namespace fbp

#endif
