// Test-only reference evaluation of E_{gamma,beta}(x), x <= 0, kept
// independent of the library's evaluation path. The power series is summed
// in arbitrary precision sized from the peak-term magnitude; far in the
// left tail, where the series peak exceeds any practical precision, the
// optimally truncated asymptotic expansion is itself exact to far below
// the comparison tolerances used in the tests.
#ifndef FBP_TESTS_ML_ORACLE_HPP
#define FBP_TESTS_ML_ORACLE_HPP

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <mpfr.h>

namespace ml_oracle {

// Sine-free envelope |x|^{-k} / |Gamma(beta - gamma k)| in logs; U-shaped
// in k, upper-bounds the true asymptotic term magnitude.
inline double envelope_log(double gamma, double beta, double x, int k) {
    double a = beta - gamma * k;
    double linv = -std::log(std::fabs(x));
    if (a > 0.5) return k * linv - std::lgamma(a);
    return k * linv + std::lgamma(1.0 - a) - std::log(M_PI);
}

// Relative truncation error of the optimally truncated asymptotic
// expansion, estimated in double log-space. Decides the oracle route.
inline double asymptotic_rel_err_estimate(double gamma, double beta, double x) {
    if (x >= -1.0) return std::numeric_limits<double>::infinity();
    double lead = -std::numeric_limits<double>::infinity();
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 400; ++k) {
        double env = envelope_log(gamma, beta, x, k);
        if (env > prev) break;
        prev = env;
        lead = std::max(lead, env);
    }
    if (!std::isfinite(lead)) return std::numeric_limits<double>::infinity();
    return std::exp(prev - lead);
}

inline double series_mpfr(double gamma, double beta, double x) {
    double w = std::pow(std::fabs(x), 1.0 / gamma);
    long prec = 160 + static_cast<long>(2.2 * w);
    if (prec > 4000000L) throw std::domain_error("ml_oracle: series infeasible here");
    mpfr_t sum, term, a, p, mx;
    mpfr_inits2(prec, sum, term, a, p, mx, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(sum, 0.0, MPFR_RNDN);
    mpfr_set_d(mx, x, MPFR_RNDN);
    long kmax = 400 + static_cast<long>(6.0 * w / gamma);
    bool past_peak = false;
    long prev_exp = std::numeric_limits<long>::max();
    for (long k = 0; k <= kmax; ++k) {
        mpfr_set_d(a, gamma, MPFR_RNDN);
        mpfr_mul_si(a, a, k, MPFR_RNDN);
        mpfr_add_d(a, a, beta, MPFR_RNDN);
        mpfr_gamma(a, a, MPFR_RNDN);
        mpfr_pow_si(p, mx, k, MPFR_RNDN);
        mpfr_div(term, p, a, MPFR_RNDN);
        mpfr_add(sum, sum, term, MPFR_RNDN);
        if (!mpfr_zero_p(term)) {
            long e = mpfr_get_exp(term);
            if (e < prev_exp) past_peak = true;
            prev_exp = e;
            if (past_peak && !mpfr_zero_p(sum) && e < mpfr_get_exp(sum) - 120) break;
        }
    }
    double out = mpfr_get_d(sum, MPFR_RNDN);
    mpfr_clears(sum, term, a, p, mx, static_cast<mpfr_ptr>(nullptr));
    return out;
}

inline double asymptotic_mpfr(double gamma, double beta, double x) {
    const long prec = 320;
    mpfr_t sum, term, a, p, mx;
    mpfr_inits2(prec, sum, term, a, p, mx, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(sum, 0.0, MPFR_RNDN);
    mpfr_set_d(mx, x, MPFR_RNDN);
    double prev_env = std::numeric_limits<double>::infinity();
    for (long k = 1; k <= 400; ++k) {
        double env = envelope_log(gamma, beta, x, static_cast<int>(k));
        if (env > prev_env) break;
        prev_env = env;
        double arg = beta - gamma * k;
        double r = arg - std::round(arg);
        if (std::fabs(r) < 1e-13 && arg < 0.5) continue;  // Gamma pole, term absent
        mpfr_set_d(a, arg, MPFR_RNDN);
        mpfr_gamma(a, a, MPFR_RNDN);
        mpfr_pow_si(p, mx, -k, MPFR_RNDN);
        mpfr_div(term, p, a, MPFR_RNDN);
        mpfr_sub(sum, sum, term, MPFR_RNDN);
        if (!mpfr_zero_p(sum) && !mpfr_zero_p(term) &&
            mpfr_get_exp(term) < mpfr_get_exp(sum) - 140)
            break;
    }
    double out = mpfr_get_d(sum, MPFR_RNDN);
    mpfr_clears(sum, term, a, p, mx, static_cast<mpfr_ptr>(nullptr));
    return out;
}

inline double eval(double gamma, double beta, double x) {
    assert(x <= 0.0 && gamma > 0.0 && gamma <= 1.0 && beta > 0.0);
    if (x == 0.0) return 1.0 / std::tgamma(beta);
    if (asymptotic_rel_err_estimate(gamma, beta, x) < 1e-14) return asymptotic_mpfr(gamma, beta, x);
    return series_mpfr(gamma, beta, x);
}

// E_{1/2,1}(-y) = exp(y^2) erfc(y), via the scaled complement to dodge the
// overflow/underflow product for large y.
inline double half_order_via_erfc(double y) {
    if (y < 25.0) return std::exp(y * y) * std::erfc(y);
    double s = 1.0, t = 1.0;
    for (int k = 1; k < 20; ++k) {
        t *= -(2.0 * k - 1.0) / (2.0 * y * y);
        s += t;
    }
    return s / (y * std::sqrt(M_PI));
}

}  // namespace ml_oracle

#endif
