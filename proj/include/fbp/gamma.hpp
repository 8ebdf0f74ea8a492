#ifndef FBP_GAMMA_HPP
#define FBP_GAMMA_HPP

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fbp {

// Gamma function for positive real arguments. The platform tgamma/lgamma
// pair is accurate to well below 1e-12 relative on (0, 172), which is the
// contract the rest of the library relies on.
inline double gamma_fn(double x) {
    if (!(x > 0.0))
        throw std::invalid_argument("gamma_fn: argument must be positive");
    return std::tgamma(x);
}

inline double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::invalid_argument("log_gamma: argument must be positive");
    return std::lgamma(x);
}

// sin(pi*x) with argument reduction done on x itself, so no precision is
// lost multiplying large x by pi first.
inline double sinpi(double x) {
    double r = x - 2.0 * std::round(0.5 * x);  // r in [-1, 1]
    return std::sin(3.14159265358979323846 * r);
}

// Reciprocal gamma 1/Gamma(x), entire in x. Returns 0 at the poles
// x = 0, -1, -2, ... For x <= 0.5 uses the reflection formula
// 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi evaluated in log space, since
// Gamma(1-x) overflows double long before 1/Gamma(x) stops mattering
// relative to the x^{-k} factors it is paired with.
inline double rgamma(double x) {
    if (x > 0.5)
        return 1.0 / std::tgamma(x);
    double s = sinpi(x);
    if (s == 0.0) return 0.0;
    double lg = std::lgamma(1.0 - x);
    double m = lg + std::log(std::fabs(s) / 3.14159265358979323846);
    if (m > 700.0) return std::copysign(std::numeric_limits<double>::infinity(), s);
    return std::copysign(std::exp(m), s);
}

// log |1/Gamma(x)| and its sign, for building series terms in log space.
struct LogRGamma {
    double log_mag;  // -inf at poles
    int sign;        // 0 at poles
};

inline LogRGamma log_rgamma(double x) {
    if (x > 0.5) return {-std::lgamma(x), 1};
    double s = sinpi(x);
    if (s == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    double lm = std::lgamma(1.0 - x) + std::log(std::fabs(s) / 3.14159265358979323846);
    return {lm, s > 0.0 ? 1 : -1};
}

}  // namespace fbp

#endif
