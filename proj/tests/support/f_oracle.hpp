// Reference F-distribution CDF used only by tests.  Integrates the F
// density with adaptive Simpson after the substitution x = u^2 (which
// removes the d1=1 singularity at the origin), so it shares no code
// path with the library's continued-fraction evaluation.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

namespace som::test_support {

// Integrand of the CDF after x = u^2: g(u) = 2u * f(u^2; d1, d2).
inline double f_density_u(double u, double d1, double d2) {
    if (u < 0.0) return 0.0;
    const double a = d1 / 2.0;
    const double b = d2 / 2.0;
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double u_exponent = 2.0 * a - 1.0;
    double log_g = std::log(2.0) + a * std::log(d1) + b * std::log(d2) - log_beta -
                   (a + b) * std::log(d1 * u * u + d2);
    if (u_exponent != 0.0) {
        if (u == 0.0) return 0.0;  // d1 >= 2, integrand vanishes at the origin
        log_g += u_exponent * std::log(u);
    }
    return std::exp(log_g);
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& g, double lo,
                               double hi, double g_lo, double g_mid, double g_hi,
                               double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid);
    const double mh = 0.5 * (mid + hi);
    const double g_lm = g(lm);
    const double g_mh = g(mh);
    const double left = (mid - lo) / 6.0 * (g_lo + 4.0 * g_lm + g_mid);
    const double right = (hi - mid) / 6.0 * (g_mid + 4.0 * g_mh + g_hi);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(g, lo, mid, g_lo, g_lm, g_mid, left, tol / 2.0, depth - 1) +
           adaptive_simpson(g, mid, hi, g_mid, g_mh, g_hi, right, tol / 2.0, depth - 1);
}

inline double integrate_cdf(double x, double d1, double d2) {
    const double hi = std::sqrt(x);
    auto g = [d1, d2](double u) { return f_density_u(u, d1, d2); };
    const double g_lo = g(0.0);
    const double g_mid = g(hi / 2.0);
    const double g_hi = g(hi);
    const double whole = hi / 6.0 * (g_lo + 4.0 * g_mid + g_hi);
    return detail::adaptive_simpson(g, 0.0, hi, g_lo, g_mid, g_hi, whole, 1e-13, 60);
}

}  // namespace detail

// P(X <= x) for X ~ F(d1, d2).  For x > 1 the reflection
// X ~ F(d1,d2) <=> 1/X ~ F(d2,d1) keeps the integration domain in [0,1].
inline double f_cdf_oracle(double x, int d1, int d2) {
    if (x <= 0.0) return 0.0;
    double v;
    if (x > 1.0)
        v = 1.0 - detail::integrate_cdf(1.0 / x, static_cast<double>(d2),
                                        static_cast<double>(d1));
    else
        v = detail::integrate_cdf(x, static_cast<double>(d1), static_cast<double>(d2));
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace som::test_support
