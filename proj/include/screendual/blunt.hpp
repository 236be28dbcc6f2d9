#pragma once

#include <cmath>
#include <stdexcept>

namespace screendual {

/// x2-intercept of the exclusion triangle's hypotenuse on {x1 = a}: the
/// positive root of 3(x-a)^2 + 4a(x-a) - 2 = 0, shifted so the hypotenuse
/// is the line x1 + x2 = a + exclusion_boundary(a).
inline double exclusion_boundary(double a) {
    if (a < 0.0) throw std::invalid_argument("exclusion_boundary: a must be >= 0");
    return (a + std::sqrt(4.0 * a * a + 6.0)) / 3.0;
}

/// Closed-form payoff profile in the blunt bunching strip, as a function of
/// t = x1 + x2:
///   g(t) = (3/8) t^2 - (a/2) t - (1/2) ln(t - 2a) + C0,
/// anchored so that g and g' vanish at the exclusion hypotenuse t = a + x2_.
/// Only t > 2a is admissible (log domain).
struct BluntProfile {
    double u = 0.0;   // g(t)
    double du = 0.0;  // g'(t)
};

namespace detail {
inline double blunt_c0(double a) {
    double root = std::sqrt(4.0 * a * a + 6.0);
    return -(2.0 * a * a + 3.0 + 2.0 * a * root) / 12.0 +
           0.5 * std::log((-2.0 * a + root) / 3.0);
}
}  // namespace detail

inline BluntProfile blunt_profile(double t, double a) {
    if (!(t > 2.0 * a))
        throw std::domain_error("blunt_profile: t must exceed 2a (log domain)");
    BluntProfile p;
    const double c0 = detail::blunt_c0(a);
    p.u = 0.375 * t * t - 0.5 * a * t - 0.5 * std::log(t - 2.0 * a) + c0;
    p.du = 0.75 * t - 0.5 * a - 0.5 / (t - 2.0 * a);
    return p;
}

/// Same one-parameter family of strip profiles with the anchor g(tau0) =
/// g'(tau0) = 0 moved to an arbitrary tau0 > 2a.  The log coefficient
/// becomes C1 = ((3/4) tau0 - a/2)(tau0 - 2a); the standard profile is the
/// anchor tau0 = a + exclusion_boundary(a), where C1 = 1/2.
inline BluntProfile blunt_profile_anchored(double t, double a, double tau0) {
    if (!(t > 2.0 * a) || !(tau0 > 2.0 * a))
        throw std::domain_error("blunt_profile_anchored: need t, tau0 > 2a");
    const double c1 = (0.75 * tau0 - 0.5 * a) * (tau0 - 2.0 * a);
    const double c0 =
        -0.375 * tau0 * tau0 + 0.5 * a * tau0 + c1 * std::log(tau0 - 2.0 * a);
    BluntProfile p;
    p.u = 0.375 * t * t - 0.5 * a * t - c1 * std::log(t - 2.0 * a) + c0;
    p.du = 0.75 * t - 0.5 * a - c1 / (t - 2.0 * a);
    return p;
}

/// Residual of the strip Euler-Lagrange ODE (2 - 2 g'')(t - 2a) + t - 2 g'
/// at a point; identically zero for the closed forms above.
inline double blunt_ode_residual(double t, double a, double c1 = 0.5) {
    if (!(t > 2.0 * a)) throw std::domain_error("blunt_ode_residual: t <= 2a");
    double s = t - 2.0 * a;
    double gp = 0.75 * t - 0.5 * a - c1 / s;
    double gpp = 0.75 + c1 / (s * s);
    return (2.0 - 2.0 * gpp) * s + t - 2.0 * gp;
}

}  // namespace screendual
