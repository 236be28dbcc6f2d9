#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "screendual/blunt.hpp"

namespace screendual {

/// The integration hit the excluded zero of m' sin(theta) - m cos(theta) + a;
/// past it the slope system loses uniqueness, so the solve stops hard.
struct SingularityAbort : std::runtime_error {
    double theta;
    explicit SingularityAbort(double th)
        : std::runtime_error("foliation: singular denominator at theta = " +
                             std::to_string(th)),
          theta(th) {}
};

struct StepRejected : std::runtime_error {
    explicit StepRejected(double th)
        : std::runtime_error("foliation: non-finite state at theta = " +
                             std::to_string(th)) {}
};

/// Sampled ruling description of the upper targeted-bunching wedge.  Each
/// sample is one ruling: a segment from (a, h) at angle theta of length R,
/// along which the payoff is b + r m.
struct BunchFoliation {
    double a = 0.0;
    double h_low = 0.0;   // left-edge intercept of the first ruling
    double theta_bar = 0.0;
    std::vector<double> theta, m, mp, mpp, h, b, R;

    int size() const { return static_cast<int>(theta.size()); }
    double step() const { return size() > 1 ? theta[1] - theta[0] : 0.0; }

    /// Ruling chart X(r, theta) = (a, h) + r (cos theta, sin theta).
    void point(int k, double r, double& x1, double& x2) const {
        x1 = a + r * std::cos(theta[k]);
        x2 = h[k] + r * std::sin(theta[k]);
    }
    /// Payoff gradient along ruling k: rotation(theta) * (m, m').
    void grad(int k, double& u1, double& u2) const {
        u1 = m[k] * std::cos(theta[k]) - mp[k] * std::sin(theta[k]);
        u2 = m[k] * std::sin(theta[k]) + mp[k] * std::cos(theta[k]);
    }
};

struct FoliationOptions {
    double step = 1e-3;
    double singular_tol = 1e-6;
};

/// Integrates the slope system of the bunching wedge with a classical
/// fourth-order one-step method:
///   m'' = 2R - m + (3/2) R^2 cos(theta) / (m' sin(theta) - m cos(theta) + a)
///   h'  = (m'' + m - 2R) / (3 cos(theta))
///   b'  = (m' cos(theta) + m sin(theta)) h'
/// from theta = -pi/4 with m = 0, m' = sqrt(2) g'(a + h_low) and
/// b = g(a + h_low), g the blunt strip profile.
inline BunchFoliation integrate_foliation(double a, double h_low,
                                          const std::function<double(double)>& R,
                                          double theta_bar,
                                          const FoliationOptions& opts = {}) {
    if (!(opts.step > 0.0)) throw std::invalid_argument("integrate_foliation: step <= 0");
    const double theta0 = -0.25 * M_PI;
    if (!(theta_bar > theta0))
        throw std::invalid_argument("integrate_foliation: theta_bar <= -pi/4");

    BunchFoliation fol;
    fol.a = a;
    fol.h_low = h_low;
    fol.theta_bar = theta_bar;

    BluntProfile bp = blunt_profile(a + h_low, a);
    double state[4] = {0.0, std::sqrt(2.0) * bp.du, h_low, bp.u};  // m, m', h, b

    const int nsteps = static_cast<int>(std::ceil((theta_bar - theta0) / opts.step));
    const double dt = (theta_bar - theta0) / nsteps;

    auto rhs = [&](double th, const double* y, double* dy) {
        const double m = y[0], mp = y[1];
        const double Rv = std::max(R(th), 0.0);
        const double denom = mp * std::sin(th) - m * std::cos(th) + a;
        if (std::abs(denom) < opts.singular_tol) throw SingularityAbort(th);
        const double mpp = 2.0 * Rv - m + 1.5 * Rv * Rv * std::cos(th) / denom;
        const double hp = (mpp + m - 2.0 * Rv) / (3.0 * std::cos(th));
        dy[0] = mp;
        dy[1] = mpp;
        dy[2] = hp;
        dy[3] = (mp * std::cos(th) + m * std::sin(th)) * hp;
    };

    auto record = [&](double th) {
        fol.theta.push_back(th);
        fol.m.push_back(state[0]);
        fol.mp.push_back(state[1]);
        fol.h.push_back(state[2]);
        fol.b.push_back(state[3]);
        double Rv = std::max(R(th), 0.0);
        fol.R.push_back(Rv);
        const double denom = state[1] * std::sin(th) - state[0] * std::cos(th) + a;
        fol.mpp.push_back(std::abs(denom) < opts.singular_tol
                              ? std::numeric_limits<double>::quiet_NaN()
                              : 2.0 * Rv - state[0] +
                                    1.5 * Rv * Rv * std::cos(th) / denom);
    };

    record(theta0);
    double th = theta0;
    double k1[4], k2[4], k3[4], k4[4], tmp[4];
    for (int s = 0; s < nsteps; ++s) {
        rhs(th, state, k1);
        for (int q = 0; q < 4; ++q) tmp[q] = state[q] + 0.5 * dt * k1[q];
        rhs(th + 0.5 * dt, tmp, k2);
        for (int q = 0; q < 4; ++q) tmp[q] = state[q] + 0.5 * dt * k2[q];
        rhs(th + 0.5 * dt, tmp, k3);
        for (int q = 0; q < 4; ++q) tmp[q] = state[q] + dt * k3[q];
        rhs(th + dt, tmp, k4);
        for (int q = 0; q < 4; ++q)
            state[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        th = theta0 + (s + 1) * dt;
        for (int q = 0; q < 4; ++q)
            if (!std::isfinite(state[q])) throw StepRejected(th);
        record(th);
    }
    return fol;
}

/// Same ruling system in regular coordinates: the intercept slope
/// dh/dtheta >= 0 is prescribed and the ruling length is derived,
///   R = sqrt(2 (m' sin - m cos + a) h'),
/// which enforces both wedge Euler-Lagrange equations identically and
/// removes the singular division: the denominator reaching zero now just
/// pinches the fan (R -> 0) instead of blowing up.  The slope equation
/// becomes m'' = 2R + 3 h' cos(theta) - m.
inline BunchFoliation integrate_foliation_hslope(
    double a, double h_low, const std::function<double(double)>& hprime,
    double theta_bar, const FoliationOptions& opts = {}) {
    if (!(opts.step > 0.0))
        throw std::invalid_argument("integrate_foliation_hslope: step <= 0");
    const double theta0 = -0.25 * M_PI;
    if (!(theta_bar > theta0))
        throw std::invalid_argument("integrate_foliation_hslope: theta_bar <= -pi/4");

    BunchFoliation fol;
    fol.a = a;
    fol.h_low = h_low;
    fol.theta_bar = theta_bar;

    BluntProfile bp = blunt_profile(a + h_low, a);
    double state[4] = {0.0, std::sqrt(2.0) * bp.du, h_low, bp.u};  // m, m', h, b

    const int nsteps = static_cast<int>(std::ceil((theta_bar - theta0) / opts.step));
    const double dt = (theta_bar - theta0) / nsteps;

    // As the denominator approaches zero the fan pinches; the intercept
    // slope is faded out smoothly with it (and latched at zero once
    // crossed), so the ruling length, the slope equation and the sampled
    // derivatives all stay continuous through the pinch.
    bool pinched = false;
    const double delta_fade = 0.02;
    auto delta_of = [&](double th, double m, double mp) {
        return mp * std::sin(th) - m * std::cos(th) + a;
    };
    auto fade = [&](double delta) {
        double s = std::clamp(delta / delta_fade, 0.0, 1.0);
        return s * s * (3.0 - 2.0 * s);
    };
    auto slope_at = [&](double th, double m, double mp) {
        if (pinched) return 0.0;
        return std::max(hprime(th), 0.0) * fade(delta_of(th, m, mp));
    };
    auto ruling_length = [&](double th, double m, double mp, double hp) {
        return std::sqrt(2.0 * std::max(delta_of(th, m, mp), 0.0) *
                         std::max(hp, 0.0));
    };
    auto rhs = [&](double th, const double* y, double* dy) {
        const double hp = slope_at(th, y[0], y[1]);
        const double Rv = ruling_length(th, y[0], y[1], hp);
        dy[0] = y[1];
        dy[1] = 2.0 * Rv + 3.0 * hp * std::cos(th) - y[0];
        dy[2] = hp;
        dy[3] = (y[1] * std::cos(th) + y[0] * std::sin(th)) * hp;
    };
    auto record = [&](double th) {
        const double hp = slope_at(th, state[0], state[1]);
        const double Rv = ruling_length(th, state[0], state[1], hp);
        fol.theta.push_back(th);
        fol.m.push_back(state[0]);
        fol.mp.push_back(state[1]);
        fol.h.push_back(state[2]);
        fol.b.push_back(state[3]);
        fol.R.push_back(Rv);
        fol.mpp.push_back(2.0 * Rv + 3.0 * hp * std::cos(th) - state[0]);
    };

    record(theta0);
    double th = theta0;
    double k1[4], k2[4], k3[4], k4[4], tmp[4];
    for (int s = 0; s < nsteps; ++s) {
        if (s > 0 && delta_of(th, state[0], state[1]) <= 0.0) pinched = true;
        rhs(th, state, k1);
        for (int q = 0; q < 4; ++q) tmp[q] = state[q] + 0.5 * dt * k1[q];
        rhs(th + 0.5 * dt, tmp, k2);
        for (int q = 0; q < 4; ++q) tmp[q] = state[q] + 0.5 * dt * k2[q];
        rhs(th + 0.5 * dt, tmp, k3);
        for (int q = 0; q < 4; ++q) tmp[q] = state[q] + dt * k3[q];
        rhs(th + dt, tmp, k4);
        for (int q = 0; q < 4; ++q)
            state[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        th = theta0 + (s + 1) * dt;
        for (int q = 0; q < 4; ++q)
            if (!std::isfinite(state[q])) throw StepRejected(th);
        record(th);
    }
    return fol;
}

namespace detail {

/// Fourth-order centered first derivative of a sampled array; one-sided
/// fourth-order stencils at the margins.
inline double sampled_derivative(const std::vector<double>& f, int k, double dt) {
    const int n = static_cast<int>(f.size());
    auto at = [&](int i) { return f[std::clamp(i, 0, n - 1)]; };
    if (k >= 2 && k + 2 < n)
        return (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * dt);
    if (k < 2)
        return (-25.0 * at(k) + 48.0 * at(k + 1) - 36.0 * at(k + 2) + 16.0 * at(k + 3) -
                3.0 * at(k + 4)) /
               (12.0 * dt);
    return (25.0 * at(k) - 48.0 * at(k - 1) + 36.0 * at(k - 2) - 16.0 * at(k - 3) +
            3.0 * at(k - 4)) /
           (12.0 * dt);
}

}  // namespace detail

/// Euler-Lagrange residual of the slope equation along a sampled foliation,
/// with m'' recomputed from the samples (independent of the integrator's
/// internal derivative):
///   (m'' + m - 2R)(m' sin - m cos + a) - (3/2) R^2 cos.
/// Where the ruling length vanishes like a square root (a pinching fan) the
/// sampled derivative itself degrades, so an angular margin around such
/// points can be excluded from the sweep.
inline double slope_el_residual(const BunchFoliation& fol, double end_margin = 0.0) {
    const int n = fol.size();
    const double dt = fol.step();
    const int skip = dt > 0.0 ? static_cast<int>(end_margin / dt) : 0;
    double worst = 0.0;
    for (int k = 2; k + 2 < n; ++k) {
        if (skip > 0) {
            bool near_pinch = false;
            for (int q = std::max(0, k - skip); q <= std::min(n - 1, k + skip); ++q)
                if (fol.R[q] <= 1e-12 && (q > 0 && fol.R[q - 1] > 1e-12)) near_pinch = true;
            if (near_pinch) continue;
        }
        double mpp = detail::sampled_derivative(fol.mp, k, dt);
        double th = fol.theta[k];
        double denom = fol.mp[k] * std::sin(th) - fol.m[k] * std::cos(th) + fol.a;
        double r = (mpp + fol.m[k] - 2.0 * fol.R[k]) * denom -
                   1.5 * fol.R[k] * fol.R[k] * std::cos(th);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

/// First-variation residuals of the wedge: alpha couples the interior and
/// left-edge terms, beta is the pure interior term.  Both vanish along a
/// consistent foliation.  h' and m'' are recomputed from the samples.
inline void alpha_beta_residuals(const BunchFoliation& fol, double a,
                                 std::vector<double>& alpha, std::vector<double>& beta) {
    const int n = fol.size();
    const double dt = fol.step();
    alpha.assign(n, 0.0);
    beta.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double mpp = detail::sampled_derivative(fol.mp, k, dt);
        double hp = detail::sampled_derivative(fol.h, k, dt);
        double th = fol.theta[k];
        double R = fol.R[k];
        double box0 = fol.m[k] + mpp - 3.0 * hp * std::cos(th);
        double box2 = fol.m[k] * std::cos(th) - fol.mp[k] * std::sin(th) - a;
        alpha[k] = box0 * R - 1.5 * R * R + box2 * hp;
        beta[k] = 0.5 * box0 * R * R - R * R * R;
    }
}

/// Exact sign-change identity of the cubic weight on one ruling:
/// ∫_0^R (R^2/2 - 2 R r + 3 r^2 / 2) dr = 0.  Simpson quadrature is exact
/// for the quadratic integrand, so the numerical value is pure rounding.
inline double zeta_integral(double R, int panels = 64) {
    auto zeta = [R](double r) { return 0.5 * R * R - 2.0 * R * r + 1.5 * r * r; };
    const int n = 2 * panels;
    const double dr = R / n;
    double s = zeta(0.0) + zeta(R);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * zeta(k * dr);
    return s * dr / 3.0;
}

}  // namespace screendual
