#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "screendual/grid.hpp"

namespace screendual {

/// Manufacturing cost c on the product cone Y = [0,inf)^2, together with its
/// gradient, convex conjugate c* and conjugate gradient.  Outside Y the cost
/// is +inf, which the conjugate absorbs by clipping negative coordinates.
struct CostSpec {
    std::string name;
    std::function<double(double, double)> c;
    std::function<void(double, double, double&, double&)> dc;
    std::function<double(double, double)> cstar;
    std::function<void(double, double, double&, double&)> dcstar;

    /// c(y) = |y|^2 / 2; self-conjugate up to cone clipping.
    static CostSpec quadratic() {
        CostSpec s;
        s.name = "quadratic";
        s.c = [](double y1, double y2) { return 0.5 * (y1 * y1 + y2 * y2); };
        s.dc = [](double y1, double y2, double& z1, double& z2) {
            z1 = y1;
            z2 = y2;
        };
        s.cstar = [](double z1, double z2) {
            double p1 = std::max(z1, 0.0), p2 = std::max(z2, 0.0);
            return 0.5 * (p1 * p1 + p2 * p2);
        };
        s.dcstar = [](double z1, double z2, double& y1, double& y2) {
            y1 = std::max(z1, 0.0);
            y2 = std::max(z2, 0.0);
        };
        return s;
    }

    /// c(y) = |y|^4.  Exercises the non-quadratic code path.
    static CostSpec quartic() {
        CostSpec s;
        s.name = "quartic";
        s.c = [](double y1, double y2) {
            double r2 = y1 * y1 + y2 * y2;
            return r2 * r2;
        };
        s.dc = [](double y1, double y2, double& z1, double& z2) {
            double r2 = y1 * y1 + y2 * y2;
            z1 = 4.0 * r2 * y1;
            z2 = 4.0 * r2 * y2;
        };
        // c*(z) = sup_{y>=0} y.z - |y|^4 = (3/4) (|z+|/4)^{4/3} * 4^{1/3}
        // computed radially: for |z+| = r, optimal |y| = (r/4)^{1/3}.
        s.cstar = [](double z1, double z2) {
            double p1 = std::max(z1, 0.0), p2 = std::max(z2, 0.0);
            double r = std::sqrt(p1 * p1 + p2 * p2);
            if (r == 0.0) return 0.0;
            double rho = std::cbrt(r / 4.0);
            return r * rho - rho * rho * rho * rho;
        };
        s.dcstar = [](double z1, double z2, double& y1, double& y2) {
            double p1 = std::max(z1, 0.0), p2 = std::max(z2, 0.0);
            double r = std::sqrt(p1 * p1 + p2 * p2);
            if (r == 0.0) {
                y1 = y2 = 0.0;
                return;
            }
            double rho = std::cbrt(r / 4.0);
            y1 = rho * p1 / r;
            y2 = rho * p2 / r;
        };
        return s;
    }
};

/// Problem data: square of types X = [a, a+1]^2, type density f (nodal values,
/// default uniform), cost spec.  The outside option is the zero product at
/// price zero throughout.
struct ModelConfig {
    Grid grid;
    CostSpec cost = CostSpec::quadratic();
    std::vector<double> density;  // nodal f values; empty means f == 1
    double cone_tol = 1e-6;       // tolerated dip of Du below the cone Y

    ModelConfig() = default;
    ModelConfig(double a, int n, CostSpec c = CostSpec::quadratic())
        : grid(a, n), cost(std::move(c)) {
        if (n < 8) throw std::invalid_argument("ModelConfig: need n_grid >= 8");
    }

    double f(int i, int j) const {
        return density.empty() ? 1.0 : density[grid.index(i, j)];
    }

    /// Density must be positive and integrate to 1 under the module's own
    /// quadrature (tolerance 1e-10).
    void validate_density() const {
        if (density.empty()) return;
        double mass = 0.0, fmin = density[0];
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < grid.n; ++j) {
                double fij = density[grid.index(i, j)];
                fmin = std::min(fmin, fij);
                mass += trapezoid_weight(grid, i, j) * fij;
            }
        if (fmin <= 0.0)
            throw std::invalid_argument("ModelConfig: density must be strictly positive");
        if (std::abs(mass - 1.0) > 1e-10)
            throw std::invalid_argument("ModelConfig: density mass " +
                                        std::to_string(mass) + " != 1 within 1e-10");
    }
};

/// Discrete gradient: centered differences in the interior, one-sided at
/// the edges.  Exact for affine fields; the one-sided edge stencil keeps
/// the gradient of any forward-monotone field componentwise nonnegative.
inline VectorField gradient(const ScalarField& u) {
    const Grid& g = u.grid;
    if (g.n < 3) throw std::invalid_argument("gradient: need n >= 3");
    VectorField out(g);
    const double h = g.h();
    auto d = [&](int i, int j, int di, int dj, int nmax, int idx) {
        // derivative along (di,dj) axis at position idx in [0, nmax)
        if (idx == 0) return (u(i + di, j + dj) - u(i, j)) / h;
        if (idx == nmax - 1) return (u(i, j) - u(i - di, j - dj)) / h;
        return (u(i + di, j + dj) - u(i - di, j - dj)) / (2.0 * h);
    };
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            int k = g.index(i, j);
            out.g1[k] = d(i, j, 1, 0, g.n, i);
            out.g2[k] = d(i, j, 0, 1, g.n, j);
        }
    return out;
}

/// Deterministic chunked accumulation; summation order is independent of any
/// parallel execution of the producers.
inline double weighted_sum(const Grid& g, const std::function<double(int, int)>& term) {
    double total = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double row = 0.0;
        for (int j = 0; j < g.n; ++j) row += term(i, j);
        total += row;
    }
    return total;
}

/// Profit functional Phi[u] = ∫ (x.Du - u - c(Du)) f dx with trapezoid
/// quadrature and the module's discrete gradient.  Throws if Du leaves the
/// cone Y by more than cfg.cone_tol (cost undefined there).
inline double evaluate_phi(const ScalarField& u, const ModelConfig& cfg) {
    if (!(u.grid == cfg.grid))
        throw std::invalid_argument("evaluate_phi: field grid differs from config grid");
    if (!u.all_finite()) throw std::invalid_argument("evaluate_phi: non-finite field");
    VectorField du = gradient(u);
    const Grid& g = u.grid;
    double worst = 0.0;
    for (int k = 0; k < g.num_nodes(); ++k) {
        worst = std::min(worst, std::min(du.g1[k], du.g2[k]));
    }
    if (worst < -cfg.cone_tol)
        throw std::domain_error("evaluate_phi: gradient leaves the product cone by " +
                                std::to_string(-worst));
    return weighted_sum(g, [&](int i, int j) {
        int k = g.index(i, j);
        double a1 = std::max(du.g1[k], 0.0), a2 = std::max(du.g2[k], 0.0);
        double integrand = g.x1(i) * du.g1[k] + g.x2(j) * du.g2[k] - u.v[k] -
                           cfg.cost.c(a1, a2);
        return trapezoid_weight(g, i, j) * cfg.f(i, j) * integrand;
    });
}

/// Weighted L2 norm of the discrete gradient, ⟨|Du|^2⟩_f^(1/2).
inline double gradient_norm(const ScalarField& u, const ModelConfig& cfg) {
    VectorField du = gradient(u);
    const Grid& g = u.grid;
    double q = weighted_sum(g, [&](int i, int j) {
        int k = g.index(i, j);
        return trapezoid_weight(g, i, j) * cfg.f(i, j) *
               (du.g1[k] * du.g1[k] + du.g2[k] * du.g2[k]);
    });
    return std::sqrt(std::max(q, 0.0));
}

/// Phi_eps[u] = Phi[u] - eps * ⟨|Du|^2⟩_f^(1/2); eps = 0 reduces to Phi.
inline double evaluate_phi_regularized(const ScalarField& u, const ModelConfig& cfg,
                                       double eps) {
    if (eps < 0.0) throw std::invalid_argument("evaluate_phi_regularized: eps < 0");
    double phi = evaluate_phi(u, cfg);
    if (eps == 0.0) return phi;
    return phi - eps * gradient_norm(u, cfg);
}

}  // namespace screendual
