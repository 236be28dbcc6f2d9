#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "screendual/poisson.hpp"

using namespace screendual;

namespace {

// Manufactured solutions with Laplacian exactly 3: the quadratic core
// (3/4)|x|^2, optionally plus a harmonic quartic that the five-point
// stencil does not resolve exactly (to expose the convergence order).
double harmonic_quartic(double x1, double x2) {
    return x1 * x1 * x1 * x1 - 6.0 * x1 * x1 * x2 * x2 + x2 * x2 * x2 * x2;
}

double ustar(double x1, double x2, double beta = 0.0) {
    return 0.75 * (x1 * x1 + x2 * x2) + beta * harmonic_quartic(x1, x2);
}

PoissonProblem manufactured_problem(double c, double beta = 0.0) {
    PoissonProblem prob;
    prob.inside = [c](double x1, double x2) { return x1 + x2 > c; };
    prob.dirichlet = [beta](double x1, double x2) { return ustar(x1, x2, beta); };
    prob.rhs = 3.0;
    // (Du* - x).n imposed as the inhomogeneous Neumann term
    prob.neumann_rhs = [beta](double x1, double x2, double n1, double n2) {
        double q1 = 4.0 * x1 * x1 * x1 - 12.0 * x1 * x2 * x2;
        double q2 = 4.0 * x2 * x2 * x2 - 12.0 * x1 * x1 * x2;
        return (0.5 * x1 + beta * q1) * n1 + (0.5 * x2 + beta * q2) * n2;
    };
    return prob;
}

double manufactured_error(int n, double c, double beta = 0.0) {
    Grid g(0.0, n);
    PoissonResult res = solve_poisson_mixed(g, manufactured_problem(c, beta));
    REQUIRE(res.laplacian_residual <= 1e-10);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int k = g.index(i, j);
            if (!res.node_inside[k]) continue;
            worst = std::max(worst,
                             std::abs(res.u.v[k] - ustar(g.x1(i), g.x2(j), beta)));
        }
    return worst;
}

}  // namespace

TEST_CASE("pure quadratic manufactured case is resolved to rounding") {
    // the five-point stencil, shortened legs and Neumann ghosts are all
    // exact on quadratics, so the only error left is linear-algebra noise
    REQUIRE(manufactured_error(33, 0.8164965809) < 1e-10);
    REQUIRE(manufactured_error(65, 0.8164965809) < 1e-10);
}

TEST_CASE("manufactured solution converges at second order") {
    double e1 = manufactured_error(33, 0.8164965809, 0.05);
    double e2 = manufactured_error(65, 0.8164965809, 0.05);
    double ratio = e1 / e2;
    INFO("e(33)=" << e1 << " e(65)=" << e2 << " ratio=" << ratio);
    REQUIRE(ratio > 3.5);
    REQUIRE(ratio < 4.5);
}

TEST_CASE("constant shift of Dirichlet data shifts the solution exactly") {
    Grid g(0.0, 33);
    PoissonProblem prob = manufactured_problem(0.9);
    PoissonResult base = solve_poisson_mixed(g, prob);
    const double delta = 0.37;
    prob.dirichlet = [delta](double x1, double x2) { return ustar(x1, x2) + delta; };
    PoissonResult shifted = solve_poisson_mixed(g, prob);
    for (int k = 0; k < g.num_nodes(); ++k) {
        if (!base.node_inside[k]) continue;
        REQUIRE(shifted.u.v[k] - base.u.v[k] == Catch::Approx(delta).margin(1e-9));
    }
}

TEST_CASE("edge Neumann condition is honored by the manufactured case") {
    Grid g(0.0, 65);
    PoissonResult res = solve_poisson_mixed(g, manufactured_problem(0.8164965809));
    // on the right edge, Du.n should equal x1 + (x1/2) . 1 = (3/2) x1
    double worst = 0.0;
    int i = g.n - 1;
    for (int j = 8; j + 8 < g.n; ++j) {
        int k = g.index(i, j);
        if (!res.node_inside[k] || !res.node_inside[g.index(i - 2, j)]) continue;
        double der = (3.0 * res.u.v[k] - 4.0 * res.u.v[g.index(i - 1, j)] +
                      res.u.v[g.index(i - 2, j)]) /
                     (2.0 * g.h());
        worst = std::max(worst, std::abs(der - 1.5 * g.x1(i)));
    }
    REQUIRE(worst <= 5.0 * g.h());
}

TEST_CASE("curved interior boundary keeps second order") {
    // disc-complement domain exercises the shortened legs in both axes
    auto solve_err = [](int n) {
        Grid g(0.0, n);
        PoissonProblem prob;
        prob.inside = [](double x1, double x2) { return x1 * x1 + x2 * x2 > 0.36; };
        prob.dirichlet = [](double x1, double x2) { return ustar(x1, x2, 0.05); };
        prob.rhs = 3.0;
        prob.neumann_rhs = [](double x1, double x2, double n1, double n2) {
            double q1 = 4.0 * x1 * x1 * x1 - 12.0 * x1 * x2 * x2;
            double q2 = 4.0 * x2 * x2 * x2 - 12.0 * x1 * x1 * x2;
            return (0.5 * x1 + 0.05 * q1) * n1 + (0.5 * x2 + 0.05 * q2) * n2;
        };
        PoissonResult res = solve_poisson_mixed(g, prob);
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                int k = g.index(i, j);
                if (!res.node_inside[k]) continue;
                worst = std::max(worst,
                                 std::abs(res.u.v[k] - ustar(g.x1(i), g.x2(j), 0.05)));
            }
        return worst;
    };
    double ratio = solve_err(33) / solve_err(65);
    INFO("curved ratio " << ratio);
    REQUIRE(ratio > 3.0);
    REQUIRE(ratio < 5.5);
}

TEST_CASE("disconnected domains are rejected") {
    Grid g(0.0, 33);
    PoissonProblem prob;
    // two opposite corners, no 4-connected path
    prob.inside = [](double x1, double x2) {
        return (x1 + x2 < 0.25) || (x1 + x2 > 1.75);
    };
    prob.dirichlet = [](double, double) { return 0.0; };
    REQUIRE_THROWS_AS(solve_poisson_mixed(g, prob), NonConnectedDomain);
}

TEST_CASE("empty domain is rejected") {
    Grid g(0.0, 16);
    PoissonProblem prob;
    prob.inside = [](double, double) { return false; };
    prob.dirichlet = [](double, double) { return 0.0; };
    REQUIRE_THROWS_AS(solve_poisson_mixed(g, prob), std::invalid_argument);
}
