#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "screendual/blunt.hpp"
#include "screendual/constraints.hpp"
#include "screendual/primal.hpp"

using namespace screendual;

TEST_CASE("constraint counts on the 3x3 grid") {
    ModelConfig cfg(0.0, 8);
    cfg.grid = Grid(0.0, 3);  // bypass the n >= 8 solver floor for counting
    ConstraintSet set = assemble_constraints(cfg, 1);
    REQUIRE(set.count_nonneg == 9);
    REQUIRE(set.count_mono == 12);
    // second differences: 3 along x1, 3 along x2, 1 per diagonal direction
    REQUIRE(set.count_convex == 8);
    REQUIRE(set.size() == 29);
}

TEST_CASE("wider stencils are supersets") {
    ModelConfig cfg(0.0, 12);
    auto s1 = assemble_constraints(cfg, 1);
    auto s2 = assemble_constraints(cfg, 2);
    auto s3 = assemble_constraints(cfg, 3);
    REQUIRE(s2.count_convex > s1.count_convex);
    REQUIRE(s3.count_convex > s2.count_convex);
    REQUIRE(s1.count_nonneg == s2.count_nonneg);
    REQUIRE(s1.count_mono == s3.count_mono);
}

TEST_CASE("affine fields meet every convexity constraint with equality") {
    ModelConfig cfg(0.0, 9);
    ConstraintSet set = assemble_constraints(cfg, 2);
    ScalarField u = ScalarField::from_function(
        cfg.grid, [](double x1, double x2) { return 0.3 * x1 + 0.7 * x2 + 0.1; });
    for (const auto& c : set.constraints)
        if (c.kind == ConstraintKind::Convexity)
            REQUIRE(std::abs(c.value(u.v)) < 1e-12);
}

TEST_CASE("concave bump violates axis second differences by h^2") {
    ModelConfig cfg(0.0, 9);
    ConstraintSet set = assemble_constraints(cfg, 1);
    ScalarField u = ScalarField::from_function(
        cfg.grid, [](double x1, double x2) { return -0.5 * (x1 * x1 + x2 * x2); });
    const double h2 = cfg.grid.h() * cfg.grid.h();
    int checked = 0;
    for (const auto& c : set.constraints)
        if (c.kind == ConstraintKind::Convexity && c.nodes[0] - c.nodes[1] == cfg.grid.n) {
            // pure x1-direction second difference of -x^2/2 is exactly -h^2
            REQUIRE(c.value(u.v) == Catch::Approx(-h2).margin(1e-14));
            ++checked;
        }
    REQUIRE(checked > 0);
}

TEST_CASE("cone property of the feasible set") {
    ModelConfig cfg(0.0, 10);
    ConstraintSet set = assemble_constraints(cfg, 2);
    ScalarField u = ScalarField::from_function(cfg.grid, [](double x1, double x2) {
        return 0.4 * (x1 * x1 + x2 * x2) + std::max(0.0, x1 + x2 - 0.9);
    });
    REQUIRE(set.max_violation(u.v) <= 1e-12);
    for (double s : {0.0, 0.5, 2.0}) {
        std::vector<double> su = u.v;
        for (double& x : su) x *= s;
        REQUIRE(set.max_violation(su) <= 1e-12);
    }
}

TEST_CASE("primal solve at n = 32", "[solver]") {
    ModelConfig cfg(0.0, 32);
    PrimalOptions opts;
    auto [u, rep] = solve_primal(cfg, opts);

    INFO("status " << (rep.status == SolveStatus::Converged ? "converged" : "not")
                   << " iters " << rep.iterations << " phi " << rep.phi
                   << " viol " << rep.max_violation);
    REQUIRE(rep.max_violation <= opts.tol_feas);
    REQUIRE(check_admissible(u).admissible());

    // value bracket: positive profit, below the identity-map dual bound
    REQUIRE(rep.phi > 0.0);
    REQUIRE(rep.phi < 1.0 / 3.0);

    // recorded ascent is monotone
    for (size_t k = 1; k < rep.phi_history.size(); ++k)
        REQUIRE(rep.phi_history[k] >= rep.phi_history[k - 1] - 1e-12);

    // optimality is boundary-attained: the minimum is pinned at zero
    REQUIRE(u.min_value() >= 0.0);
    REQUIRE(u.min_value() <= 1e-10);

    // uniqueness forces symmetry
    double asym = 0.0;
    for (int i = 0; i < cfg.grid.n; ++i)
        for (int j = 0; j < cfg.grid.n; ++j)
            asym = std::max(asym, std::abs(u(i, j) - u(j, i)));
    REQUIRE(asym <= 1e-6);

    // the exclusion corner region exists and has positive area
    REQUIRE(u(0, 0) <= 1e-6);
    double zero_area = 0.0;
    for (int i = 0; i < cfg.grid.n; ++i)
        for (int j = 0; j < cfg.grid.n; ++j)
            if (u(i, j) <= 1e-6) zero_area += trapezoid_weight(cfg.grid, i, j);
    REQUIRE(zero_area > 0.2);

    // post-hoc pairwise convexity fidelity stays at discretization scale
    REQUIRE(rep.pairwise_convexity_gap <= 10.0 * cfg.grid.h() * cfg.grid.h());
}

TEST_CASE("deterministic given options", "[solver]") {
    ModelConfig cfg(0.0, 16);
    auto [u1, r1] = solve_primal(cfg);
    auto [u2, r2] = solve_primal(cfg);
    REQUIRE(u1.v == u2.v);
    REQUIRE(r1.phi == r2.phi);
}

TEST_CASE("continuation schedule validation and trivial schedule") {
    ModelConfig cfg(0.0, 16);
    REQUIRE_THROWS_AS(solve_primal_continuation(cfg, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(solve_primal_continuation(cfg, {0.1, 0.2, 0.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(solve_primal_continuation(cfg, {0.1, 0.01}),
                      std::invalid_argument);

    auto [ud, rd] = solve_primal(cfg);
    auto [uc, rc] = solve_primal_continuation(cfg, {0.0});
    REQUIRE(rd.phi == Catch::Approx(rc.phi).margin(1e-12));
}

TEST_CASE("continuation matches the direct solve", "[solver]") {
    ModelConfig cfg(0.0, 32);
    auto [ud, rd] = solve_primal(cfg);
    auto [uc, rc] = solve_primal_continuation(cfg, {0.1, 0.01, 0.0});
    REQUIRE(std::abs(rd.phi - rc.phi) <= 1e-4);
}

TEST_CASE("regularized maxima decrease with eps", "[solver]") {
    ModelConfig cfg(0.0, 24);
    PrimalOptions opts;
    double prev = -1e300;
    for (double eps : {0.1, 0.01, 0.0}) {
        opts.eps = eps;
        auto [u, rep] = solve_primal(cfg, opts);
        double val = evaluate_phi_regularized(u, cfg, eps);
        REQUIRE(val >= prev - 1e-9);
        prev = val;
        opts.init = u;  // warm start the next stage
    }
}
