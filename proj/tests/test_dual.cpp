#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "screendual/dual.hpp"
#include "screendual/primal.hpp"

using namespace screendual;

TEST_CASE("dual candidate under quadratic and quartic costs") {
    ModelConfig cfg(0.0, 24);
    ScalarField uq = ScalarField::from_function(
        cfg.grid, [](double x1, double x2) { return 0.5 * (x1 * x1 + x2 * x2); });
    VectorField G = dual_candidate(uq, cfg);
    VectorField du = gradient(uq);
    for (int k = 0; k < cfg.grid.num_nodes(); ++k) {
        REQUIRE(G.g1[k] == du.g1[k]);
        REQUIRE(G.g2[k] == du.g2[k]);
    }

    ScalarField zero(cfg.grid);
    VectorField G0 = dual_candidate(zero, cfg);
    for (int k = 0; k < cfg.grid.num_nodes(); ++k) {
        REQUIRE(G0.g1[k] == 0.0);
        REQUIRE(G0.g2[k] == 0.0);
    }

    ModelConfig cfg4(0.0, 24, CostSpec::quartic());
    VectorField G4 = dual_candidate(uq, cfg4);
    for (int i = 1; i + 1 < cfg.grid.n; ++i)
        for (int j = 1; j + 1 < cfg.grid.n; ++j) {
            int k = cfg.grid.index(i, j);
            double x1 = cfg.grid.x1(i), x2 = cfg.grid.x2(j);
            double r2 = x1 * x1 + x2 * x2;  // Du = x exactly at interior nodes
            REQUIRE(G4.g1[k] == Catch::Approx(4.0 * r2 * x1).margin(1e-12));
            REQUIRE(G4.g2[k] == Catch::Approx(4.0 * r2 * x2).margin(1e-12));
        }
}

TEST_CASE("dual value oracles") {
    ModelConfig cfg(0.0, 32);
    const double h2 = cfg.grid.h() * cfg.grid.h();

    VectorField id(cfg.grid);
    for (int i = 0; i < cfg.grid.n; ++i)
        for (int j = 0; j < cfg.grid.n; ++j) {
            int k = cfg.grid.index(i, j);
            id.g1[k] = cfg.grid.x1(i);
            id.g2[k] = cfg.grid.x2(j);
        }
    REQUIRE(dual_value(id, cfg) == Catch::Approx(1.0 / 3.0).margin(h2));

    VectorField zero(cfg.grid);
    REQUIRE(dual_value(zero, cfg) == 0.0);

    VectorField mixed(cfg.grid);
    for (auto& z : mixed.g1) z = 1.0;
    for (auto& z : mixed.g2) z = -2.0;  // clipped by the cone conjugate
    REQUIRE(dual_value(mixed, cfg) == Catch::Approx(0.5).margin(1e-13));
}

TEST_CASE("membership residual oracles") {
    ModelConfig cfg(0.0, 32);
    const double h2 = cfg.grid.h() * cfg.grid.h();

    VectorField id(cfg.grid);
    for (int i = 0; i < cfg.grid.n; ++i)
        for (int j = 0; j < cfg.grid.n; ++j) {
            int k = cfg.grid.index(i, j);
            id.g1[k] = cfg.grid.x1(i);
            id.g2[k] = cfg.grid.x2(j);
        }
    ScalarField ramp =
        ScalarField::from_function(cfg.grid, [](double x1, double) { return x1; });
    REQUIRE(dual_test_residual(id, ramp, cfg) == Catch::Approx(-0.5).margin(1e-13));

    VectorField zero(cfg.grid);
    ScalarField uq = ScalarField::from_function(
        cfg.grid, [](double x1, double x2) { return 0.5 * (x1 * x1 + x2 * x2); });
    double r = dual_test_residual(zero, uq, cfg);
    REQUIRE(r == Catch::Approx(1.0 / 3.0).margin(2.0 * h2));
    REQUIRE(r > 0.0);  // so the zero field is not dual feasible

    // degree-one homogeneity of the residual functional in the test payoff
    for (double s : {0.25, 3.0}) {
        ScalarField su = uq;
        for (double& x : su.v) x *= s;
        REQUIRE(dual_test_residual(zero, su, cfg) ==
                Catch::Approx(s * r).margin(1e-12));
    }
}

TEST_CASE("eps relaxation only lowers residuals") {
    ModelConfig cfg(0.0, 24);
    TestFamily fam = default_test_family(cfg);
    VectorField id(cfg.grid);
    for (int i = 0; i < cfg.grid.n; ++i)
        for (int j = 0; j < cfg.grid.n; ++j) {
            int k = cfg.grid.index(i, j);
            id.g1[k] = cfg.grid.x1(i);
            id.g2[k] = cfg.grid.x2(j);
        }
    for (int m = 0; m < fam.size(); ++m) {
        double r0 = dual_test_residual(id, fam.members[m], cfg, 0.0);
        double r1 = dual_test_residual(id, fam.members[m], cfg, 0.05);
        REQUIRE(r1 <= r0 + 1e-15);
    }
    REQUIRE(gamma_residual(id, cfg, fam, 0.05) <=
            gamma_residual(id, cfg, fam, 0.0) + 1e-15);
}

TEST_CASE("certify distinguishes value coincidence from optimality") {
    ModelConfig cfg(0.0, 24);
    ScalarField zero(cfg.grid);
    DualCertificate cert = certify(zero, cfg);
    REQUIRE(cert.phi == 0.0);
    REQUIRE(cert.dual_value == 0.0);
    REQUIRE(cert.gap == 0.0);
    REQUIRE(cert.slackness_r1 == 0.0);  // G is built from Du, identically
    REQUIRE(cert.gamma_residual > 0.0); // but the zero candidate is not in the dual set
    REQUIRE_FALSE(cert.certified);
    REQUIRE(cert.test_family_size > 20);
}

TEST_CASE("certificate at the primal optimum", "[solver]") {
    ModelConfig cfg(0.0, 32);
    auto [u, rep] = solve_primal(cfg);
    DualCertificate cert = certify(u, cfg);
    REQUIRE(cert.gap >= -1e-8);
    REQUIRE(std::abs(cert.slackness_r2) <= 1e-8);
    REQUIRE(cert.slackness_r1 == 0.0);
    REQUIRE(cert.gamma_residual <= cert.tol_gamma);
    REQUIRE(cert.certified);
    // weak duality against the identity map bounds the value by <(1/2)|x|^2>
    REQUIRE(cert.phi <= 1.0 / 3.0);
}

TEST_CASE("weak duality ordering on randomized feasible pairs") {
    ModelConfig cfg(0.0, 24);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // random admissible payoffs: positive multiples of hinges
    TestFamily fam;
    for (int t = 0; t < 12; ++t) {
        double p1 = 1.5 * unif(rng), p2 = 1.5 * unif(rng);
        double q = (p1 + p2) * (0.3 + 0.5 * unif(rng));
        double w1 = unif(rng);
        fam.add(ScalarField::from_function(
                    cfg.grid,
                    [=](double x1, double x2) {
                        return w1 * std::max(0.0, p1 * x1 + p2 * x2 - q);
                    }),
                "rand" + std::to_string(t));
    }

    // the identity map is dual feasible for every family: its residual is -<u>
    VectorField id(cfg.grid);
    for (int i = 0; i < cfg.grid.n; ++i)
        for (int j = 0; j < cfg.grid.n; ++j) {
            int k = cfg.grid.index(i, j);
            id.g1[k] = cfg.grid.x1(i);
            id.g2[k] = cfg.grid.x2(j);
        }
    REQUIRE(gamma_residual(id, cfg, fam) <= 0.0);
    double dv = dual_value(id, cfg);
    for (const auto& u : fam.members) REQUIRE(evaluate_phi(u, cfg) <= dv + 1e-8);

    // certified candidates from solved payoffs dominate the family likewise
    auto [ustar, rep] = solve_primal(cfg);
    VectorField G = dual_candidate(ustar, cfg);
    if (gamma_residual(G, cfg, fam) <= 0.0) {
        double dvg = dual_value(G, cfg);
        for (const auto& u : fam.members)
            REQUIRE(evaluate_phi(u, cfg) <= dvg + 1e-8);
    }
}
