#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "screendual/legendre.hpp"

using namespace screendual;

namespace {

RectField brute_conjugate(const RectField& g, const RectGrid& target) {
    RectField out(target);
    for (int i = 0; i < target.n1; ++i)
        for (int j = 0; j < target.n2; ++j) {
            double z1 = target.x1(i), z2 = target.x2(j);
            double best = -1e300;
            for (int si = 0; si < g.grid.n1; ++si)
                for (int sj = 0; sj < g.grid.n2; ++sj)
                    best = std::max(best, z1 * g.grid.x1(si) + z2 * g.grid.x2(sj) -
                                              g(si, sj));
            out(i, j) = best;
        }
    return out;
}

}  // namespace

TEST_CASE("self-dual quadratic at a grid point") {
    Grid g(0.0, 41);
    ScalarField u = ScalarField::from_function(
        g, [](double x1, double x2) { return 0.5 * (x1 * x1 + x2 * x2); });
    RectGrid target = RectGrid::from_box(0.0, 1.0, 0.0, 1.0, 41, 41);
    auto res = legendre_transform(RectField::from_scalar(u), target);
    // z = (0.5, 0.5) is both a target and a source node, so the max is the
    // exact self-dual value (1/2)|z|^2 = 0.25
    REQUIRE(res.value(20, 20) == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("affine source maximizes at the corner") {
    Grid g(0.0, 33);
    ScalarField u = ScalarField::from_function(
        g, [](double x1, double x2) { return 0.3 * (x1 + x2); });
    RectGrid target = RectGrid::from_box(0.0, 1.0, 0.0, 1.0, 3, 3);
    auto res = legendre_transform(RectField::from_scalar(u), target);
    // z = (1, 0): max(z1 - 0.3, 0) + max(z2 - 0.3, 0) = 0.7
    REQUIRE(res.value(2, 0) == Catch::Approx(0.7).margin(1e-14));
}

TEST_CASE("divide and conquer equals the direct double loop") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    RectGrid src = RectGrid::from_box(0.2, 1.4, -0.3, 0.9, 17, 23);
    RectField f(src);
    for (double& x : f.v) x = unif(rng);
    RectGrid target = RectGrid::from_box(-0.5, 2.0, -1.0, 1.5, 19, 13);
    auto fast = legendre_transform(f, target);
    RectField slow = brute_conjugate(f, target);
    // identical maximizers; values agree up to one addition reassociation
    for (int k = 0; k < target.num_nodes(); ++k)
        REQUIRE(fast.value.v[k] == Catch::Approx(slow.v[k]).margin(1e-12));
}

TEST_CASE("conjugate is monotone when the source box has nonnegative corner") {
    Grid g(0.0, 25);
    ScalarField u = ScalarField::from_function(g, [](double x1, double x2) {
        return 0.4 * x1 * x1 + 0.3 * x2 + 0.2 * x1 * x2;
    });
    RectGrid target = RectGrid::from_box(0.0, 2.0, 0.0, 2.0, 21, 21);
    auto res = legendre_transform(RectField::from_scalar(u), target);
    for (int i = 0; i + 1 < 21; ++i)
        for (int j = 0; j < 21; ++j) {
            REQUIRE(res.value(i + 1, j) >= res.value(i, j) - 1e-12);
            REQUIRE(res.value(j, i + 1) >= res.value(j, i) - 1e-12);
        }
}

TEST_CASE("biconjugate returns a convex field up to O(h) on the interior") {
    Grid g(0.0, 33);
    ScalarField u = ScalarField::from_function(g, [](double x1, double x2) {
        return 0.5 * (x1 * x1 + x2 * x2) + 0.3 * std::max(0.0, x1 + x2 - 1.0);
    });
    ScalarField back = biconjugate(u);
    double worst = 0.0;
    for (int i = 1; i + 1 < g.n; ++i)
        for (int j = 1; j + 1 < g.n; ++j)
            worst = std::max(worst, std::abs(back(i, j) - u(i, j)));
    REQUIRE(worst <= 2.0 * g.h());
    // the biconjugate never exceeds the field it envelopes
    for (int k = 0; k < g.num_nodes(); ++k) REQUIRE(back.v[k] <= u.v[k] + 1e-9);
}

TEST_CASE("range truncation is flagged") {
    Grid g(0.0, 21);
    ScalarField u = ScalarField::from_function(
        g, [](double x1, double x2) { return 0.5 * (x1 * x1 + x2 * x2); });
    // gradient range is [0,1]^2; ask far beyond it
    RectGrid target = RectGrid::from_box(0.0, 8.0, 0.0, 8.0, 15, 15);
    auto res = legendre_transform(RectField::from_scalar(u), target);
    REQUIRE(res.boundary_fraction > 0.25);
    REQUIRE(res.range_truncated);
}
