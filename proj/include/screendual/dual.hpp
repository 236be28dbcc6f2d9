#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "screendual/grid.hpp"
#include "screendual/model.hpp"

namespace screendual {

/// Dual feasibility and optimality evidence for a payoff/candidate pair.
/// Membership of G in the dual constraint set is checked against a finite
/// family of admissible test payoffs, so the certificate is sampled, not a
/// proof; the family size and worst violator are reported.
struct DualCertificate {
    VectorField G;
    double dual_value = 0.0;
    double phi = 0.0;
    double gap = 0.0;              // dual_value - phi
    double gamma_residual = 0.0;   // max residual over the test family
    std::string worst_violator;
    double slackness_r1 = 0.0;     // L2_f distance between G and Dc(Du)
    double slackness_r2 = 0.0;     // ∫ (x.Du - u - G.Du) f dx
    int test_family_size = 0;
    bool certified = false;        // gamma_residual <= tol_gamma
    double tol_gamma = 1e-6;
};

/// G = Dc ∘ Du nodewise; for quadratic cost this is Du itself.
inline VectorField dual_candidate(const ScalarField& u, const ModelConfig& cfg) {
    VectorField du = gradient(u);
    VectorField G(u.grid);
    for (int k = 0; k < u.grid.num_nodes(); ++k) {
        cfg.cost.dc(std::max(du.g1[k], 0.0), std::max(du.g2[k], 0.0), G.g1[k], G.g2[k]);
    }
    return G;
}

/// ⟨c* ∘ G⟩_f with the shared trapezoid quadrature.
inline double dual_value(const VectorField& G, const ModelConfig& cfg) {
    if (!G.all_finite()) throw std::invalid_argument("dual_value: non-finite G");
    const Grid& g = G.grid;
    return weighted_sum(g, [&](int i, int j) {
        int k = g.index(i, j);
        return trapezoid_weight(g, i, j) * cfg.f(i, j) * cfg.cost.cstar(G.g1[k], G.g2[k]);
    });
}

/// Residual functional ∫ (x.Du - u - G.Du) f dx - eps ⟨|Du|^2⟩^(1/2) of one
/// test payoff; nonpositive for every admissible u iff G lies in the
/// (eps-relaxed) dual constraint set.
inline double dual_test_residual(const VectorField& G, const ScalarField& u,
                                 const ModelConfig& cfg, double eps = 0.0) {
    VectorField du = gradient(u);
    const Grid& g = u.grid;
    double r = weighted_sum(g, [&](int i, int j) {
        int k = g.index(i, j);
        double integrand = g.x1(i) * du.g1[k] + g.x2(j) * du.g2[k] - u.v[k] -
                           G.g1[k] * du.g1[k] - G.g2[k] * du.g2[k];
        return trapezoid_weight(g, i, j) * cfg.f(i, j) * integrand;
    });
    if (eps > 0.0) r -= eps * gradient_norm(u, cfg);
    return r;
}

struct TestFamily {
    std::vector<ScalarField> members;
    std::vector<std::string> names;

    void add(ScalarField u, std::string name) {
        members.push_back(std::move(u));
        names.push_back(std::move(name));
    }
    int size() const { return static_cast<int>(members.size()); }
};

/// Default certificate family: the candidate payoff and its nonnegative
/// scalings, hinge payoffs max(0, p.x - q) over a slope lattice, and the
/// coordinate ramps.  All members are admissible by construction.
inline TestFamily default_test_family(const ModelConfig& cfg,
                                      const ScalarField* candidate = nullptr,
                                      int lattice = 4) {
    TestFamily fam;
    const Grid& g = cfg.grid;
    if (candidate) {
        fam.add(*candidate, "candidate");
        for (double s : {0.5, 2.0}) {
            ScalarField su = *candidate;
            for (double& x : su.v) x *= s;
            fam.add(std::move(su), "candidate*" + std::to_string(s));
        }
    }
    fam.add(ScalarField::from_function(g, [&](double x1, double) { return x1 - g.a; }),
            "ramp_x1");
    fam.add(ScalarField::from_function(g, [&](double, double x2) { return x2 - g.a; }),
            "ramp_x2");
    fam.add(ScalarField::from_function(
                g, [&](double x1, double x2) { return x1 + x2 - 2.0 * g.a; }),
            "ramp_diag");
    const double pmax = 2.0 * (g.a + 1.0);
    for (int pi = 0; pi <= lattice; ++pi)
        for (int pj = 0; pj <= lattice; ++pj) {
            if (pi == 0 && pj == 0) continue;
            double p1 = pmax * pi / lattice, p2 = pmax * pj / lattice;
            for (double frac : {0.25, 0.5, 0.75}) {
                double q = p1 * (g.a + frac) + p2 * (g.a + frac);
                fam.add(ScalarField::from_function(g,
                                                   [&](double x1, double x2) {
                                                       return std::max(
                                                           0.0, p1 * x1 + p2 * x2 - q);
                                                   }),
                        "hinge_p(" + std::to_string(p1) + "," + std::to_string(p2) +
                            ")_q" + std::to_string(q));
            }
        }
    return fam;
}

/// Max residual of G over the family (eps-relaxed).  A value <= tol only
/// certifies membership relative to the family.
inline double gamma_residual(const VectorField& G, const ModelConfig& cfg,
                             const TestFamily& family, double eps = 0.0,
                             std::string* worst_name = nullptr) {
    double worst = -std::numeric_limits<double>::infinity();
    int worst_idx = -1;
    for (int m = 0; m < family.size(); ++m) {
        double r = dual_test_residual(G, family.members[m], cfg, eps);
        if (r > worst) {
            worst = r;
            worst_idx = m;
        }
    }
    if (worst_name && worst_idx >= 0) *worst_name = family.names[worst_idx];
    return worst;
}

struct CertifyOptions {
    double tol_gamma = 1e-6;
    double eps = 0.0;
    int lattice = 4;
};

/// Builds the complementary-slackness certificate for u: the candidate
/// G = Dc(Du), the dual value, the duality gap, the two slackness residuals
/// and the sampled dual-cone membership residual.
inline DualCertificate certify(const ScalarField& u, const ModelConfig& cfg,
                               const CertifyOptions& opts = {}) {
    DualCertificate cert;
    cert.G = dual_candidate(u, cfg);
    cert.phi = evaluate_phi(u, cfg);
    cert.dual_value = dual_value(cert.G, cfg);
    cert.gap = cert.dual_value - cert.phi;
    cert.slackness_r2 = dual_test_residual(cert.G, u, cfg, 0.0);

    VectorField du = gradient(u);
    const Grid& g = u.grid;
    double r1 = weighted_sum(g, [&](int i, int j) {
        int k = g.index(i, j);
        double d1, d2;
        cfg.cost.dc(std::max(du.g1[k], 0.0), std::max(du.g2[k], 0.0), d1, d2);
        double e1 = cert.G.g1[k] - d1, e2 = cert.G.g2[k] - d2;
        return trapezoid_weight(g, i, j) * cfg.f(i, j) * (e1 * e1 + e2 * e2);
    });
    cert.slackness_r1 = std::sqrt(std::max(r1, 0.0));

    TestFamily fam = default_test_family(cfg, &u, opts.lattice);
    cert.test_family_size = fam.size();
    cert.gamma_residual =
        gamma_residual(cert.G, cfg, fam, opts.eps, &cert.worst_violator);
    cert.tol_gamma = opts.tol_gamma;
    cert.certified = cert.gamma_residual <= opts.tol_gamma;
    return cert;
}

}  // namespace screendual
