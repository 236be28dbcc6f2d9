#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "screendual/blunt.hpp"
#include "screendual/constraints.hpp"
#include "screendual/grid.hpp"
#include "screendual/model.hpp"

namespace screendual {

enum class SolveStatus { Converged, NotConverged };

struct SolveReport {
    SolveStatus status = SolveStatus::NotConverged;
    int iterations = 0;        // engine iterations
    int polish_iterations = 0; // recorded ascent steps after the engine
    double phi = 0.0;
    double max_violation = 0.0;
    double projected_gradient_norm = 0.0;  // rms of the step-scaled update
    double pairwise_convexity_gap = 0.0;   // post-hoc midpoint convexity sample
    std::vector<double> step_history;
    std::vector<double> phi_history;
    double wall_time_ms = 0.0;
};

struct PrimalOptions {
    int max_iter = 60;         // interior-point iteration cap (quadratic path)
    int mfista_max_iter = 4000; // accelerated-ascent cap (non-quadratic path)
    int polish_max_iter = 120;  // recorded ascent cap
    double tol_feas = 1e-8;
    double tol_stat = 1e-7;    // rms projected-gradient norm
    int w_stencil = 2;
    int pocs_max_sweeps = 200;
    double pocs_relaxation = 1.7;
    double eps = 0.0;   // gradient-norm regularization weight
    uint64_t seed = 0;  // used only for the post-hoc pairwise convexity sample
    std::optional<ScalarField> init;
    bool record_history = true;
};

namespace detail {

/// Discrete gradient and its adjoint as flat linear operators, matching
/// gradient() in model.hpp stencil for stencil.
struct GradientOperator {
    Grid g;
    explicit GradientOperator(const Grid& grid) : g(grid) {}

    void apply(const std::vector<double>& u, std::vector<double>& g1,
               std::vector<double>& g2) const {
        const int n = g.n;
        const double invh = 1.0 / g.h(), inv2h = 0.5 * invh;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                int k = g.index(i, j);
                if (i == 0)
                    g1[k] = (u[g.index(1, j)] - u[k]) * invh;
                else if (i == n - 1)
                    g1[k] = (u[k] - u[g.index(n - 2, j)]) * invh;
                else
                    g1[k] = (u[g.index(i + 1, j)] - u[g.index(i - 1, j)]) * inv2h;
                if (j == 0)
                    g2[k] = (u[g.index(i, 1)] - u[k]) * invh;
                else if (j == n - 1)
                    g2[k] = (u[k] - u[g.index(i, n - 2)]) * invh;
                else
                    g2[k] = (u[g.index(i, j + 1)] - u[g.index(i, j - 1)]) * inv2h;
            }
    }

    /// out += A1^T v1 + A2^T v2
    void apply_adjoint(const std::vector<double>& v1, const std::vector<double>& v2,
                       std::vector<double>& out) const {
        const int n = g.n;
        const double invh = 1.0 / g.h(), inv2h = 0.5 * invh;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                int k = g.index(i, j);
                double a = v1[k];
                if (i == 0) {
                    out[k] += -a * invh;
                    out[g.index(1, j)] += a * invh;
                } else if (i == n - 1) {
                    out[k] += a * invh;
                    out[g.index(n - 2, j)] += -a * invh;
                } else {
                    out[g.index(i + 1, j)] += a * inv2h;
                    out[g.index(i - 1, j)] += -a * inv2h;
                }
                double b = v2[k];
                if (j == 0) {
                    out[k] += -b * invh;
                    out[g.index(i, 1)] += b * invh;
                } else if (j == n - 1) {
                    out[k] += b * invh;
                    out[g.index(i, n - 2)] += -b * invh;
                } else {
                    out[g.index(i, j + 1)] += b * inv2h;
                    out[g.index(i, j - 1)] += -b * inv2h;
                }
            }
    }
};

/// Relaxed cyclic projection onto the half-space intersection.  Sweeps in
/// the deterministic constraint order until the largest violation is at or
/// below tol; the iteration count is capped.
inline double pocs_project(std::vector<double>& u, const ConstraintSet& set, double tol,
                           double omega, int max_sweeps) {
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (const auto& c : set.constraints) {
            double v;
            switch (c.arity) {
                case 1:
                    v = u[c.nodes[0]];
                    if (v < 0.0) {
                        u[c.nodes[0]] = 0.0;  // exact projection for bounds
                        worst = std::max(worst, -v);
                    }
                    break;
                case 2:
                    v = u[c.nodes[0]] - u[c.nodes[1]];
                    if (v < 0.0) {
                        double corr = -v * omega * 0.5;
                        u[c.nodes[0]] += corr;
                        u[c.nodes[1]] -= corr;
                        worst = std::max(worst, -v);
                    }
                    break;
                default:
                    v = u[c.nodes[0]] - 2.0 * u[c.nodes[1]] + u[c.nodes[2]];
                    if (v < 0.0) {
                        double corr = -v * omega / 6.0;
                        u[c.nodes[0]] += corr;
                        u[c.nodes[1]] -= 2.0 * corr;
                        u[c.nodes[2]] += corr;
                        worst = std::max(worst, -v);
                    }
                    break;
            }
        }
        if (worst <= tol) break;
    }
    return set.max_violation(u);
}

/// Shared solver state: discrete operators, quadrature weights, objective
/// and gradient evaluation.
struct PrimalWork {
    const ModelConfig& cfg;
    ConstraintSet cons;
    GradientOperator A;
    std::vector<double> w, xf1, xf2;
    mutable std::vector<double> g1, g2, t1, t2;
    double eps;

    PrimalWork(const ModelConfig& c, int w_stencil, double eps_)
        : cfg(c), cons(assemble_constraints(c, w_stencil)), A(c.grid), eps(eps_) {
        const Grid& g = c.grid;
        size_t N = static_cast<size_t>(g.num_nodes());
        w.resize(N);
        xf1.resize(N);
        xf2.resize(N);
        g1.resize(N);
        g2.resize(N);
        t1.resize(N);
        t2.resize(N);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                int k = g.index(i, j);
                w[k] = trapezoid_weight(g, i, j) * c.f(i, j);
                xf1[k] = g.x1(i);
                xf2[k] = g.x2(j);
            }
    }

    double phi(const std::vector<double>& u) const {
        A.apply(u, g1, g2);
        const Grid& g = cfg.grid;
        double phi = 0.0, q = 0.0;
        for (int i = 0; i < g.n; ++i) {
            double row_p = 0.0, row_q = 0.0;
            for (int j = 0; j < g.n; ++j) {
                int k = g.index(i, j);
                double a1 = std::max(g1[k], 0.0), a2 = std::max(g2[k], 0.0);
                row_p += w[k] *
                         (xf1[k] * g1[k] + xf2[k] * g2[k] - u[k] - cfg.cost.c(a1, a2));
                row_q += w[k] * (g1[k] * g1[k] + g2[k] * g2[k]);
            }
            phi += row_p;
            q += row_q;
        }
        if (eps > 0.0) phi -= eps * std::sqrt(std::max(q, 0.0));
        return phi;
    }

    // grad = A^T (w .* (x - Dc(Du))) - w  [- eps * A^T(w .* Du)/||Du||]
    void grad(const std::vector<double>& u, std::vector<double>& out) const {
        A.apply(u, g1, g2);
        double q = 0.0;
        for (size_t k = 0; k < w.size(); ++k)
            q += w[k] * (g1[k] * g1[k] + g2[k] * g2[k]);
        double eps_scale = (eps > 0.0 && q > 1e-30) ? eps / std::sqrt(q) : 0.0;
        for (size_t k = 0; k < w.size(); ++k) {
            double d1, d2;
            cfg.cost.dc(std::max(g1[k], 0.0), std::max(g2[k], 0.0), d1, d2);
            t1[k] = w[k] * (xf1[k] - d1 - eps_scale * g1[k]);
            t2[k] = w[k] * (xf2[k] - d2 - eps_scale * g2[k]);
        }
        std::fill(out.begin(), out.end(), 0.0);
        A.apply_adjoint(t1, t2, out);
        for (size_t k = 0; k < w.size(); ++k) out[k] -= w[k];
    }

    double lipschitz(double curvature_cap) const {
        std::vector<double> v(w.size()), Av(w.size());
        for (size_t k = 0; k < v.size(); ++k)
            v[k] = std::sin(0.7 * static_cast<double>(k % 97)) + 1.5;
        double lam = 1.0;
        for (int it = 0; it < 30; ++it) {
            A.apply(v, g1, g2);
            for (size_t k = 0; k < w.size(); ++k) {
                t1[k] = w[k] * g1[k];
                t2[k] = w[k] * g2[k];
            }
            std::fill(Av.begin(), Av.end(), 0.0);
            A.apply_adjoint(t1, t2, Av);
            double norm = 0.0;
            for (double x : Av) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-30) break;
            lam = norm;
            for (size_t k = 0; k < v.size(); ++k) v[k] = Av[k] / norm;
        }
        return std::max(lam * curvature_cap, 1e-12);
    }
};

/// Primal-dual interior-point engine (Mehrotra predictor-corrector) for the
/// quadratic objective:  min 1/2 u'Qu - l'u  s.t.  Cu >= 0.  One symbolic
/// analysis of the reduced system Q + C'DC serves every iteration, and the
/// iterates reach complementarity ~1e-12, which cyclic projections cannot
/// on the long chains of binding convexity constraints.
struct EngineResult {
    int iterations = 0;
    bool converged = false;
};

inline EngineResult ipm_engine(const PrimalWork& work, const PrimalOptions& opts,
                               std::vector<double>& u) {
    const int N = static_cast<int>(u.size());
    const int M = work.cons.size();

    using SpMat = Eigen::SparseMatrix<double>;
    using Trip = Eigen::Triplet<double>;

    std::vector<Trip> ctrips;
    ctrips.reserve(static_cast<size_t>(M) * 3);
    for (int r = 0; r < M; ++r) {
        const auto& c = work.cons.constraints[r];
        for (int t = 0; t < c.arity; ++t) ctrips.emplace_back(r, c.nodes[t], c.coeff[t]);
    }
    SpMat C(M, N);
    C.setFromTriplets(ctrips.begin(), ctrips.end());
    C.makeCompressed();
    SpMat Ct = C.transpose();

    SpMat Q(N, N);
    {
        std::vector<Trip> atr;
        const Grid& g = work.cfg.grid;
        const double invh = 1.0 / g.h(), inv2h = 0.5 * invh;
        int n = g.n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                int k = g.index(i, j);
                if (i == 0) {
                    atr.emplace_back(k, g.index(1, j), invh);
                    atr.emplace_back(k, k, -invh);
                } else if (i == n - 1) {
                    atr.emplace_back(k, k, invh);
                    atr.emplace_back(k, g.index(n - 2, j), -invh);
                } else {
                    atr.emplace_back(k, g.index(i + 1, j), inv2h);
                    atr.emplace_back(k, g.index(i - 1, j), -inv2h);
                }
                if (j == 0) {
                    atr.emplace_back(N + k, g.index(i, 1), invh);
                    atr.emplace_back(N + k, k, -invh);
                } else if (j == n - 1) {
                    atr.emplace_back(N + k, k, invh);
                    atr.emplace_back(N + k, g.index(i, n - 2), -invh);
                } else {
                    atr.emplace_back(N + k, g.index(i, j + 1), inv2h);
                    atr.emplace_back(N + k, g.index(i, j - 1), -inv2h);
                }
            }
        SpMat Aop(2 * N, N);
        Aop.setFromTriplets(atr.begin(), atr.end());
        Eigen::VectorXd wdiag(2 * N);
        for (int k = 0; k < N; ++k) wdiag(k) = wdiag(N + k) = work.w[k];
        Q = SpMat(Aop.transpose()) * wdiag.asDiagonal() * Aop;
    }

    Eigen::VectorXd ell(N);
    {
        std::vector<double> zero(static_cast<size_t>(N), 0.0), gr(zero);
        work.grad(zero, gr);
        for (int k = 0; k < N; ++k) ell(k) = gr[k];
    }

    Eigen::SimplicialLDLT<SpMat> ldlt;
    {
        SpMat pattern = Q + SpMat(Ct * C);
        for (int k = 0; k < N; ++k) pattern.coeffRef(k, k) += 1.0;
        pattern.makeCompressed();
        ldlt.analyzePattern(pattern);
    }

    Eigen::VectorXd uu = Eigen::Map<Eigen::VectorXd>(u.data(), N);
    Eigen::VectorXd s = (C * uu).cwiseMax(0.0).array() + 0.05;
    Eigen::VectorXd lam = Eigen::VectorXd::Constant(M, 0.05);
    const double diag_reg = 1e-11;
    const double tol_mu = 1e-12, tol_res = 1e-11;

    EngineResult res;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        Eigen::VectorXd rd = Q * uu - ell - Ct * lam;
        Eigen::VectorXd rp = s - C * uu;
        double mu = s.dot(lam) / M;
        if (mu < tol_mu && rp.cwiseAbs().maxCoeff() < tol_res &&
            rd.cwiseAbs().maxCoeff() < 1e-10) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd d = (lam.array() / s.array()).matrix();
        SpMat K = Q + SpMat(Ct * d.asDiagonal() * C);
        for (int k = 0; k < N; ++k) K.coeffRef(k, k) += diag_reg;
        K.makeCompressed();
        ldlt.factorize(K);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("solve_primal: interior-point factorization failed");

        auto solve_direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& du,
                                   Eigen::VectorXd& ds, Eigen::VectorXd& dlam) {
            // rc is the target of the complementarity equation s.lam + ... = 0
            Eigen::VectorXd rhs =
                -rd + Ct * ((-rc.array() / s.array()) + d.array() * rp.array()).matrix();
            du = ldlt.solve(rhs);
            ds = C * du - rp;
            dlam = ((-rc.array() - lam.array() * ds.array()) / s.array()).matrix();
        };
        auto step_to_boundary = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
            double a = 1.0;
            for (int k = 0; k < v.size(); ++k)
                if (dv(k) < 0.0) a = std::min(a, -v(k) / dv(k));
            return a;
        };

        // predictor
        Eigen::VectorXd rc_aff = (s.array() * lam.array()).matrix();
        Eigen::VectorXd du, ds, dlam;
        solve_direction(rc_aff, du, ds, dlam);
        double ap = step_to_boundary(s, ds), ad = step_to_boundary(lam, dlam);
        double mu_aff =
            ((s + ap * ds).dot(lam + ad * dlam)) / M;
        double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
        sigma = std::clamp(sigma, 1e-8, 0.9);

        // corrector
        Eigen::VectorXd rc = (s.array() * lam.array() + ds.array() * dlam.array() -
                              sigma * mu)
                                 .matrix();
        solve_direction(rc, du, ds, dlam);
        ap = 0.995 * step_to_boundary(s, ds);
        ad = 0.995 * step_to_boundary(lam, dlam);
        uu += ap * du;
        s += ap * ds;
        lam += ad * dlam;
    }
    for (int k = 0; k < N; ++k) u[k] = uu(k);
    res.iterations = it;
    return res;
}

/// Monotone accelerated projected ascent (gradient step on the concave
/// objective, cyclic-projection feasibility restoration, restart on
/// non-improvement).  Used as the engine for the non-quadratic paths.
inline EngineResult mfista_engine(const PrimalWork& work, const PrimalOptions& opts,
                                  std::vector<double>& u) {
    const int N = static_cast<int>(u.size());
    double curvature_cap = work.cfg.cost.name == "quadratic" ? 1.0 : 64.0;
    double step = 1.0 / work.lipschitz(curvature_cap);
    pocs_project(u, work.cons, opts.tol_feas, opts.pocs_relaxation,
                 opts.pocs_max_sweeps);
    double phi_u = work.phi(u);
    std::vector<double> y = u, u_prev = u, grad(u.size()), cand(u.size());
    double t_mom = 1.0;
    EngineResult res;
    int it = 0;
    for (; it < opts.mfista_max_iter; ++it) {
        work.grad(y, grad);
        cand = y;
        for (size_t k = 0; k < cand.size(); ++k) cand[k] += step * grad[k];
        pocs_project(cand, work.cons, 0.5 * opts.tol_feas, opts.pocs_relaxation,
                     opts.pocs_max_sweeps);
        double phi_cand = work.phi(cand);
        if (phi_cand + 1e-14 < phi_u) {
            if (t_mom > 1.0) {
                t_mom = 1.0;  // drop momentum and retry from the incumbent
                y = u;
                continue;
            }
            step *= 0.5;
            if (step * work.lipschitz(curvature_cap) < 1e-6) break;
            y = u;
            continue;
        }
        double rms = 0.0;
        for (size_t k = 0; k < cand.size(); ++k) {
            double d = (cand[k] - u[k]) / step;
            rms += d * d;
        }
        rms = std::sqrt(rms / N);
        u_prev.swap(u);
        u = cand;
        phi_u = phi_cand;
        if (rms <= opts.tol_stat) {
            ++it;
            res.converged = true;
            break;
        }
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        double beta = (t_mom - 1.0) / t_next;
        for (size_t k = 0; k < y.size(); ++k)
            y[k] = u[k] + beta * (u[k] - u_prev[k]);
        t_mom = t_next;
    }
    res.iterations = it;
    return res;
}

}  // namespace detail

/// Seed iterate: a hinge-squared ramp vanishing on the expected exclusion
/// triangle.  Feasible for every stencil width.
inline ScalarField primal_initial_guess(const ModelConfig& cfg) {
    const double lower = cfg.grid.a + exclusion_boundary(cfg.grid.a);
    return ScalarField::from_function(cfg.grid, [&](double x1, double x2) {
        double s = std::max(0.0, x1 + x2 - lower);
        return 0.25 * s * s;
    });
}

/// Maximizes Phi (optionally Phi_eps) over the discrete admissible cone.
/// Quadratic cost runs the ADMM engine against the assembled constraint
/// set; other objectives use monotone accelerated projected ascent.  Both
/// finish with a recorded ascent phase (gradient step + cyclic projection,
/// backtracked so recorded Phi never decreases) and an exact polish along
/// the cone's own directions: drop the minimum, rescale the ray.
inline std::pair<ScalarField, SolveReport> solve_primal(const ModelConfig& cfg,
                                                        const PrimalOptions& opts = {}) {
    auto t0 = std::chrono::steady_clock::now();
    const Grid& g = cfg.grid;
    const int N = g.num_nodes();
    detail::PrimalWork work(cfg, opts.w_stencil, opts.eps);

    std::vector<double> u = (opts.init ? opts.init->v : primal_initial_guess(cfg).v);
    if (static_cast<int>(u.size()) != N)
        throw std::invalid_argument("solve_primal: init field has wrong grid");

    SolveReport rep;
    const bool quadratic_path = cfg.cost.name == "quadratic" && opts.eps == 0.0;
    detail::EngineResult engine = quadratic_path ? detail::ipm_engine(work, opts, u)
                                                 : detail::mfista_engine(work, opts, u);
    rep.iterations = engine.iterations;

    // Recorded ascent: plain projected-gradient steps from the engine output,
    // kept monotone by backtracking.  Doubles as feasibility cleanup.
    detail::pocs_project(u, work.cons, 0.25 * opts.tol_feas, opts.pocs_relaxation,
                         opts.pocs_max_sweeps);
    double step = 1.0 / work.lipschitz(cfg.cost.name == "quadratic" ? 1.0 : 64.0);
    double phi_u = work.phi(u);
    if (opts.record_history) rep.phi_history.push_back(phi_u);
    double last_rms = std::numeric_limits<double>::infinity();
    std::vector<double> cand(u.size()), grad(u.size());
    int polish_it = 0;
    for (; polish_it < opts.polish_max_iter; ++polish_it) {
        work.grad(u, grad);
        cand = u;
        for (size_t k = 0; k < cand.size(); ++k) cand[k] += step * grad[k];
        double cand_viol =
            detail::pocs_project(cand, work.cons, 0.25 * opts.tol_feas,
                                 opts.pocs_relaxation, opts.pocs_max_sweeps);
        double phi_cand = work.phi(cand);
        // accept only feasible candidates that do not lose objective
        if (cand_viol > opts.tol_feas || phi_cand + 1e-13 < phi_u) {
            step *= 0.5;
            if (step < 1e-12) break;
            continue;
        }
        double rms = 0.0;
        for (size_t k = 0; k < cand.size(); ++k) {
            double d = (cand[k] - u[k]) / step;
            rms += d * d;
        }
        last_rms = std::sqrt(rms / N);
        u.swap(cand);
        phi_u = phi_cand;
        if (opts.record_history) {
            rep.phi_history.push_back(phi_u);
            rep.step_history.push_back(step);
        }
        if (last_rms <= opts.tol_stat) {
            ++polish_it;
            break;
        }
    }

    // Exact cone-direction polish: drop the minimum, then rescale so the
    // radial optimality condition holds to rounding (quadratic objective).
    double umin = *std::min_element(u.begin(), u.end());
    if (umin > 0.0)
        for (double& x : u) x -= umin;
    if (quadratic_path) {
        work.A.apply(u, work.g1, work.g2);
        double lin = 0.0, quad = 0.0;
        for (size_t k = 0; k < work.w.size(); ++k) {
            lin += work.w[k] *
                   (work.xf1[k] * work.g1[k] + work.xf2[k] * work.g2[k] - u[k]);
            quad += work.w[k] * 0.5 *
                    (work.g1[k] * work.g1[k] + work.g2[k] * work.g2[k]);
        }
        if (quad > 1e-30) {
            double s = lin / (2.0 * quad);
            if (s > 0.0 && std::isfinite(s)) {
                double phi_scaled = s * lin - s * s * quad;
                if (phi_scaled >= phi_u - 1e-15) {
                    for (double& x : u) x *= s;
                    phi_u = phi_scaled;
                }
            }
        }
    }

    rep.polish_iterations = polish_it;
    rep.phi = work.phi(u);
    rep.max_violation = work.cons.max_violation(u);
    rep.projected_gradient_norm = last_rms;
    rep.status = (rep.max_violation <= opts.tol_feas &&
                  (last_rms <= opts.tol_stat || engine.converged))
                     ? SolveStatus::Converged
                     : SolveStatus::NotConverged;

    // Post-hoc fidelity sample of the pairwise midpoint convexity condition,
    // which the stencil set only approximates.
    {
        std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ull);
        std::uniform_int_distribution<int> pick(0, g.n - 1);
        double worst = 0.0;
        for (int s = 0; s < 2000; ++s) {
            int i1 = pick(rng), j1 = pick(rng), i2 = pick(rng), j2 = pick(rng);
            if (((i1 + i2) | (j1 + j2)) & 1) continue;
            int im = (i1 + i2) / 2, jm = (j1 + j2) / 2;
            double viol =
                2.0 * u[g.index(im, jm)] - u[g.index(i1, j1)] - u[g.index(i2, j2)];
            worst = std::max(worst, viol);
        }
        rep.pairwise_convexity_gap = worst;
    }

    rep.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    ScalarField out(g);
    out.v = std::move(u);
    return {std::move(out), std::move(rep)};
}

/// Warm-started sweep of solves of Phi_eps down a decreasing eps schedule
/// ending at zero.  The final stage output is returned.
inline std::pair<ScalarField, SolveReport> solve_primal_continuation(
    const ModelConfig& cfg, const std::vector<double>& eps_schedule,
    const PrimalOptions& opts = {}) {
    if (eps_schedule.empty())
        throw std::invalid_argument("solve_primal_continuation: empty schedule");
    for (size_t s = 1; s < eps_schedule.size(); ++s)
        if (!(eps_schedule[s] < eps_schedule[s - 1]))
            throw std::invalid_argument(
                "solve_primal_continuation: schedule must strictly decrease");
    if (eps_schedule.back() != 0.0)
        throw std::invalid_argument("solve_primal_continuation: schedule must end at 0");

    PrimalOptions stage = opts;
    std::pair<ScalarField, SolveReport> result;
    for (size_t s = 0; s < eps_schedule.size(); ++s) {
        stage.eps = eps_schedule[s];
        result = solve_primal(cfg, stage);
        stage.init = result.first;
    }
    return result;
}

}  // namespace screendual
