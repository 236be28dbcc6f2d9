#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "screendual/grid.hpp"

namespace screendual {

struct NonConnectedDomain : std::runtime_error {
    NonConnectedDomain() : std::runtime_error("poisson: domain is not connected") {}
};

struct SolverBreakdown : std::runtime_error {
    explicit SolverBreakdown(const std::string& what)
        : std::runtime_error("poisson: " + what) {}
};

/// Mixed problem on an implicitly described subdomain of the square:
///   Laplace u = rhs                     inside the domain,
///   (Du - x).n = neumann_rhs            on the parts of the square edge
///                                       inside the domain,
///   u = dirichlet                       on the interior free boundary.
/// `inside` must be evaluable at arbitrary points of the square so edge
/// crossings can be located by bisection; `dirichlet` is evaluated at the
/// crossing points themselves.
struct PoissonProblem {
    std::function<bool(double, double)> inside;
    std::function<double(double, double)> dirichlet;
    double rhs = 3.0;
    std::function<double(double, double, double, double)> neumann_rhs;  // (x1,x2,n1,n2)
};

struct PoissonResult {
    ScalarField u;                 // values on domain nodes; NaN outside
    std::vector<char> node_inside; // 1 for solved nodes
    double laplacian_residual = 0.0;  // max |A u - b| after the linear solve
};

namespace detail {

inline double bisect_crossing(const std::function<bool(double, double)>& inside,
                              double x1a, double x2a, double x1b, double x2b) {
    // point a inside, point b outside; returns fraction along a->b of the wall
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 50; ++it) {
        double mid = 0.5 * (lo + hi);
        if (inside(x1a + mid * (x1b - x1a), x2a + mid * (x2b - x2a)))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Second-order finite differences with one-leg shortening at the irregular
/// interior boundary (ghost values eliminated through the edge Neumann
/// condition).  The assembled system is solved by sparse LU.
inline PoissonResult solve_poisson_mixed(const Grid& g, const PoissonProblem& prob) {
    const int n = g.n;
    const double h = g.h();
    const int N = n * n;

    std::vector<char> inside_node(static_cast<size_t>(N), 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            inside_node[g.index(i, j)] = prob.inside(g.x1(i), g.x2(j)) ? 1 : 0;

    std::vector<int> id(static_cast<size_t>(N), -1);
    std::vector<int> nodes;
    for (int k = 0; k < N; ++k)
        if (inside_node[k]) {
            id[k] = static_cast<int>(nodes.size());
            nodes.push_back(k);
        }
    const int M = static_cast<int>(nodes.size());
    if (M == 0) throw std::invalid_argument("poisson: empty domain");

    // connectivity check (4-neighbor flood fill)
    {
        std::vector<char> seen(static_cast<size_t>(N), 0);
        std::vector<int> stack{nodes[0]};
        seen[nodes[0]] = 1;
        int count = 0;
        while (!stack.empty()) {
            int k = stack.back();
            stack.pop_back();
            ++count;
            int i = k / n, j = k % n;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int t = 0; t < 4; ++t) {
                int ii = i + di[t], jj = j + dj[t];
                if (ii < 0 || ii >= n || jj < 0 || jj >= n) continue;
                int kk = g.index(ii, jj);
                if (inside_node[kk] && !seen[kk]) {
                    seen[kk] = 1;
                    stack.push_back(kk);
                }
            }
        }
        if (count != M) throw NonConnectedDomain();
    }

    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(static_cast<size_t>(M) * 5);
    Eigen::VectorXd rhs(M);

    auto neumann = [&](double x1, double x2, double n1, double n2) {
        double q = prob.neumann_rhs ? prob.neumann_rhs(x1, x2, n1, n2) : 0.0;
        return x1 * n1 + x2 * n2 + q;  // (Du).n value implied by (Du - x).n = q
    };

    for (int r = 0; r < M; ++r) {
        int k = nodes[r];
        int i = k / n, j = k % n;
        double b = prob.rhs;
        double diag = 0.0;

        // one axis at a time; each contributes the 1D second difference with
        // leg shortening at the free boundary and ghost elimination at the
        // square edge
        for (int axis = 0; axis < 2; ++axis) {
            int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
            double x1 = g.x1(i), x2 = g.x2(j);

            // leg lengths toward +/- and the coupled unknown (or boundary value)
            double dplus = h, dminus = h;
            int kp = -1, km = -1;        // unknown column ids (-1: none)
            double vplus = 0, vminus = 0;  // Dirichlet values when leg is cut
            bool ghost_plus = false, ghost_minus = false;

            int ip = i + di, jp = j + dj;
            if (ip >= n || jp >= n) {
                ghost_plus = true;  // square edge: eliminate ghost via Neumann
            } else if (inside_node[g.index(ip, jp)]) {
                kp = id[g.index(ip, jp)];
            } else {
                double frac = detail::bisect_crossing(prob.inside, x1, x2, g.x1(ip), g.x2(jp));
                frac = std::max(frac, 1e-6);
                dplus = frac * h;
                vplus = prob.dirichlet(x1 + frac * h * di, x2 + frac * h * dj);
            }
            int im = i - di, jm = j - dj;
            if (im < 0 || jm < 0) {
                ghost_minus = true;
            } else if (inside_node[g.index(im, jm)]) {
                km = id[g.index(im, jm)];
            } else {
                double frac = detail::bisect_crossing(prob.inside, x1, x2, g.x1(im), g.x2(jm));
                frac = std::max(frac, 1e-6);
                dminus = frac * h;
                vminus = prob.dirichlet(x1 - frac * h * di, x2 - frac * h * dj);
            }

            if (ghost_plus) {
                // mirror node at distance h with u_ghost = u_minus + 2h * (Du.n)
                double gn = neumann(x1, x2, di, dj);
                diag += -2.0 / (h * h);
                if (km >= 0)
                    trips.emplace_back(r, km, 2.0 / (h * h));
                else
                    b -= 2.0 / (h * h) * vminus;  // corner with cut inner leg
                b -= 2.0 * gn / h;
            } else if (ghost_minus) {
                double gn = neumann(x1, x2, -static_cast<double>(di), -static_cast<double>(dj));
                diag += -2.0 / (h * h);
                if (kp >= 0)
                    trips.emplace_back(r, kp, 2.0 / (h * h));
                else
                    b -= 2.0 / (h * h) * vplus;
                b -= 2.0 * gn / h;
            } else {
                double cp = 2.0 / (dplus * (dplus + dminus));
                double cm = 2.0 / (dminus * (dplus + dminus));
                diag += -(cp + cm);
                if (kp >= 0)
                    trips.emplace_back(r, kp, cp);
                else
                    b -= cp * vplus;
                if (km >= 0)
                    trips.emplace_back(r, km, cm);
                else
                    b -= cm * vminus;
            }
        }
        trips.emplace_back(r, r, diag);
        rhs(r) = b;
    }

    Eigen::SparseMatrix<double> A(M, M);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw SolverBreakdown("sparse LU factorization failed");
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw SolverBreakdown("sparse LU solve failed");

    PoissonResult res;
    res.u = ScalarField(g, std::numeric_limits<double>::quiet_NaN());
    res.node_inside = inside_node;
    for (int r = 0; r < M; ++r) res.u.v[nodes[r]] = sol(r);
    res.laplacian_residual = (A * sol - rhs).cwiseAbs().maxCoeff();
    return res;
}

}  // namespace screendual
