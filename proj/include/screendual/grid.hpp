#pragma once

#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace screendual {

/// Uniform node grid over the square [a, a+1]^2 with n nodes per side.
/// Node (i, j) sits at (a + i*h, a + j*h), h = 1/(n-1).  Storage is
/// row-major with the x1 index slow: k = i*n + j.
struct Grid {
    double a = 0.0;
    int n = 0;

    Grid() = default;
    Grid(double a_, int n_) : a(a_), n(n_) {
        if (n < 2) throw std::invalid_argument("Grid: need n >= 2 nodes per side");
    }

    double h() const { return 1.0 / (n - 1); }
    int num_nodes() const { return n * n; }
    int index(int i, int j) const { return i * n + j; }
    double x1(int i) const { return a + i * h(); }
    double x2(int j) const { return a + j * h(); }

    bool operator==(const Grid& o) const { return a == o.a && n == o.n; }
};

struct VectorField;

/// Node values of a scalar function on a Grid.
struct ScalarField {
    Grid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid(g), v(static_cast<size_t>(g.num_nodes()), fill) {}

    double& operator()(int i, int j) { return v[grid.index(i, j)]; }
    double operator()(int i, int j) const { return v[grid.index(i, j)]; }

    template <class F>
    static ScalarField from_function(const Grid& g, F&& f) {
        ScalarField u(g);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) u(i, j) = f(g.x1(i), g.x2(j));
        return u;
    }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double min_value() const {
        double m = v[0];
        for (double x : v) m = std::min(m, x);
        return m;
    }
    double max_value() const {
        double m = v[0];
        for (double x : v) m = std::max(m, x);
        return m;
    }
};

/// Per-node 2-vector samples (gradients, dual candidates).
struct VectorField {
    Grid grid;
    std::vector<double> g1, g2;

    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid(g),
          g1(static_cast<size_t>(g.num_nodes()), 0.0),
          g2(static_cast<size_t>(g.num_nodes()), 0.0) {}

    bool all_finite() const {
        for (double x : g1)
            if (!std::isfinite(x)) return false;
        for (double x : g2)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

/// Trapezoid quadrature weight of node (i, j): h^2 scaled by 1, 1/2 or 1/4
/// on interior, edge and corner nodes.
inline double trapezoid_weight(const Grid& g, int i, int j) {
    const double h2 = g.h() * g.h();
    double w = 1.0;
    if (i == 0 || i == g.n - 1) w *= 0.5;
    if (j == 0 || j == g.n - 1) w *= 0.5;
    return w * h2;
}

inline std::vector<double> trapezoid_weights(const Grid& g) {
    std::vector<double> w(static_cast<size_t>(g.num_nodes()));
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) w[g.index(i, j)] = trapezoid_weight(g, i, j);
    return w;
}

struct AdmissibilityOptions {
    double tol_nonneg = 1e-9;
    double tol_mono = 1e-8;
    double tol_convex = 1e-8;
    int stencil_width = 1;
};

struct AdmissibilityReport {
    bool nonneg = false;
    bool monotone = false;
    bool convex = false;
    double worst_nonneg = 0.0;   // most negative node value
    double worst_mono = 0.0;     // most negative forward difference
    double worst_convex = 0.0;   // most negative directional second difference
    bool admissible() const { return nonneg && monotone && convex; }
};

/// Stencil directions used for directional second differences, grouped by
/// width: axis and diagonal moves at width 1, knight moves at 2, wider at 3.
inline std::vector<std::pair<int, int>> stencil_directions(int width) {
    std::vector<std::pair<int, int>> dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    if (width >= 2) {
        dirs.insert(dirs.end(), {{2, 1}, {1, 2}, {2, -1}, {1, -2}});
    }
    if (width >= 3) {
        dirs.insert(dirs.end(),
                    {{3, 1}, {1, 3}, {3, -1}, {1, -3}, {3, 2}, {2, 3}, {3, -2}, {2, -3}});
    }
    return dirs;
}

/// Checked (not enforced) admissibility of a payoff field: nonnegativity,
/// forward-difference monotonicity in both axes, and directional second
/// differences down to the configured tolerances.
inline AdmissibilityReport check_admissible(const ScalarField& u,
                                            const AdmissibilityOptions& opt = {}) {
    AdmissibilityReport rep;
    const Grid& g = u.grid;
    double worst_nn = 0.0, worst_m = 0.0, worst_c = 0.0;
    for (double x : u.v) worst_nn = std::min(worst_nn, x);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (i + 1 < g.n) worst_m = std::min(worst_m, u(i + 1, j) - u(i, j));
            if (j + 1 < g.n) worst_m = std::min(worst_m, u(i, j + 1) - u(i, j));
        }
    for (auto [di, dj] : stencil_directions(opt.stencil_width)) {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                int ip = i + di, jp = j + dj, im = i - di, jm = j - dj;
                if (ip < 0 || ip >= g.n || im < 0 || im >= g.n) continue;
                if (jp < 0 || jp >= g.n || jm < 0 || jm >= g.n) continue;
                worst_c = std::min(worst_c, u(ip, jp) - 2.0 * u(i, j) + u(im, jm));
            }
    }
    rep.worst_nonneg = worst_nn;
    rep.worst_mono = worst_m;
    rep.worst_convex = worst_c;
    rep.nonneg = worst_nn >= -opt.tol_nonneg;
    rep.monotone = worst_m >= -opt.tol_mono;
    rep.convex = worst_c >= -opt.tol_convex;
    return rep;
}

// --- CSV exchange format -------------------------------------------------
// Scalar: header "x1,x2,value"; vector: "x1,x2,g1,g2".  Row-major node
// order, 17 significant digits.

namespace detail {
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace detail

inline void write_csv(const ScalarField& u, std::ostream& os) {
    os << "x1,x2,value\n";
    const Grid& g = u.grid;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            os << detail::fmt17(g.x1(i)) << ',' << detail::fmt17(g.x2(j)) << ','
               << detail::fmt17(u(i, j)) << '\n';
}

inline void write_csv(const VectorField& f, std::ostream& os) {
    os << "x1,x2,g1,g2\n";
    const Grid& g = f.grid;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            int k = g.index(i, j);
            os << detail::fmt17(g.x1(i)) << ',' << detail::fmt17(g.x2(j)) << ','
               << detail::fmt17(f.g1[k]) << ',' << detail::fmt17(f.g2[k]) << '\n';
        }
}

inline void save_csv(const ScalarField& u, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_csv: cannot open " + path);
    write_csv(u, os);
}

inline void save_csv(const VectorField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_csv: cannot open " + path);
    write_csv(f, os);
}

/// Reads a scalar field written by write_csv.  The grid is reconstructed
/// from the node count and coordinate range.
inline ScalarField load_scalar_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x1,x2,value", 0) != 0)
        throw std::runtime_error("load_scalar_csv: bad header");
    std::vector<double> xs, vals;
    double xmin = 0, have = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double x1, x2, val;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x1, &x2, &val) != 3)
            throw std::runtime_error("load_scalar_csv: bad row: " + line);
        if (!have) { xmin = x1; have = true; }
        xmin = std::min(xmin, std::min(x1, x2));
        xs.push_back(x1);
        vals.push_back(val);
    }
    const size_t total = vals.size();
    int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(total))));
    if (static_cast<size_t>(n) * n != total)
        throw std::runtime_error("load_scalar_csv: node count is not a square");
    ScalarField u(Grid(xmin, n));
    u.v = std::move(vals);
    return u;
}

inline ScalarField load_scalar_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_scalar_csv: cannot open " + path);
    return load_scalar_csv(is);
}

}  // namespace screendual
