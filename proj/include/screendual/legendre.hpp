#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "screendual/grid.hpp"
#include "screendual/model.hpp"

namespace screendual {

/// Axis-aligned rectangular grid, possibly anisotropic; used for conjugate
/// (product-space) domains where the square Grid is too restrictive.
struct RectGrid {
    double x1min = 0.0, x2min = 0.0;
    double h1 = 0.0, h2 = 0.0;
    int n1 = 0, n2 = 0;

    static RectGrid from_box(double x1lo, double x1hi, double x2lo, double x2hi,
                             int m1, int m2) {
        RectGrid r;
        r.x1min = x1lo;
        r.x2min = x2lo;
        r.n1 = m1;
        r.n2 = m2;
        r.h1 = m1 > 1 ? (x1hi - x1lo) / (m1 - 1) : 0.0;
        r.h2 = m2 > 1 ? (x2hi - x2lo) / (m2 - 1) : 0.0;
        return r;
    }
    static RectGrid from_square(const Grid& g) {
        return from_box(g.a, g.a + 1.0, g.a, g.a + 1.0, g.n, g.n);
    }
    int index(int i, int j) const { return i * n2 + j; }
    int num_nodes() const { return n1 * n2; }
    double x1(int i) const { return x1min + i * h1; }
    double x2(int j) const { return x2min + j * h2; }
};

struct RectField {
    RectGrid grid;
    std::vector<double> v;

    RectField() = default;
    explicit RectField(const RectGrid& g, double fill = 0.0)
        : grid(g), v(static_cast<size_t>(g.num_nodes()), fill) {}
    double& operator()(int i, int j) { return v[grid.index(i, j)]; }
    double operator()(int i, int j) const { return v[grid.index(i, j)]; }

    static RectField from_scalar(const ScalarField& u) {
        RectField f(RectGrid::from_square(u.grid));
        f.v = u.v;
        return f;
    }
};

namespace detail {

/// 1D discrete conjugate sup_i (z * x_i - f_i) for all targets z, by
/// divide and conquer over the monotone argmax.  Ties resolve to the
/// largest source index.  O((n + m) log m).
inline void conjugate_1d(const std::vector<double>& x, const double* f, int n,
                         const std::vector<double>& z, double* out, int* arg) {
    const int m = static_cast<int>(z.size());
    if (m == 0) return;
    // recursion over target index range [zl, zr] with argmax known to lie
    // in source range [il, ir]
    struct Frame {
        int zl, zr, il, ir;
    };
    std::vector<Frame> stack;
    stack.push_back({0, m - 1, 0, n - 1});
    while (!stack.empty()) {
        Frame fr = stack.back();
        stack.pop_back();
        if (fr.zl > fr.zr) continue;
        int zm = (fr.zl + fr.zr) / 2;
        double best = -std::numeric_limits<double>::infinity();
        int bi = fr.il;
        for (int i = fr.il; i <= fr.ir; ++i) {
            double val = z[zm] * x[i] - f[i];
            if (val >= best) {
                best = val;
                bi = i;
            }
        }
        out[zm] = best;
        arg[zm] = bi;
        stack.push_back({fr.zl, zm - 1, fr.il, bi});
        stack.push_back({zm + 1, fr.zr, bi, fr.ir});
    }
}

}  // namespace detail

struct LegendreResult {
    RectField value;
    std::vector<int> arg_i, arg_j;  // maximizing source node per target
    double boundary_fraction = 0.0; // fraction of targets maximized on the source boundary
    bool range_truncated = false;   // boundary_fraction exceeded the warn threshold
};

/// Discrete Legendre-Fenchel transform g*(z) = max over source nodes of
/// z.x - g(x), evaluated on every node of `target`.  The two-dimensional
/// max factors into two one-dimensional conjugates, each solved by the
/// monotone-argmax divide and conquer; the result is bit-identical to the
/// direct double loop.
inline LegendreResult legendre_transform(const RectField& g, const RectGrid& target,
                                         double warn_boundary_fraction = 0.25) {
    const RectGrid& S = g.grid;
    LegendreResult res;
    res.value = RectField(target);
    res.arg_i.assign(static_cast<size_t>(target.num_nodes()), 0);
    res.arg_j.assign(static_cast<size_t>(target.num_nodes()), 0);

    std::vector<double> xs1(S.n1), xs2(S.n2), zs1(target.n1), zs2(target.n2);
    for (int i = 0; i < S.n1; ++i) xs1[i] = S.x1(i);
    for (int j = 0; j < S.n2; ++j) xs2[j] = S.x2(j);
    for (int i = 0; i < target.n1; ++i) zs1[i] = target.x1(i);
    for (int j = 0; j < target.n2; ++j) zs2[j] = target.x2(j);

    // pass 1: per source row i, G(i, z2) = max_j (z2 * x2_j - g(i, j))
    std::vector<double> G(static_cast<size_t>(S.n1) * target.n2);
    std::vector<int> Garg(G.size());
    for (int i = 0; i < S.n1; ++i)
        detail::conjugate_1d(xs2, &g.v[S.index(i, 0)], S.n2, zs2,
                             &G[static_cast<size_t>(i) * target.n2],
                             &Garg[static_cast<size_t>(i) * target.n2]);

    // pass 2: per target column z2, v(z1, z2) = max_i (z1 * x1_i + G(i, z2))
    std::vector<double> col(S.n1), outcol(target.n1);
    std::vector<int> argcol(target.n1);
    int boundary_hits = 0;
    for (int j = 0; j < target.n2; ++j) {
        for (int i = 0; i < S.n1; ++i)
            col[i] = -G[static_cast<size_t>(i) * target.n2 + j];
        detail::conjugate_1d(xs1, col.data(), S.n1, zs1, outcol.data(), argcol.data());
        for (int i = 0; i < target.n1; ++i) {
            int k = target.index(i, j);
            int si = argcol[i];
            int sj = Garg[static_cast<size_t>(si) * target.n2 + j];
            res.value.v[k] = outcol[i];
            res.arg_i[k] = si;
            res.arg_j[k] = sj;
            if (si == 0 || si == S.n1 - 1 || sj == 0 || sj == S.n2 - 1) ++boundary_hits;
        }
    }
    res.boundary_fraction =
        static_cast<double>(boundary_hits) / target.num_nodes();
    res.range_truncated = res.boundary_fraction > warn_boundary_fraction;
    return res;
}

/// Convenience overload: square source field, square target grid, returning
/// a plain scalar field.
inline ScalarField legendre_transform(const ScalarField& g, const Grid& target) {
    LegendreResult r =
        legendre_transform(RectField::from_scalar(g), RectGrid::from_square(target));
    ScalarField out(target);
    out.v = std::move(r.value.v);
    return out;
}

/// Gradient-range bounding box of a field, padded by `margin`.
inline RectGrid gradient_range_grid(const ScalarField& u, int m, double margin = 0.05) {
    VectorField du = gradient(u);
    double lo1 = du.g1[0], hi1 = du.g1[0], lo2 = du.g2[0], hi2 = du.g2[0];
    for (double z : du.g1) {
        lo1 = std::min(lo1, z);
        hi1 = std::max(hi1, z);
    }
    for (double z : du.g2) {
        lo2 = std::min(lo2, z);
        hi2 = std::max(hi2, z);
    }
    double pad1 = margin * std::max(hi1 - lo1, 1e-6);
    double pad2 = margin * std::max(hi2 - lo2, 1e-6);
    return RectGrid::from_box(lo1 - pad1, hi1 + pad1, lo2 - pad2, hi2 + pad2, m, m);
}

/// (u*)* back on the source grid.  For convex inputs this reproduces u up to
/// O(h) on the interior.
inline ScalarField biconjugate(const ScalarField& u, int conjugate_resolution = 0) {
    int m = conjugate_resolution > 0 ? conjugate_resolution : 2 * u.grid.n;
    RectGrid zgrid = gradient_range_grid(u, m);
    LegendreResult star =
        legendre_transform(RectField::from_scalar(u), zgrid);
    LegendreResult back =
        legendre_transform(star.value, RectGrid::from_square(u.grid));
    ScalarField out(u.grid);
    out.v = std::move(back.value.v);
    return out;
}

}  // namespace screendual
