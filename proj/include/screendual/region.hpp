#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "screendual/grid.hpp"
#include "screendual/model.hpp"

namespace screendual {

enum class RegionLabel : uint8_t { Excluded, BluntBunch, TargetedBunch, Customized };

inline const char* to_string(RegionLabel l) {
    switch (l) {
        case RegionLabel::Excluded: return "Excluded";
        case RegionLabel::BluntBunch: return "BluntBunch";
        case RegionLabel::TargetedBunch: return "TargetedBunch";
        default: return "Customized";
    }
}

/// Per-cell rank stratification of the discrete Hessian.  Cells are indexed
/// (i, j) in [0, n-1)^2 with centers at (a + (i+1/2)h, a + (j+1/2)h).
struct RegionMask {
    Grid grid;                       // node grid; cells are (n-1)^2
    std::vector<RegionLabel> label;  // cell-major: i * (n-1) + j
    std::vector<double> lam1, lam2;  // cell Hessian eigenvalues, lam1 <= lam2
    std::vector<double> angle;       // null-direction angle of rank-1 cells, radians
    double tau_rank = 0.0, tau_angle = 0.0;

    int cells_per_side() const { return grid.n - 1; }
    int cell_index(int i, int j) const { return i * cells_per_side() + j; }
    RegionLabel operator()(int i, int j) const { return label[cell_index(i, j)]; }

    double area_fraction(RegionLabel which) const {
        int cnt = 0;
        for (auto l : label) cnt += (l == which);
        return static_cast<double>(cnt) / label.size();
    }
};

struct RegionThresholds {
    double tau_rank = 0.0;   // 0 means default 10 * h_grid
    double tau_angle_deg = 3.0;
};

namespace detail {

struct Hessian2 {
    double h11 = 0, h12 = 0, h22 = 0;
};

/// Nodal second differences; one-sided replication at the boundary ring.
inline Hessian2 nodal_hessian(const ScalarField& u, int i, int j) {
    const Grid& g = u.grid;
    const double h2 = g.h() * g.h();
    int ic = std::clamp(i, 1, g.n - 2), jc = std::clamp(j, 1, g.n - 2);
    Hessian2 H;
    H.h11 = (u(ic + 1, jc) - 2.0 * u(ic, jc) + u(ic - 1, jc)) / h2;
    H.h22 = (u(ic, jc + 1) - 2.0 * u(ic, jc) + u(ic, jc - 1)) / h2;
    H.h12 = (u(ic + 1, jc + 1) + u(ic - 1, jc - 1) - u(ic + 1, jc - 1) -
             u(ic - 1, jc + 1)) /
            (4.0 * h2);
    return H;
}

inline void eigen_sym2(const Hessian2& H, double& lam1, double& lam2, double& null_angle) {
    double tr = H.h11 + H.h22;
    double det = H.h11 * H.h22 - H.h12 * H.h12;
    double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
    lam1 = 0.5 * tr - disc;
    lam2 = 0.5 * tr + disc;
    // eigenvector of lam1 (the flat direction of a rank-1 cell)
    double vx, vy;
    if (std::abs(H.h12) > 1e-300) {
        vx = lam1 - H.h22;
        vy = H.h12;
    } else if (H.h11 <= H.h22) {
        vx = 1.0;
        vy = 0.0;
    } else {
        vx = 0.0;
        vy = 1.0;
    }
    null_angle = std::atan2(vy, vx);
    if (null_angle > 0.5 * M_PI) null_angle -= M_PI;   // fold to (-pi/2, pi/2]
    if (null_angle <= -0.5 * M_PI) null_angle += M_PI;
}

}  // namespace detail

/// Classifies each cell by the rank of its Hessian: both eigenvalues below
/// tau_rank -> Excluded, both above -> Customized, otherwise a bunch cell,
/// split into blunt (null direction antidiagonal within tau_angle) versus
/// targeted.
inline RegionMask classify_regions(const ScalarField& u,
                                   const RegionThresholds& thr = {}) {
    const Grid& g = u.grid;
    RegionMask mask;
    mask.grid = g;
    const int m = g.n - 1;
    mask.label.resize(static_cast<size_t>(m) * m);
    mask.lam1.resize(mask.label.size());
    mask.lam2.resize(mask.label.size());
    mask.angle.resize(mask.label.size());
    mask.tau_rank = thr.tau_rank > 0.0 ? thr.tau_rank : 10.0 * g.h();
    mask.tau_angle = thr.tau_angle_deg * M_PI / 180.0;

    const double anti = -0.25 * M_PI;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            detail::Hessian2 H{};
            for (int di = 0; di <= 1; ++di)
                for (int dj = 0; dj <= 1; ++dj) {
                    auto Hn = detail::nodal_hessian(u, i + di, j + dj);
                    H.h11 += 0.25 * Hn.h11;
                    H.h12 += 0.25 * Hn.h12;
                    H.h22 += 0.25 * Hn.h22;
                }
            double l1, l2, ang;
            detail::eigen_sym2(H, l1, l2, ang);
            int k = mask.cell_index(i, j);
            mask.lam1[k] = l1;
            mask.lam2[k] = l2;
            mask.angle[k] = ang;
            if (std::abs(l1) + std::abs(l2) <= mask.tau_rank)
                mask.label[k] = RegionLabel::Excluded;
            else if (l1 >= mask.tau_rank)
                mask.label[k] = RegionLabel::Customized;
            else {
                double d = std::abs(ang - anti);
                d = std::min(d, std::abs(d - M_PI));
                mask.label[k] = (d <= mask.tau_angle) ? RegionLabel::BluntBunch
                                                      : RegionLabel::TargetedBunch;
            }
        }
    return mask;
}

/// One traced isochoice segment: endpoints, angle, the shared product
/// (gradient value), straightness and gradient-spread diagnostics.
struct BunchSegment {
    double p0[2], p1[2];
    double theta = 0.0;       // direction angle, radians in (-pi/2, pi/2]
    double y[2];              // common product along the segment
    double chord_residual = 0.0;   // max point-to-chord distance
    double gradient_spread = 0.0;  // max ||Du(p) - Du(q)|| over samples
    double length() const {
        return std::hypot(p1[0] - p0[0], p1[1] - p0[1]);
    }
};

struct BunchTraceOptions {
    double tau_bunch = 0.0;  // 0 means default 8 * h_grid
    double min_length = 0.0; // 0 means default 3 * h_grid
};

namespace detail {

inline void bilinear_gradient(const VectorField& du, double x1, double x2, double& o1,
                              double& o2) {
    const Grid& g = du.grid;
    double s = (x1 - g.a) / g.h(), t = (x2 - g.a) / g.h();
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.n - 2);
    int j = std::clamp(static_cast<int>(std::floor(t)), 0, g.n - 2);
    double fs = std::clamp(s - i, 0.0, 1.0), ft = std::clamp(t - j, 0.0, 1.0);
    auto lerp = [&](const std::vector<double>& a) {
        return (1 - fs) * ((1 - ft) * a[g.index(i, j)] + ft * a[g.index(i, j + 1)]) +
               fs * ((1 - ft) * a[g.index(i + 1, j)] + ft * a[g.index(i + 1, j + 1)]);
    };
    o1 = lerp(du.g1);
    o2 = lerp(du.g2);
}

}  // namespace detail

/// Traces the isochoice segments of the rank-1 cells.  Seeds are unvisited
/// bunch cells taken in lexicographic cell order; each trace marches both
/// ways along the cellwise null direction (sign-aligned step to step),
/// stopping when the cursor leaves the bunch cells or the interpolated
/// gradient drifts beyond tau_bunch from the seed product.
inline std::vector<BunchSegment> extract_bunches(const ScalarField& u,
                                                 const RegionMask& mask,
                                                 const BunchTraceOptions& opt = {}) {
    const Grid& g = u.grid;
    const int m = mask.cells_per_side();
    const double h = g.h();
    const double tau_bunch = opt.tau_bunch > 0.0 ? opt.tau_bunch : 8.0 * h;
    const double min_len = opt.min_length > 0.0 ? opt.min_length : 3.0 * h;
    VectorField du = gradient(u);

    auto is_bunch_cell = [&](double x1, double x2) {
        int i = static_cast<int>(std::floor((x1 - g.a) / h));
        int j = static_cast<int>(std::floor((x2 - g.a) / h));
        if (i < 0 || i >= m || j < 0 || j >= m) return false;
        RegionLabel l = mask.label[mask.cell_index(i, j)];
        return l == RegionLabel::BluntBunch || l == RegionLabel::TargetedBunch;
    };

    std::vector<char> visited(mask.label.size(), 0);
    std::vector<BunchSegment> out;

    for (int ci = 0; ci < m; ++ci)
        for (int cj = 0; cj < m; ++cj) {
            int ck = mask.cell_index(ci, cj);
            if (visited[ck]) continue;
            RegionLabel l = mask.label[ck];
            if (l != RegionLabel::BluntBunch && l != RegionLabel::TargetedBunch) continue;

            double cx = g.a + (ci + 0.5) * h, cy = g.a + (cj + 0.5) * h;
            double ang = mask.angle[ck];
            double y0g1, y0g2;
            detail::bilinear_gradient(du, cx, cy, y0g1, y0g2);

            std::vector<std::pair<double, double>> pts{{cx, cy}};
            for (int dir = -1; dir <= 1; dir += 2) {
                double px = cx, py = cy;
                double dx = std::cos(ang) * dir, dy = std::sin(ang) * dir;
                for (int step = 0; step < 8 * g.n; ++step) {
                    double nx = px + 0.5 * h * dx, ny = py + 0.5 * h * dy;
                    if (!is_bunch_cell(nx, ny)) break;
                    double gg1, gg2;
                    detail::bilinear_gradient(du, nx, ny, gg1, gg2);
                    if (std::hypot(gg1 - y0g1, gg2 - y0g2) > tau_bunch) break;
                    // follow the local null direction, sign-aligned
                    int ii = static_cast<int>(std::floor((nx - g.a) / h));
                    int jj = static_cast<int>(std::floor((ny - g.a) / h));
                    double na = mask.angle[mask.cell_index(ii, jj)];
                    double ndx = std::cos(na), ndy = std::sin(na);
                    if (ndx * dx + ndy * dy < 0.0) {
                        ndx = -ndx;
                        ndy = -ndy;
                    }
                    dx = ndx;
                    dy = ndy;
                    px = nx;
                    py = ny;
                    visited[mask.cell_index(ii, jj)] = 1;
                    if (dir < 0)
                        pts.insert(pts.begin(), {px, py});
                    else
                        pts.push_back({px, py});
                }
            }
            visited[ck] = 1;
            if (pts.size() < 2) continue;

            BunchSegment seg;
            seg.p0[0] = pts.front().first;
            seg.p0[1] = pts.front().second;
            seg.p1[0] = pts.back().first;
            seg.p1[1] = pts.back().second;
            if (seg.length() < min_len) continue;
            double tx = (seg.p1[0] - seg.p0[0]) / seg.length();
            double ty = (seg.p1[1] - seg.p0[1]) / seg.length();
            seg.theta = std::atan2(ty, tx);
            if (seg.theta > 0.5 * M_PI) seg.theta -= M_PI;
            if (seg.theta <= -0.5 * M_PI) seg.theta += M_PI;
            double worst_chord = 0.0, worst_spread = 0.0;
            double sg1 = 0.0, sg2 = 0.0;
            for (auto& [px, py] : pts) {
                worst_chord = std::max(
                    worst_chord, std::abs(-(px - seg.p0[0]) * ty + (py - seg.p0[1]) * tx));
                double gg1, gg2;
                detail::bilinear_gradient(du, px, py, gg1, gg2);
                sg1 += gg1;
                sg2 += gg2;
            }
            sg1 /= pts.size();
            sg2 /= pts.size();
            for (auto& [px, py] : pts) {
                double gg1, gg2;
                detail::bilinear_gradient(du, px, py, gg1, gg2);
                worst_spread = std::max(worst_spread, std::hypot(gg1 - sg1, gg2 - sg2));
            }
            seg.chord_residual = worst_chord;
            seg.gradient_spread = worst_spread;
            seg.y[0] = sg1;
            seg.y[1] = sg2;
            out.push_back(seg);
        }

    std::sort(out.begin(), out.end(),
              [](const BunchSegment& a, const BunchSegment& b) { return a.theta < b.theta; });
    return out;
}

inline void write_csv(const RegionMask& mask, std::ostream& os) {
    os << "x1,x2,label,lam1,lam2\n";
    const Grid& g = mask.grid;
    const int m = mask.cells_per_side();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            int k = mask.cell_index(i, j);
            os << detail::fmt17(g.a + (i + 0.5) * g.h()) << ','
               << detail::fmt17(g.a + (j + 0.5) * g.h()) << ','
               << to_string(mask.label[k]) << ',' << detail::fmt17(mask.lam1[k]) << ','
               << detail::fmt17(mask.lam2[k]) << '\n';
        }
}

}  // namespace screendual
