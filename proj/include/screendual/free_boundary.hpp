#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "screendual/blunt.hpp"
#include "screendual/foliation.hpp"
#include "screendual/grid.hpp"
#include "screendual/model.hpp"
#include "screendual/poisson.hpp"

namespace screendual {

struct ChartInversionFailure : std::runtime_error {
    std::vector<int> nodes;
    explicit ChartInversionFailure(std::vector<int> bad)
        : std::runtime_error("assemble_candidate: " + std::to_string(bad.size()) +
                             " nodes matched no piece"),
          nodes(std::move(bad)) {}
};

/// Piecewise geometry of the candidate: the exclusion hypotenuse, the blunt
/// strip boundaries, and the bunching/customization interface traced by the
/// ruling endpoints (plus its mirror).
struct FreeBoundaryGeometry {
    double a = 0.0;
    double x2_low = 0.0;    // exclusion intercept
    double x2_mid = 0.0;    // top of the blunt strip (= h_low of the foliation)
    double x2_high = 0.0;   // left-edge end of the interface arc
    // polylines as (x1, x2) pairs
    std::vector<std::array<double, 2>> exclusion_boundary;   // t = a + x2_low
    std::vector<std::array<double, 2>> strip_top;            // t = a + x2_mid
    std::vector<std::array<double, 2>> interface_upper;      // ruling endpoints (above diagonal)
    std::vector<std::array<double, 2>> interface_lower;      // mirror
};

/// Inverts the ruling chart: for a point above the diagonal, finds the
/// ruling through it by scanning the sampled leaf pencil for a sign change
/// of the leaf-line form and refining by bisection.
class FoliationChart {
public:
    FoliationChart(const BunchFoliation& fol, int scan_stride = 16);

    /// Signed leaf-line form at sample k: zero when x lies on the line
    /// carrying ruling k.
    double line_form(int k, double x1, double x2) const {
        return (x1 - fol_->a) * std::sin(fol_->theta[k]) -
               (x2 - fol_->h[k]) * std::cos(fol_->theta[k]);
    }

    struct Hit {
        double theta, r, m, mp, b, R;
        bool inside;  // r within [0, R]
    };

    /// Finds the ruling through (x1, x2); nullopt when no positive-length
    /// leaf line passes through the point within the active pencil.
    std::optional<Hit> locate(double x1, double x2, double r_slack = 0.0) const {
        const auto& f = *fol_;
        const int n = kend_ + 1;  // rulings past the first zero length are absent
        if (n < 2) return std::nullopt;
        double prev = line_form(0, x1, x2);
        int lo = -1;
        if (prev == 0.0) lo = 0;
        for (int k = stride_; lo < 0; k += stride_) {
            int kk = std::min(k, n - 1);
            double cur = line_form(kk, x1, x2);
            if (prev == 0.0 || (prev < 0.0) != (cur < 0.0)) lo = kk - stride_;
            prev = cur;
            if (kk == n - 1) break;
        }
        if (lo < 0) return std::nullopt;
        int hi = std::min(lo + stride_, n - 1);
        lo = std::max(lo, 0);
        // fine scan inside the bracket
        double flo = line_form(lo, x1, x2);
        int kstar = -1;
        for (int k = lo + 1; k <= hi; ++k) {
            double fk = line_form(k, x1, x2);
            if (flo == 0.0 || (flo < 0.0) != (fk < 0.0)) {
                kstar = k;
                break;
            }
            flo = fk;
        }
        if (kstar < 0) return std::nullopt;
        // linear interpolation between samples kstar-1, kstar
        double f0 = line_form(kstar - 1, x1, x2), f1 = line_form(kstar, x1, x2);
        double w = (f0 == f1) ? 0.0 : f0 / (f0 - f1);
        w = std::clamp(w, 0.0, 1.0);
        Hit hit;
        hit.theta = f.theta[kstar - 1] + w * (f.theta[kstar] - f.theta[kstar - 1]);
        hit.m = f.m[kstar - 1] + w * (f.m[kstar] - f.m[kstar - 1]);
        hit.mp = f.mp[kstar - 1] + w * (f.mp[kstar] - f.mp[kstar - 1]);
        hit.b = f.b[kstar - 1] + w * (f.b[kstar] - f.b[kstar - 1]);
        hit.R = f.R[kstar - 1] + w * (f.R[kstar] - f.R[kstar - 1]);
        double h = f.h[kstar - 1] + w * (f.h[kstar] - f.h[kstar - 1]);
        double c = std::cos(hit.theta), s = std::sin(hit.theta);
        hit.r = std::abs(c) > std::abs(s) ? (x1 - f.a) / c : (x2 - h) / s;
        hit.inside = hit.r >= -1e-12 && hit.r <= hit.R + r_slack;
        return hit;
    }

private:
    const BunchFoliation* fol_;
    int stride_;
    int kend_ = 0;
};

/// Index of the last ruling with positive length before the first zero;
/// rulings beyond it are treated as absent.
inline int foliation_active_end(const BunchFoliation& fol, double r_min = 1e-9) {
    int last = 0;
    for (int k = 0; k < fol.size(); ++k) {
        if (fol.R[k] > r_min)
            last = k;
        else if (k > 0)
            break;
    }
    return last;
}

inline FoliationChart::FoliationChart(const BunchFoliation& fol, int scan_stride)
    : fol_(&fol), stride_(std::max(scan_stride, 1)), kend_(foliation_active_end(fol)) {}

struct CandidateAssembly {
    ScalarField u;
    FreeBoundaryGeometry geometry;
    std::vector<int> unclaimed_nodes;
    double seam_discrepancy = 0.0;  // max disagreement between overlapping pieces
    double min_before_floor = 0.0;  // most negative raw value before flooring
};

namespace detail {

struct PieceEvaluator {
    double a, x2_low, h_low;
    const BunchFoliation* fol;
    const FoliationChart* chart;

    /// Payoff of the bunching-side construction at an arbitrary point:
    /// 0 on the exclusion triangle, blunt profile on the strip, ruled value
    /// on the wedge and its mirror.  Returns false when the point belongs
    /// to none of those pieces (i.e. it lies in the customization region).
    bool value(double x1, double x2, double& out, double r_slack = 0.0) const {
        double t = x1 + x2;
        if (t <= a + x2_low + 1e-13) {
            out = 0.0;
            return true;
        }
        if (t <= a + h_low + 1e-13) {
            out = blunt_profile(t, a).u;
            return true;
        }
        if (fol && fol->size() > 1) {
            double p1 = x1, p2 = x2;
            if (p2 < p1) std::swap(p1, p2);  // mirror below the diagonal
            auto hit = chart->locate(p1, p2, r_slack);
            if (hit && hit->inside) {
                out = hit->b + hit->r * hit->m;
                return true;
            }
        }
        return false;
    }
};

}  // namespace detail

/// Membership test of the customization region for an assembled candidate:
/// past the blunt strip and outside the ruling chart (both sides).
inline std::function<bool(double, double)> omega2_inside_test(
    const detail::PieceEvaluator& pieces) {
    return [pieces](double x1, double x2) {
        double dummy;
        return !pieces.value(x1, x2, dummy);
    };
}

/// Assembles the nodal candidate payoff from the pieces: zero on the
/// exclusion triangle, the blunt profile on the strip, the ruled value on
/// the bunching wedges, and the supplied customization-region solution.
/// Seam conflicts resolve toward the customization value; the worst
/// disagreement is recorded.
inline CandidateAssembly assemble_candidate(double a, double x2_low,
                                            const BunchFoliation& fol,
                                            const PoissonResult& u2,
                                            bool throw_on_unclaimed = true) {
    const Grid& g = u2.u.grid;
    CandidateAssembly out;
    out.u = ScalarField(g);
    FoliationChart chart(fol);
    detail::PieceEvaluator pieces{a, x2_low, fol.h_low, &fol, &chart};

    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            int k = g.index(i, j);
            double x1 = g.x1(i), x2 = g.x2(j);
            double piece_val;
            bool piece_ok = pieces.value(x1, x2, piece_val, 0.75 * g.h());
            bool omega2_ok = u2.node_inside[k] && std::isfinite(u2.u.v[k]);
            if (omega2_ok) {
                out.u.v[k] = u2.u.v[k];
                if (piece_ok)
                    out.seam_discrepancy =
                        std::max(out.seam_discrepancy, std::abs(piece_val - u2.u.v[k]));
            } else if (piece_ok) {
                out.u.v[k] = piece_val;
            } else {
                out.unclaimed_nodes.push_back(k);
                out.u.v[k] = 0.0;
            }
        }

    // enforce the built-in reflection symmetry exactly, then floor at the
    // outside option (an unmatched customization solve can dip below it)
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < i; ++j) {
            double avg = 0.5 * (out.u(i, j) + out.u(j, i));
            out.u(i, j) = avg;
            out.u(j, i) = avg;
        }
    out.min_before_floor = out.u.min_value();
    for (double& v : out.u.v) v = std::max(v, 0.0);

    if (throw_on_unclaimed && !out.unclaimed_nodes.empty())
        throw ChartInversionFailure(out.unclaimed_nodes);

    // geometry polylines
    FreeBoundaryGeometry& geo = out.geometry;
    geo.a = a;
    geo.x2_low = x2_low;
    geo.x2_mid = fol.h_low;
    int kend = foliation_active_end(fol);
    geo.x2_high = fol.h[kend];
    auto line_points = [&](double t) {
        std::vector<std::array<double, 2>> pts;
        for (int s = 0; s <= 64; ++s) {
            double x1 = a + (t - 2.0 * a) * s / 64.0;
            double x2 = t - x1;
            if (x1 >= a && x1 <= a + 1 && x2 >= a && x2 <= a + 1) pts.push_back({x1, x2});
        }
        return pts;
    };
    geo.exclusion_boundary = line_points(a + x2_low);
    geo.strip_top = line_points(a + fol.h_low);
    for (int k = 0; k <= kend; ++k) {
        double x1, x2;
        fol.point(k, fol.R[k], x1, x2);
        geo.interface_upper.push_back({x1, x2});
    }
    for (auto it = geo.interface_upper.rbegin(); it != geo.interface_upper.rend(); ++it)
        geo.interface_lower.push_back({(*it)[1], (*it)[0]});
    return out;
}

struct MismatchSample {
    double x1, x2;      // interface point
    double n1, n2;      // unit normal into the customization region
    double theta;       // ruling angle at the sample
    double value = 0.0; // (Du2 - Du1) . n
    bool valid = false;
};

namespace detail {

/// Biquadratic (9-node) interpolation of a masked grid field; falls back to
/// bilinear when the full stencil is unavailable, and fails when even the
/// cell corners are outside the solved set.
inline bool masked_interpolate(const PoissonResult& u2, double x1, double x2,
                               double& val) {
    const Grid& g = u2.u.grid;
    const double h = g.h();
    double s = (x1 - g.a) / h, t = (x2 - g.a) / h;
    int ic = std::clamp(static_cast<int>(std::lround(s)), 1, g.n - 2);
    int jc = std::clamp(static_cast<int>(std::lround(t)), 1, g.n - 2);
    bool full = true;
    for (int di = -1; di <= 1 && full; ++di)
        for (int dj = -1; dj <= 1 && full; ++dj)
            if (!u2.node_inside[g.index(ic + di, jc + dj)]) full = false;
    if (full && std::abs(s - ic) <= 1.0 && std::abs(t - jc) <= 1.0) {
        double ls = s - ic, lt = t - jc;
        auto w = [](double z, int k) {
            if (k < 0) return 0.5 * z * (z - 1.0);
            if (k == 0) return 1.0 - z * z;
            return 0.5 * z * (z + 1.0);
        };
        double acc = 0.0;
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj)
                acc += w(ls, di) * w(lt, dj) * u2.u.v[g.index(ic + di, jc + dj)];
        val = acc;
        return true;
    }
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.n - 2);
    int j = std::clamp(static_cast<int>(std::floor(t)), 0, g.n - 2);
    for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj)
            if (!u2.node_inside[g.index(i + di, j + dj)]) return false;
    double fs = std::clamp(s - i, 0.0, 1.0), ft = std::clamp(t - j, 0.0, 1.0);
    val = (1 - fs) * ((1 - ft) * u2.u.v[g.index(i, j)] + ft * u2.u.v[g.index(i, j + 1)]) +
          fs * ((1 - ft) * u2.u.v[g.index(i + 1, j)] +
                ft * u2.u.v[g.index(i + 1, j + 1)]);
    return true;
}

/// One-sided normal derivative of the solved field at a boundary point with
/// known trace u0.  Fits the local model
///   u ~ u0 + c1 xi + c2 eta + c3 (xi^2 - eta^2) + c4 xi eta
///       + (rhs/4)(xi^2 + eta^2)
/// (exact for every quadratic with the right Laplacian) by least squares
/// over the solved nodes in a disk ahead of the point, which averages out
/// the node-scale error of the boundary-fitted stencils instead of
/// amplifying it by 1/h.  Returns Du.n at the point.
inline bool normal_derivative_probe(const PoissonResult& u2, double x1, double x2,
                                    double n1, double n2, double u0, double& out,
                                    double rhs = 3.0) {
    const Grid& g = u2.u.grid;
    const double h = g.h();
    for (double radius = 3.2 * h; radius <= 6.5 * h; radius *= 1.45) {
        // gather solved nodes in the half-disk ahead of the boundary point
        double cx = x1 + 0.9 * radius * n1, cy = x2 + 0.9 * radius * n2;
        int i0 = std::max(0, static_cast<int>((cx - radius - g.a) / h));
        int i1 = std::min(g.n - 1, static_cast<int>((cx + radius - g.a) / h) + 1);
        int j0 = std::max(0, static_cast<int>((cy - radius - g.a) / h));
        int j1 = std::min(g.n - 1, static_cast<int>((cy + radius - g.a) / h) + 1);
        double AtA[4][4] = {};
        double Atb[4] = {};
        int count = 0;
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) {
                int k = g.index(i, j);
                if (!u2.node_inside[k]) continue;
                double xi = g.x1(i) - x1, eta = g.x2(j) - x2;
                double dxc = g.x1(i) - cx, dyc = g.x2(j) - cy;
                if (dxc * dxc + dyc * dyc > radius * radius) continue;
                double row[4] = {xi, eta, xi * xi - eta * eta, xi * eta};
                double b = u2.u.v[k] - u0 - 0.25 * rhs * (xi * xi + eta * eta);
                for (int r = 0; r < 4; ++r) {
                    Atb[r] += row[r] * b;
                    for (int c = 0; c < 4; ++c) AtA[r][c] += row[r] * row[c];
                }
                ++count;
            }
        if (count < 8) continue;
        // solve the 4x4 normal equations by Gaussian elimination
        double M[4][5];
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) M[r][c] = AtA[r][c];
            M[r][4] = Atb[r];
        }
        bool singular = false;
        for (int col = 0; col < 4 && !singular; ++col) {
            int piv = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
            if (std::abs(M[piv][col]) < 1e-14) {
                singular = true;
                break;
            }
            if (piv != col)
                for (int c = 0; c < 5; ++c) std::swap(M[piv][c], M[col][c]);
            for (int r = 0; r < 4; ++r) {
                if (r == col) continue;
                double f = M[r][col] / M[col][col];
                for (int c = col; c < 5; ++c) M[r][c] -= f * M[col][c];
            }
        }
        if (singular) continue;
        double c1 = M[0][4] / M[0][0], c2 = M[1][4] / M[1][1];
        out = c1 * n1 + c2 * n2;
        return true;
    }
    return false;
}

}  // namespace detail

/// Samples the normal-derivative jump across the bunching/customization
/// interface at fixed fractions of the active ruling pencil, interpolating
/// the ruling data so the samples move continuously with the fan.  Rulings
/// shorter than min_ruling_cells grid cells (the pinch) are skipped: the
/// wedge is not resolvable there at the working resolution.  The bunching
/// side uses the exact ruled-surface gradient; the customization side is a
/// one-sided quadratic fit along the normal through the Dirichlet trace and
/// two interior probes.
inline std::vector<MismatchSample> neumann_mismatch(
    const PoissonResult& u2, const BunchFoliation& fol,
    const std::function<double(double, double)>& dirichlet, int n_samples = 40,
    double min_ruling_cells = 3.0) {
    const Grid& g = u2.u.grid;
    const double h = g.h();
    std::vector<MismatchSample> out;
    int kend = foliation_active_end(fol);
    if (kend < 1 || fol.size() < 2) return out;
    const double dt = fol.step();
    const double th0 = fol.theta.front(), th_end = fol.theta[kend];

    struct Ruling {
        double theta, m, mp, h, R;
    };
    auto at = [&](double th) {
        th = std::clamp(th, th0, th_end);
        double kf = (th - th0) / dt;
        int k = std::clamp(static_cast<int>(std::floor(kf)), 0, fol.size() - 2);
        double w = kf - k;
        Ruling r;
        r.theta = th;
        r.m = (1 - w) * fol.m[k] + w * fol.m[k + 1];
        r.mp = (1 - w) * fol.mp[k] + w * fol.mp[k + 1];
        r.h = (1 - w) * fol.h[k] + w * fol.h[k + 1];
        r.R = (1 - w) * fol.R[k] + w * fol.R[k + 1];
        return r;
    };
    auto endpoint = [&](const Ruling& r, double& x1, double& x2) {
        x1 = fol.a + r.R * std::cos(r.theta);
        x2 = r.h + r.R * std::sin(r.theta);
    };

    const double dth = (th_end - th0) / (4.0 * n_samples);
    for (int s = 0; s < n_samples; ++s) {
        double th = th0 + (th_end - th0) * (s + 0.5) / n_samples;
        Ruling r = at(th);
        MismatchSample smp;
        smp.theta = th;
        endpoint(r, smp.x1, smp.x2);
        out.push_back(smp);  // placeholder; filled below if resolvable
        MismatchSample& ref = out.back();
        if (r.R < min_ruling_cells * h) continue;

        Ruling ra = at(th - dth), rb = at(th + dth);
        double xa, ya, xb, yb;
        endpoint(ra, xa, ya);
        endpoint(rb, xb, yb);
        double tx = xb - xa, ty = yb - ya;
        double tn = std::hypot(tx, ty);
        if (tn < 1e-14) continue;
        tx /= tn;
        ty /= tn;
        double nx = -ty, ny = tx;
        double probe;
        if (!detail::masked_interpolate(u2, ref.x1 + 1.5 * h * nx,
                                        ref.x2 + 1.5 * h * ny, probe)) {
            nx = -nx;
            ny = -ny;
        }
        ref.n1 = nx;
        ref.n2 = ny;

        double u0 = dirichlet(ref.x1, ref.x2);
        double du2_n;
        if (!detail::normal_derivative_probe(u2, ref.x1, ref.x2, nx, ny, u0, du2_n))
            continue;
        double u1g1 = r.m * std::cos(th) - r.mp * std::sin(th);
        double u1g2 = r.m * std::sin(th) + r.mp * std::cos(th);
        if (ref.x2 < ref.x1) std::swap(u1g1, u1g2);  // mirror side
        ref.value = du2_n - (u1g1 * nx + u1g2 * ny);
        ref.valid = true;
    }
    return out;
}

inline double max_abs_mismatch(const std::vector<MismatchSample>& samples) {
    double worst = 0.0;
    int n_valid = 0;
    for (const auto& s : samples)
        if (s.valid) {
            worst = std::max(worst, std::abs(s.value));
            ++n_valid;
        }
    return n_valid > 0 ? worst : std::numeric_limits<double>::infinity();
}

}  // namespace screendual
