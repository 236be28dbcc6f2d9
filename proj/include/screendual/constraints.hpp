#pragma once

#include <cstdint>
#include <vector>

#include "screendual/grid.hpp"
#include "screendual/model.hpp"

namespace screendual {

enum class ConstraintKind : uint8_t { Nonnegativity, Monotonicity, Convexity };

/// One linear inequality a.u >= 0 over node values, stored as up to three
/// (node, coefficient) pairs.  Every constraint is homogeneous of degree one,
/// so the feasible set is a pointed convex cone.
struct LinearConstraint {
    ConstraintKind kind;
    int nodes[3];
    double coeff[3];
    int arity;

    double value(const std::vector<double>& u) const {
        double s = 0.0;
        for (int t = 0; t < arity; ++t) s += coeff[t] * u[nodes[t]];
        return s;
    }
};

/// The discrete admissible cone: nonnegativity, forward-difference
/// monotonicity along both axes, and directional second differences along
/// every stencil direction up to the configured width.  Ordering is
/// deterministic: nonnegativity by node, monotonicity by (axis, node),
/// convexity by (direction, node).
struct ConstraintSet {
    Grid grid;
    int stencil_width = 1;
    std::vector<LinearConstraint> constraints;
    int count_nonneg = 0, count_mono = 0, count_convex = 0;

    int size() const { return static_cast<int>(constraints.size()); }

    /// Largest violation max(0, -a.u) over the set.
    double max_violation(const std::vector<double>& u) const {
        double worst = 0.0;
        for (const auto& c : constraints) worst = std::max(worst, -c.value(u));
        return worst;
    }
};

inline ConstraintSet assemble_constraints(const ModelConfig& cfg, int w_stencil) {
    if (w_stencil < 1 || w_stencil > 3)
        throw std::invalid_argument("assemble_constraints: w_stencil must be 1, 2 or 3");
    const Grid& g = cfg.grid;
    ConstraintSet set;
    set.grid = g;
    set.stencil_width = w_stencil;

    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            LinearConstraint c{ConstraintKind::Nonnegativity, {g.index(i, j), 0, 0},
                               {1.0, 0.0, 0.0}, 1};
            set.constraints.push_back(c);
            ++set.count_nonneg;
        }
    for (int axis = 0; axis < 2; ++axis) {
        int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
        for (int i = 0; i + di < g.n; ++i)
            for (int j = 0; j + dj < g.n; ++j) {
                LinearConstraint c{ConstraintKind::Monotonicity,
                                   {g.index(i + di, j + dj), g.index(i, j), 0},
                                   {1.0, -1.0, 0.0}, 2};
                set.constraints.push_back(c);
                ++set.count_mono;
            }
    }
    for (auto [di, dj] : stencil_directions(w_stencil)) {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                int ip = i + di, jp = j + dj, im = i - di, jm = j - dj;
                if (ip < 0 || ip >= g.n || im < 0 || im >= g.n) continue;
                if (jp < 0 || jp >= g.n || jm < 0 || jm >= g.n) continue;
                LinearConstraint c{ConstraintKind::Convexity,
                                   {g.index(ip, jp), g.index(i, j), g.index(im, jm)},
                                   {1.0, -2.0, 1.0}, 3};
                set.constraints.push_back(c);
                ++set.count_convex;
            }
    }
    return set;
}

}  // namespace screendual
