#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "screendual/grid.hpp"
#include "screendual/legendre.hpp"
#include "screendual/model.hpp"

namespace screendual {

/// Posted prices over a product grid, derived from a payoff field by the
/// discrete conjugate.  On products the payoff actually assigns the prices
/// are exact; elsewhere they are the lower envelope consistent with the
/// assignment (reported as provenance).
struct PriceMenu {
    RectField v;                 // price samples over the product grid
    std::string provenance;      // which payoff the menu was derived from
    double boundary_fraction = 0.0;

    double price(int i, int j) const { return v(i, j); }
};

struct PriceMenuOptions {
    int resolution = 0;     // product nodes per axis; 0 means the agent grid's n
    double margin = 0.10;   // padding beyond the gradient range
};

/// Menu as the conjugate of the payoff over the type square, evaluated on
/// the bounding box of the gradient range (products below zero are never
/// demanded, so the box is clipped to the cone).
inline PriceMenu price_menu(const ScalarField& u, const ModelConfig& cfg,
                            const PriceMenuOptions& opts = {},
                            const std::string& provenance = "payoff") {
    int m = opts.resolution > 0 ? opts.resolution : u.grid.n;
    VectorField du = gradient(u);
    double hi1 = 0.0, hi2 = 0.0;
    for (double z : du.g1) hi1 = std::max(hi1, z);
    for (double z : du.g2) hi2 = std::max(hi2, z);
    double pad1 = opts.margin * std::max(hi1, 1e-3);
    double pad2 = opts.margin * std::max(hi2, 1e-3);
    RectGrid box = RectGrid::from_box(0.0, hi1 + pad1, 0.0, hi2 + pad2, m, m);
    LegendreResult lt = legendre_transform(RectField::from_scalar(u), box);
    PriceMenu menu;
    menu.v = std::move(lt.value);
    menu.provenance = provenance;
    menu.boundary_fraction = lt.boundary_fraction;
    // normalize the outside option: v(0) = sup(-u) = -min u, zero for any
    // admissible payoff; pin it against rounding
    menu.v(0, 0) = std::max(menu.v(0, 0), 0.0);
    return menu;
}

struct BestResponse {
    double y1 = 0.0, y2 = 0.0;
    double utility = 0.0;
    int i = -1, j = -1;  // product grid node; (-1,-1) is the outside option
};

/// Exhaustive argmax of x.y - v(y) over the product grid plus the outside
/// option.  Ties break toward larger y1 + y2, then lexicographically.
inline BestResponse best_response(const PriceMenu& menu, double x1, double x2) {
    const RectGrid& pg = menu.v.grid;
    BestResponse best;  // outside option: y = 0, utility 0
    best.utility = 0.0;
    for (int i = 0; i < pg.n1; ++i)
        for (int j = 0; j < pg.n2; ++j) {
            double y1 = pg.x1(i), y2 = pg.x2(j);
            double util = x1 * y1 + x2 * y2 - menu.v(i, j);
            double cur_sum = best.y1 + best.y2, new_sum = y1 + y2;
            bool better = util > best.utility + 1e-15;
            bool tie = std::abs(util - best.utility) <= 1e-15;
            if (better || (tie && (new_sum > cur_sum + 1e-15 ||
                                   (std::abs(new_sum - cur_sum) <= 1e-15 &&
                                    (y1 > best.y1 + 1e-15))))) {
                best = {y1, y2, util, i, j};
            }
        }
    return best;
}

struct MarketOutcome {
    double profit = 0.0;             // monopolist profit from the replay
    double phi = 0.0;                // reduced-form objective of the payoff
    double exclusion_fraction = 0.0; // f-mass of agents taking the outside option
    double min_utility = 0.0;
    PriceMenu menu;
    std::vector<double> chosen_y1, chosen_y2, utility;  // per agent node
    RectGrid histogram_grid;
    std::vector<double> histogram;   // f-mass per product cell
};

struct MarketOptions {
    PriceMenuOptions menu;
    double tol_bilevel = 0.0;  // 0 means default 20 * h_grid; reported, not enforced
};

/// Replays the bilevel game: builds the menu from the payoff, lets every
/// grid agent best-respond, and accumulates profit and the product-choice
/// histogram.  The replayed profit must track the reduced-form objective.
inline MarketOutcome simulate_market(const ScalarField& u, const ModelConfig& cfg,
                                     const MarketOptions& opts = {}) {
    MarketOutcome out;
    out.menu = price_menu(u, cfg, opts.menu);
    out.phi = evaluate_phi(u, cfg);
    const Grid& g = u.grid;
    const RectGrid& pg = out.menu.v.grid;
    out.chosen_y1.resize(static_cast<size_t>(g.num_nodes()));
    out.chosen_y2.resize(out.chosen_y1.size());
    out.utility.resize(out.chosen_y1.size());
    out.histogram_grid = pg;
    out.histogram.assign(static_cast<size_t>(pg.num_nodes()), 0.0);

    double profit = 0.0, excluded = 0.0, total = 0.0, min_util = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            int k = g.index(i, j);
            BestResponse br = best_response(out.menu, g.x1(i), g.x2(j));
            out.chosen_y1[k] = br.y1;
            out.chosen_y2[k] = br.y2;
            out.utility[k] = br.utility;
            min_util = std::min(min_util, br.utility);
            double w = trapezoid_weight(g, i, j) * cfg.f(i, j);
            total += w;
            if (br.i < 0 || (br.y1 == 0.0 && br.y2 == 0.0)) {
                excluded += w;
            } else {
                out.histogram[pg.index(br.i, br.j)] += w;
            }
            double price = br.i < 0 ? 0.0 : out.menu.v(br.i, br.j);
            profit += w * (price - cfg.cost.c(br.y1, br.y2));
        }
    out.profit = profit;
    out.exclusion_fraction = excluded / total;
    out.min_utility = min_util;
    return out;
}

/// Spot check of incentive compatibility on random agent pairs: no agent
/// prefers another agent's assigned bundle at the posted price.
inline double ic_violation_sample(const MarketOutcome& out, const Grid& g,
                                  int n_pairs, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, g.num_nodes() - 1);
    double worst = 0.0;
    for (int s = 0; s < n_pairs; ++s) {
        int ka = pick(rng), kb = pick(rng);
        int ia = ka / g.n, ja = ka % g.n;
        double x1 = g.x1(ia), x2 = g.x2(ja);
        // utility of taking agent b's bundle at its effective price
        double util_a = out.utility[ka];
        double price_b =
            x1 * out.chosen_y1[kb] + x2 * out.chosen_y2[kb];  // value part
        // reconstruct b's paid price from b's own utility
        int ib = kb / g.n, jb = kb % g.n;
        double paid_b = g.x1(ib) * out.chosen_y1[kb] + g.x2(jb) * out.chosen_y2[kb] -
                        out.utility[kb];
        double util_mimic = price_b - paid_b;
        worst = std::max(worst, util_mimic - util_a);
    }
    return worst;
}

}  // namespace screendual
