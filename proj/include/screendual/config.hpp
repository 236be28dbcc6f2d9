#pragma once

#include <json.hpp>
#include <set>
#include <string>

#include "screendual/dual.hpp"
#include "screendual/fbp_solver.hpp"
#include "screendual/market.hpp"
#include "screendual/model.hpp"
#include "screendual/primal.hpp"
#include "screendual/region.hpp"

namespace screendual {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Full run configuration with every default materialized, so the manifest
/// can echo the exact tolerances that were in effect.  Unknown keys are
/// rejected rather than ignored.
struct RunConfig {
    double a = 0.0;
    int n_grid = 64;
    std::string cost = "quadratic";

    PrimalOptions primal;
    std::vector<double> eps_schedule;  // empty: plain solve
    CertifyOptions certify;
    RegionThresholds region;
    FreeBoundaryOptions fbp;  // fbp.n_grid == 0 means "use model n_grid"
    PriceMenuOptions menu;
    double tol_bilevel = 0.0;  // 0 means 20 * h_grid

    uint64_t seed = 0;
    std::string output_dir = "out";

    RunConfig() { fbp.n_grid = 0; }

    ModelConfig model() const {
        CostSpec cs = cost == "quartic" ? CostSpec::quartic() : CostSpec::quadratic();
        return ModelConfig(a, n_grid, std::move(cs));
    }
    FreeBoundaryOptions fbp_options() const {
        FreeBoundaryOptions o = fbp;
        if (o.n_grid <= 0) o.n_grid = n_grid;
        return o;
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& scope,
                         const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + scope + it.key() + "'");
}

template <class T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig c;
    detail::require_keys(j, "", {"model", "primal", "dual", "region", "fbp", "market",
                                 "seed", "output_dir"});
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::require_keys(m, "model.", {"a", "n_grid", "cost"});
        detail::read_into(m, "a", c.a);
        detail::read_into(m, "n_grid", c.n_grid);
        detail::read_into(m, "cost", c.cost);
        if (c.a < 0.0) throw ConfigError("model.a must be >= 0");
        if (c.n_grid < 8) throw ConfigError("model.n_grid must be >= 8");
        if (c.cost != "quadratic" && c.cost != "quartic")
            throw ConfigError("model.cost must be 'quadratic' or 'quartic'");
    }
    if (j.contains("primal")) {
        const auto& p = j.at("primal");
        detail::require_keys(p, "primal.",
                             {"max_iter", "polish_max_iter", "tol_feas", "tol_stat",
                              "w_stencil", "eps_schedule"});
        detail::read_into(p, "max_iter", c.primal.max_iter);
        detail::read_into(p, "polish_max_iter", c.primal.polish_max_iter);
        detail::read_into(p, "tol_feas", c.primal.tol_feas);
        detail::read_into(p, "tol_stat", c.primal.tol_stat);
        detail::read_into(p, "w_stencil", c.primal.w_stencil);
        detail::read_into(p, "eps_schedule", c.eps_schedule);
        if (c.primal.w_stencil < 1 || c.primal.w_stencil > 3)
            throw ConfigError("primal.w_stencil must be 1, 2 or 3");
    }
    if (j.contains("dual")) {
        const auto& d = j.at("dual");
        detail::require_keys(d, "dual.", {"tol_gamma", "lattice", "eps"});
        detail::read_into(d, "tol_gamma", c.certify.tol_gamma);
        detail::read_into(d, "lattice", c.certify.lattice);
        detail::read_into(d, "eps", c.certify.eps);
    }
    if (j.contains("region")) {
        const auto& r = j.at("region");
        detail::require_keys(r, "region.", {"tau_rank", "tau_angle_deg"});
        detail::read_into(r, "tau_rank", c.region.tau_rank);
        detail::read_into(r, "tau_angle_deg", c.region.tau_angle_deg);
    }
    if (j.contains("fbp")) {
        const auto& f = j.at("fbp");
        detail::require_keys(f, "fbp.",
                             {"tol_match", "step", "knots", "theta_bar", "knot_span",
                              "max_outer", "mismatch_samples", "n_grid", "coarse_seed"});
        detail::read_into(f, "tol_match", c.fbp.tol_match);
        detail::read_into(f, "step", c.fbp.step);
        detail::read_into(f, "knots", c.fbp.knots);
        detail::read_into(f, "theta_bar", c.fbp.theta_bar);
        detail::read_into(f, "knot_span", c.fbp.knot_span);
        detail::read_into(f, "max_outer", c.fbp.max_outer);
        detail::read_into(f, "mismatch_samples", c.fbp.mismatch_samples);
        detail::read_into(f, "n_grid", c.fbp.n_grid);
        detail::read_into(f, "coarse_seed", c.fbp.coarse_seed);
        if (c.fbp.knots < 4) throw ConfigError("fbp.knots must be >= 4");
        if (!(c.fbp.step > 0.0)) throw ConfigError("fbp.step must be > 0");
    }
    if (j.contains("market")) {
        const auto& m = j.at("market");
        detail::require_keys(m, "market.", {"resolution", "margin", "tol_bilevel"});
        detail::read_into(m, "resolution", c.menu.resolution);
        detail::read_into(m, "margin", c.menu.margin);
        detail::read_into(m, "tol_bilevel", c.tol_bilevel);
    }
    detail::read_into(j, "seed", c.seed);
    detail::read_into(j, "output_dir", c.output_dir);
    c.primal.seed = c.seed;
    return c;
}

/// Full echo of the effective configuration, defaults included.
inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["model"] = {{"a", c.a}, {"n_grid", c.n_grid}, {"cost", c.cost}};
    j["primal"] = {{"max_iter", c.primal.max_iter},
                   {"polish_max_iter", c.primal.polish_max_iter},
                   {"tol_feas", c.primal.tol_feas},
                   {"tol_stat", c.primal.tol_stat},
                   {"w_stencil", c.primal.w_stencil},
                   {"eps_schedule", c.eps_schedule}};
    j["dual"] = {{"tol_gamma", c.certify.tol_gamma},
                 {"lattice", c.certify.lattice},
                 {"eps", c.certify.eps}};
    j["region"] = {{"tau_rank", c.region.tau_rank},
                   {"tau_angle_deg", c.region.tau_angle_deg}};
    j["fbp"] = {{"tol_match", c.fbp.tol_match},
                {"step", c.fbp.step},
                {"knots", c.fbp.knots},
                {"theta_bar", c.fbp.theta_bar},
                {"knot_span", c.fbp.knot_span},
                {"max_outer", c.fbp.max_outer},
                {"mismatch_samples", c.fbp.mismatch_samples},
                {"n_grid", c.fbp.n_grid},
                {"coarse_seed", c.fbp.coarse_seed}};
    j["market"] = {{"resolution", c.menu.resolution},
                   {"margin", c.menu.margin},
                   {"tol_bilevel", c.tol_bilevel}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j;
}

// --- report serialization ---------------------------------------------------

inline nlohmann::json to_json(const SolveReport& r, bool include_timing = true) {
    nlohmann::json j;
    j["status"] = r.status == SolveStatus::Converged ? "converged" : "not_converged";
    j["iterations"] = r.iterations;
    j["polish_iterations"] = r.polish_iterations;
    j["phi"] = r.phi;
    j["max_constraint_violation"] = r.max_violation;
    j["projected_gradient_norm"] = r.projected_gradient_norm;
    j["pairwise_convexity_gap"] = r.pairwise_convexity_gap;
    j["step_history"] = r.step_history;
    j["phi_history"] = r.phi_history;
    if (include_timing) j["wall_time_ms"] = r.wall_time_ms;
    return j;
}

inline nlohmann::json to_json(const DualCertificate& c) {
    nlohmann::json j;
    j["dual_value"] = c.dual_value;
    j["phi"] = c.phi;
    j["gap"] = c.gap;
    j["gamma_residual"] = c.gamma_residual;
    j["worst_violator"] = c.worst_violator;
    j["slackness_r1"] = c.slackness_r1;
    j["slackness_r2"] = c.slackness_r2;
    j["test_family_size"] = c.test_family_size;
    j["certified"] = c.certified;
    j["tol_gamma"] = c.tol_gamma;
    j["certificate_kind"] = "sampled";  // membership checked on a finite family
    return j;
}

inline nlohmann::json to_json(const BunchFoliation& fol, int stride = 10) {
    nlohmann::json arr = nlohmann::json::array();
    for (int k = 0; k < fol.size(); k += stride) {
        arr.push_back({{"theta", fol.theta[k]},
                       {"m", fol.m[k]},
                       {"m_prime", fol.mp[k]},
                       {"h", fol.h[k]},
                       {"b", fol.b[k]},
                       {"R", fol.R[k]}});
    }
    return arr;
}

inline nlohmann::json to_json(const FreeBoundaryReport& r, bool include_timing = true) {
    nlohmann::json j;
    j["status"] = r.status == SolveStatus::Converged ? "converged" : "not_converged";
    j["iterations"] = r.iterations;
    j["max_mismatch"] = r.max_mismatch;
    j["interface_line_deviation"] = r.interface_line_deviation;
    j["degenerate_best"] = r.degenerate_best;
    j["seam_discrepancy"] = r.seam_discrepancy;
    j["message"] = r.message;
    if (include_timing) j["wall_time_ms"] = r.wall_time_ms;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& e : r.trace) {
        trace.push_back({{"iter", e.iter},
                         {"max_mismatch", e.max_mismatch},
                         {"rms_mismatch", e.rms_mismatch},
                         {"h_low", e.h_low},
                         {"note", e.note}});
    }
    j["residual_trace"] = trace;
    return j;
}

inline nlohmann::json to_json(const RcBaselineReport& r) {
    auto var = [](const RcBaselineVariant& v) {
        nlohmann::json j;
        j["name"] = v.name;
        j["tau0"] = v.tau0;
        j["tau1"] = v.tau1;
        j["strip_width"] = v.tau1 - v.tau0;
        j["strip_empty"] = v.strip_empty;
        j["max_mismatch"] = v.max_mismatch;
        if (std::isfinite(v.phi))
            j["phi"] = v.phi;
        else
            j["phi"] = nullptr;  // ansatz left the admissible cone
        return j;
    };
    nlohmann::json j;
    j["formula"] = var(r.formula);
    j["figure"] = var(r.figure);
    j["note"] = "the two published readings of the strip constants disagree at a = 0";
    return j;
}

}  // namespace screendual
