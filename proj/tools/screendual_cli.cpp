// Batch front door: configuration, subcommands, artifact export.
#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "screendual/config.hpp"
#include "screendual/dual.hpp"
#include "screendual/screendual.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace screendual;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Timings {
    json j = json::object();
    void add(const std::string& name, double ms) { j[name] = ms; }
};

class Stopwatch {
public:
    explicit Stopwatch(Timings& t, std::string name)
        : t_(t), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
        t_.add(name_, std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0_)
                          .count());
    }

private:
    Timings& t_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_manifest(const fs::path& dir, const RunConfig& cfg,
                    const std::string& subcommand, const Timings& timings,
                    const std::vector<std::string>& artifacts, int status) {
    json j;
    j["tool"] = "screendual";
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["config"] = config_to_json(cfg);
    j["seed"] = cfg.seed;
    j["threads"] = Eigen::nbThreads();
    j["timings_ms"] = timings.j;
    j["artifacts"] = artifacts;
    j["exit_status"] = status;
    write_json(dir / "manifest.json", j);
}

ScalarField load_or_solve(const RunConfig& cfg, const std::string& input,
                          Timings& timings) {
    if (!input.empty()) return load_scalar_csv_file(input);
    Stopwatch sw(timings, "solve_primal");
    auto [u, rep] = solve_primal(cfg.model(), cfg.primal);
    return u;
}

json mask_summary(const RegionMask& mask) {
    return {{"excluded", mask.area_fraction(RegionLabel::Excluded)},
            {"blunt_bunch", mask.area_fraction(RegionLabel::BluntBunch)},
            {"targeted_bunch", mask.area_fraction(RegionLabel::TargetedBunch)},
            {"customized", mask.area_fraction(RegionLabel::Customized)},
            {"tau_rank", mask.tau_rank}};
}

void export_mask_csv(const ScalarField& u, const RegionThresholds& thr,
                     const fs::path& path) {
    RegionMask mask = classify_regions(u, thr);
    std::ofstream os(path, std::ios::binary);
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

void export_det_csv(const ScalarField& u, const RegionThresholds& thr,
                    const fs::path& path) {
    RegionMask mask = classify_regions(u, thr);
    std::ofstream os(path, std::ios::binary);
    os << "x1,x2,det,lam1,lam2,label\n";
    const Grid& g = mask.grid;
    const int m = mask.cells_per_side();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            int k = mask.cell_index(i, j);
            os << detail::fmt17(g.a + (i + 0.5) * g.h()) << ','
               << detail::fmt17(g.a + (j + 0.5) * g.h()) << ','
               << detail::fmt17(mask.lam1[k] * mask.lam2[k]) << ','
               << detail::fmt17(mask.lam1[k]) << ',' << detail::fmt17(mask.lam2[k])
               << ',' << to_string(mask.label[k]) << '\n';
        }
}

void export_histogram_csv(const MarketOutcome& out, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    os << "y1,y2,mass\n";
    const RectGrid& pg = out.histogram_grid;
    for (int i = 0; i < pg.n1; ++i)
        for (int j = 0; j < pg.n2; ++j) {
            double mass = out.histogram[pg.index(i, j)];
            if (mass == 0.0) continue;
            os << detail::fmt17(pg.x1(i)) << ',' << detail::fmt17(pg.x2(j)) << ','
               << detail::fmt17(mass) << '\n';
        }
}

void export_polyline_csv(const std::vector<std::array<double, 2>>& pts,
                         const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    os << "x1,x2\n";
    for (const auto& p : pts)
        os << detail::fmt17(p[0]) << ',' << detail::fmt17(p[1]) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"screendual: square-market screening solver and certificates"};
    app.require_subcommand(1);

    std::string config_path, input_path, out_override;
    double a_override = -1.0;
    int n_override = 0;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--a", a_override, "square offset override");
    app.add_option("--n", n_override, "grid nodes per side override");
    app.add_option("--out", out_override, "output directory override");
    app.add_option("--input", input_path, "payoff field CSV (skip solving)");

    auto* sc_primal = app.add_subcommand("solve-primal", "projected cone maximization");
    auto* sc_analytic =
        app.add_subcommand("solve-analytic", "free-boundary candidate assembly");
    auto* sc_certify = app.add_subcommand("certify", "duality certificate for a payoff");
    auto* sc_compare =
        app.add_subcommand("compare", "primal vs analytic vs straight baseline");
    auto* sc_market = app.add_subcommand("simulate-market", "menu and best responses");
    auto* sc_rc = app.add_subcommand("rc-baseline", "straight-boundary ansatz report");
    auto* sc_plots = app.add_subcommand("export-plots", "contour-ready CSV artifacts");
    for (auto* sc : {sc_primal, sc_analytic, sc_certify, sc_compare, sc_market, sc_rc,
                     sc_plots})
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw ConfigError("cannot open config " + config_path);
            json j = json::parse(is);
            cfg = parse_config(j);
        }
        if (a_override >= 0.0) cfg.a = a_override;
        if (n_override > 0) cfg.n_grid = n_override;
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (cfg.a < 0.0 || cfg.n_grid < 8) throw ConfigError("invalid model parameters");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    if (const char* threads = std::getenv("SCREENDUAL_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    fs::create_directories(cfg.output_dir);
    const fs::path dir = cfg.output_dir;
    Timings timings;
    std::vector<std::string> artifacts;
    int status = 0;

    try {
        if (*sc_primal) {
            ScalarField u(Grid(cfg.a, cfg.n_grid));
            SolveReport rep;
            {
                Stopwatch sw(timings, "solve_primal");
                auto result = cfg.eps_schedule.empty()
                                  ? solve_primal(cfg.model(), cfg.primal)
                                  : solve_primal_continuation(cfg.model(),
                                                              cfg.eps_schedule,
                                                              cfg.primal);
                u = std::move(result.first);
                rep = std::move(result.second);
            }
            save_csv(u, (dir / "payoff.csv").string());
            write_json(dir / "solve_report.json", to_json(rep));
            artifacts = {"payoff.csv", "solve_report.json"};
            if (rep.status != SolveStatus::Converged) status = 3;
        } else if (*sc_analytic) {
            FreeBoundarySolution sol;
            {
                Stopwatch sw(timings, "solve_free_boundary");
                sol = solve_free_boundary(cfg.a, cfg.fbp_options());
            }
            save_csv(sol.u, (dir / "payoff_analytic.csv").string());
            write_json(dir / "foliation.json", to_json(sol.foliation));
            write_json(dir / "fbp_report.json", to_json(sol.report));
            export_polyline_csv(sol.geometry.interface_upper,
                                dir / "interface_upper.csv");
            export_polyline_csv(sol.geometry.interface_lower,
                                dir / "interface_lower.csv");
            export_polyline_csv(sol.geometry.exclusion_boundary,
                                dir / "exclusion_boundary.csv");
            artifacts = {"payoff_analytic.csv", "foliation.json", "fbp_report.json",
                         "interface_upper.csv", "interface_lower.csv",
                         "exclusion_boundary.csv"};
            if (sol.report.status != SolveStatus::Converged) status = 3;
        } else if (*sc_certify) {
            ScalarField u = load_or_solve(cfg, input_path, timings);
            DualCertificate cert;
            {
                Stopwatch sw(timings, "certify");
                cert = certify(u, cfg.model(), cfg.certify);
            }
            write_json(dir / "certificate.json", to_json(cert));
            artifacts = {"certificate.json"};
        } else if (*sc_compare) {
            json table;
            ModelConfig model = cfg.model();
            {
                Stopwatch sw(timings, "solve_primal");
                auto [u, rep] = solve_primal(model, cfg.primal);
                DualCertificate cert = certify(u, model, cfg.certify);
                table["primal"] = {{"phi", rep.phi},
                                   {"gap", cert.gap},
                                   {"gamma_residual", cert.gamma_residual},
                                   {"status", rep.status == SolveStatus::Converged
                                                  ? "converged"
                                                  : "not_converged"}};
                save_csv(u, (dir / "payoff.csv").string());
            }
            FreeBoundarySolution sol;
            {
                Stopwatch sw(timings, "solve_free_boundary");
                sol = solve_free_boundary(cfg.a, cfg.fbp_options());
                DualCertificate cert = certify(sol.u, model, cfg.certify);
                table["analytic"] = {
                    {"phi", evaluate_phi(sol.u, model)},
                    {"gap", cert.gap},
                    {"mismatch", sol.report.max_mismatch},
                    {"degenerate_best", sol.report.degenerate_best},
                    {"status", sol.report.status == SolveStatus::Converged
                                   ? "converged"
                                   : "not_converged"}};
                save_csv(sol.u, (dir / "payoff_analytic.csv").string());
                if (sol.report.status != SolveStatus::Converged) status = 3;
            }
            {
                Stopwatch sw(timings, "rc_baseline");
                auto [rc_u, rc_rep] = rc_baseline(cfg.a, model);
                table["rc_baseline"] = to_json(rc_rep);
            }
            // sup-norm agreement between the two routes
            {
                ScalarField up = load_scalar_csv_file((dir / "payoff.csv").string());
                double worst = 0.0;
                for (int k = 0; k < up.grid.num_nodes(); ++k)
                    worst = std::max(worst, std::abs(up.v[k] - sol.u.v[k]));
                table["cross_route"] = {
                    {"sup_distance", worst},
                    {"phi_difference",
                     std::abs(table["primal"]["phi"].get<double>() -
                              table["analytic"]["phi"].get<double>())}};
            }
            write_json(dir / "compare.json", table);
            artifacts = {"compare.json", "payoff.csv", "payoff_analytic.csv"};
        } else if (*sc_market) {
            ScalarField u = load_or_solve(cfg, input_path, timings);
            MarketOutcome out;
            {
                Stopwatch sw(timings, "simulate_market");
                MarketOptions mo;
                mo.menu = cfg.menu;
                mo.tol_bilevel = cfg.tol_bilevel;
                out = simulate_market(u, cfg.model(), mo);
            }
            json j;
            j["profit"] = out.profit;
            j["phi"] = out.phi;
            j["bilevel_gap"] = std::abs(out.profit - out.phi);
            j["tol_bilevel"] =
                cfg.tol_bilevel > 0.0 ? cfg.tol_bilevel : 20.0 / (cfg.n_grid - 1);
            j["exclusion_fraction"] = out.exclusion_fraction;
            j["min_utility"] = out.min_utility;
            j["menu_provenance"] = out.menu.provenance;
            j["menu_boundary_fraction"] = out.menu.boundary_fraction;
            j["ic_violation_10k"] = ic_violation_sample(out, u.grid, 10000, cfg.seed);
            write_json(dir / "market.json", j);
            export_histogram_csv(out, dir / "histogram.csv");
            artifacts = {"market.json", "histogram.csv"};
        } else if (*sc_rc) {
            ModelConfig model = cfg.model();
            Stopwatch sw(timings, "rc_baseline");
            auto [u, rep] = rc_baseline(cfg.a, model);
            save_csv(u, (dir / "payoff_rc.csv").string());
            write_json(dir / "rc_report.json", to_json(rep));
            artifacts = {"payoff_rc.csv", "rc_report.json"};
        } else if (*sc_plots) {
            ScalarField u = load_or_solve(cfg, input_path, timings);
            {
                Stopwatch sw(timings, "export_plots");
                export_det_csv(u, cfg.region, dir / "hessian_det.csv");
                export_mask_csv(u, cfg.region, dir / "region_mask.csv");
                MarketOptions mo;
                mo.menu = cfg.menu;
                MarketOutcome out = simulate_market(u, cfg.model(), mo);
                export_histogram_csv(out, dir / "histogram.csv");
            }
            artifacts = {"hessian_det.csv", "region_mask.csv", "histogram.csv"};
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_manifest(dir, cfg, app.get_subcommands().front()->get_name(), timings,
                       artifacts, 1);
        return 1;
    }

    write_manifest(dir, cfg, app.get_subcommands().front()->get_name(), timings,
                   artifacts, status);
    if (status != 0)
        std::cerr << "solver did not converge; artifacts written with status "
                  << status << "\n";
    return status;
}
