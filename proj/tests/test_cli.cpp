#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = SCREENDUAL_CLI_PATH;

int run(const std::string& args) {
    std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json slurp_json(const fs::path& p) { return json::parse(slurp(p)); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("screendual_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string sub(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("solve-primal is bit-identical across reruns") {
    TempDir td("determinism");
    REQUIRE(run("solve-primal --a 0 --n 24 --out " + td.sub("r1")) == 0);
    REQUIRE(run("solve-primal --a 0 --n 24 --out " + td.sub("r2")) == 0);
    REQUIRE(slurp(td.path / "r1/payoff.csv") == slurp(td.path / "r2/payoff.csv"));
    json a = slurp_json(td.path / "r1/solve_report.json");
    json b = slurp_json(td.path / "r2/solve_report.json");
    a.erase("wall_time_ms");
    b.erase("wall_time_ms");
    REQUIRE(a == b);
}

TEST_CASE("config validation failures exit with status 2") {
    TempDir td("badcfg");
    {
        std::ofstream os(td.path / "bad.json");
        os << R"({"model":{"a":0.0},"bogus":1})";
    }
    REQUIRE(run("solve-primal --config " + td.sub("bad.json") + " --out " +
                td.sub("o")) == 2);
    {
        std::ofstream os(td.path / "bad2.json");
        os << R"({"model":{"a":-1.0}})";
    }
    REQUIRE(run("solve-primal --config " + td.sub("bad2.json") + " --out " +
                td.sub("o")) == 2);
    {
        std::ofstream os(td.path / "bad3.json");
        os << R"({"primal":{"w_stencil":7}})";
    }
    REQUIRE(run("solve-primal --config " + td.sub("bad3.json") + " --out " +
                td.sub("o")) == 2);
}

TEST_CASE("analytic solve at a = 0 exits 3 with a residual trace") {
    TempDir td("fbp0");
    REQUIRE(run("solve-analytic --a 0 --n 24 --out " + td.sub("o")) == 3);
    json rep = slurp_json(td.path / "o/fbp_report.json");
    REQUIRE(rep["status"] == "not_converged");
    REQUIRE(rep["degenerate_best"] == true);
    REQUIRE(rep["residual_trace"].size() >= 2);  // fallback plus rejected seeds
    // artifacts are still written, and the manifest records the failure
    REQUIRE(fs::exists(td.path / "o/payoff_analytic.csv"));
    json man = slurp_json(td.path / "o/manifest.json");
    REQUIRE(man["exit_status"] == 3);
}

TEST_CASE("manifest echoes every effective tolerance") {
    TempDir td("manifest");
    REQUIRE(run("solve-primal --a 0 --n 16 --out " + td.sub("o")) == 0);
    json man = slurp_json(td.path / "o/manifest.json");
    const json& cfg = man["config"];
    REQUIRE(cfg["primal"].contains("tol_feas"));
    REQUIRE(cfg["primal"].contains("tol_stat"));
    REQUIRE(cfg["primal"].contains("w_stencil"));
    REQUIRE(cfg["dual"].contains("tol_gamma"));
    REQUIRE(cfg["fbp"].contains("tol_match"));
    REQUIRE(cfg["fbp"].contains("step"));
    REQUIRE(cfg["fbp"].contains("knots"));
    REQUIRE(cfg["region"].contains("tau_rank"));
    REQUIRE(cfg["market"].contains("resolution"));
    REQUIRE(man.contains("seed"));
    REQUIRE(man.contains("timings_ms"));
    REQUIRE(man["version"] == "0.1.0");
}

TEST_CASE("certify and market run from a saved field") {
    TempDir td("fromfield");
    REQUIRE(run("solve-primal --a 0 --n 24 --out " + td.sub("o")) == 0);
    std::string field = td.sub("o/payoff.csv");
    REQUIRE(run("certify --a 0 --n 24 --input " + field + " --out " + td.sub("c")) ==
            0);
    json cert = slurp_json(td.path / "c/certificate.json");
    REQUIRE(cert["gap"].get<double>() >= -1e-8);
    REQUIRE(cert["certified"] == true);
    REQUIRE(cert["certificate_kind"] == "sampled");

    REQUIRE(run("simulate-market --a 0 --n 24 --input " + field + " --out " +
                td.sub("m")) == 0);
    json mkt = slurp_json(td.path / "m/market.json");
    REQUIRE(mkt["min_utility"].get<double>() >= 0.0);
    REQUIRE(mkt["ic_violation_10k"].get<double>() <= 1e-12);
    REQUIRE(mkt["bilevel_gap"].get<double>() <=
            mkt["tol_bilevel"].get<double>());
    REQUIRE(fs::exists(td.path / "m/histogram.csv"));
}

TEST_CASE("export-plots is byte-idempotent on a saved field") {
    TempDir td("plots");
    REQUIRE(run("solve-primal --a 0 --n 24 --out " + td.sub("o")) == 0);
    std::string field = td.sub("o/payoff.csv");
    REQUIRE(run("export-plots --a 0 --n 24 --input " + field + " --out " +
                td.sub("p1")) == 0);
    REQUIRE(run("export-plots --a 0 --n 24 --input " + field + " --out " +
                td.sub("p2")) == 0);
    for (const char* f : {"hessian_det.csv", "region_mask.csv", "histogram.csv"}) {
        REQUIRE(slurp(td.path / "p1" / f) == slurp(td.path / "p2" / f));
        REQUIRE_FALSE(slurp(td.path / "p1" / f).empty());
    }
}

TEST_CASE("rc-baseline reports both strip readings") {
    TempDir td("rc");
    REQUIRE(run("rc-baseline --a 0 --n 24 --out " + td.sub("o")) == 0);
    json rep = slurp_json(td.path / "o/rc_report.json");
    REQUIRE(rep["formula"]["strip_empty"] == true);
    REQUIRE(rep["figure"]["strip_empty"] == false);
    REQUIRE(rep["formula"]["max_mismatch"].get<double>() > 0.0);
}
