#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "config.hpp"
#include "dense_oracles.hpp"
#include "hvz/grid.hpp"
#include "runner.hpp"

using namespace hvz;
using namespace hvz::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hvz_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> issue_keys(const ConfigEntries& entries) {
    try {
        build_run_config(entries);
    } catch (const ConfigError& e) {
        std::vector<std::string> keys;
        for (const auto& i : e.issues()) keys.push_back(i.key);
        return keys;
    }
    return {};
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

int invoke(Invocation inv, std::string* err_text = nullptr) {
    std::ostringstream log, err;
    const int status = run_command(inv, log, err);
    if (err_text) *err_text = err.str();
    return status;
}

const char* free_config = R"(
task.type = spectrum
system.masses = 1.3   # one particle
discretization.points_per_axis = 6
discretization.p_max = 2.5
solver.k = 2
solver.tol = 1e-12
)";

}  // namespace

TEST_CASE("config text") {
    const auto e = parse_config("# comment\n a.b = 1 \n\nc.d=x y # trailing\n");
    CHECK(e.size() == 2);
    CHECK(e.at("a.b") == "1");
    CHECK(e.at("c.d") == "x y");

    try {
        parse_config("a.b = 1\nnovalue\nplain = 2\na.b = 3\n");
        FAIL("expected rejection");
    } catch (const ConfigError& err) {
        REQUIRE(err.issues().size() == 3);
        CHECK(err.issues()[0].key == "line 2");
        CHECK(err.issues()[1].key == "line 3");
        CHECK(err.issues()[2].key == "a.b");
    }

    auto entries = parse_config(free_config);
    apply_override(entries, "solver.k=5");
    apply_override(entries, "system.external.0 = coulomb 0.3");
    CHECK(entries.at("solver.k") == "5");
    CHECK(entries.at("system.external.0") == "coulomb 0.3");
    CHECK_THROWS_AS(apply_override(entries, "nodot"), ConfigError);
}

TEST_CASE("run config resolution") {
    const auto c = build_run_config(parse_config(free_config));
    CHECK(c.task == TaskKind::spectrum);
    CHECK(c.system.masses == std::vector<double>{1.3});
    CHECK(c.eigen_count == 2);
    CHECK(c.resolved.at("solver.max_iter") == "5000");
    CHECK(c.resolved.at("discretization.spinor_mode") == "compressed");

    auto entries = parse_config(free_config);
    entries["task.type"] = "weyl";
    entries["system.masses"] = "1, 1";
    entries["system.external.0"] = "coulomb 0.5";
    entries["task.offsets"] = "0, 0.2";
    entries.erase("solver.k");
    const auto w = build_run_config(entries);
    CHECK(w.first_cluster == std::vector<int>{0});
    CHECK(w.offsets == std::vector<double>{0.0, 0.2});
    CHECK(w.box0 == doctest::Approx(std::numbers::pi * 6 / 2.5));
    CHECK(w.system.external.size() == 2);
    CHECK_FALSE(w.system.external[1].has_value());
}

TEST_CASE("validation lists every violation") {
    auto entries = parse_config(free_config);
    entries.erase("system.masses");
    entries["solver.k"] = "0";
    entries["system.colour"] = "red";
    entries["discretization.points_per_axis"] = "7";
    const auto keys = issue_keys(entries);
    CHECK(keys.size() == 4);
    CHECK(contains(keys, "system.masses"));
    CHECK(contains(keys, "solver.k"));
    CHECK(contains(keys, "system.colour"));
    CHECK(contains(keys, "discretization.points_per_axis"));

    // Identical particles must agree in mass and fields; both are reported.
    auto pair = parse_config(free_config);
    pair["system.masses"] = "1, 2";
    pair["system.identical"] = "0 1";
    pair["system.external.0"] = "coulomb 0.5";
    const auto ident = issue_keys(pair);
    CHECK(contains(ident, "system.masses"));
    CHECK(contains(ident, "system.external"));

    auto bad = parse_config(free_config);
    bad["symmetry.point_group"] = "Oh";
    bad["symmetry.point_irrep"] = "A1";
    bad["system.external.0"] = "harmonic 2";
    bad["discretization.spinor_mode"] = "full";
    const auto more = issue_keys(bad);
    CHECK(contains(more, "symmetry.point_group"));
    CHECK(contains(more, "system.external.0"));
    CHECK(contains(more, "discretization.spinor_mode"));

    CHECK(contains(issue_keys(parse_config("task.type = checks\ntask.suite = nope\n")), "task.suite"));
    CHECK(contains(issue_keys(parse_config("system.masses = 1\n")), "task.type"));
}

TEST_CASE("spectrum run writes CSV and manifest") {
    const auto dir = scratch("spectrum");
    const auto cfg = write_text(dir / "free.cfg", free_config);
    Invocation inv{"run", cfg.string(), dir / "out"};
    inv.overrides = {"task.save_vectors=true"};
    REQUIRE(invoke(inv) == exit_ok);

    std::ifstream csv(dir / "out" / "spectrum.csv");
    std::string header, row;
    std::getline(csv, header);
    CHECK(header == "index,eigenvalue,residual,converged");
    std::getline(csv, row);
    const double lambda = std::stod(row.substr(row.find(',') + 1));
    CHECK(std::abs(lambda - 1.3) < 1e-10);

    const auto manifest = json::parse(read_text(dir / "out" / "manifest.json"));
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["config"]["system.masses"] == "1.3");
    CHECK(manifest["config"]["task.save_vectors"] == "true");
    CHECK(manifest["seeds"]["solver"] == 1);
    CHECK(manifest["versions"].contains("eigen"));
    CHECK(manifest["wall_time_seconds"].contains("total"));
    CHECK(manifest["artifacts"][0]["columns"] == header);

    // The saved eigenvector exports as one CSV row per coefficient.
    Invocation ex{"export-grid", (dir / "out" / "state_0.field").string(), dir / "grid"};
    REQUIRE(invoke(ex) == exit_ok);
    const auto field = read_field((dir / "out" / "state_0.field").string());
    std::ifstream grid(dir / "grid" / "grid.csv");
    std::string line;
    std::getline(grid, line);
    CHECK(line == "index,p0_x,p0_y,p0_z,spinor0,re,im");
    std::size_t rows = 0;
    double norm2 = 0.0;
    while (std::getline(grid, line)) {
        std::vector<double> cols;
        std::stringstream s(line);
        for (std::string cell; std::getline(s, cell, ',');) cols.push_back(std::stod(cell));
        REQUIRE(cols.size() == 7);
        norm2 += cols[5] * cols[5] + cols[6] * cols[6];
        ++rows;
    }
    CHECK(rows == field.size());
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("threshold run matches the cluster formula") {
    const auto dir = scratch("threshold");
    const auto cfg = write_text(dir / "t.cfg", R"(
task.type = threshold
system.masses = 1.0, 1.5
system.external.0 = coulomb 0.5
discretization.points_per_axis = 6
discretization.p_max = 2.5
)");
    REQUIRE(invoke({"run", cfg.string(), dir / "out"}) == exit_ok);
    const auto manifest = json::parse(read_text(dir / "out" / "manifest.json"));
    const double kappa = manifest["summary"]["kappa"];

    // Dense ground energy of the bound particle plus the rest mass of the free one.
    const auto grid = MomentumGrid::make(6, 2.5, 1, SpinorMode::compressed);
    const auto coulomb = Potential::coulomb(0.5);
    Eigen::SelfAdjointEigenSolver<CMat> es(testsupport::dense_one_particle(grid, 1.0, &coulomb),
                                           Eigen::EigenvaluesOnly);
    CHECK(std::abs(kappa - (es.eigenvalues()[0] + 1.5)) < 1e-8);
    CHECK(read_text(dir / "out" / "kappa.csv").find("attains_minimum") != std::string::npos);
}

TEST_CASE("failures produce error records") {
    const auto dir = scratch("errors");
    const auto cfg = write_text(dir / "bad.cfg", "task.type = spectrum\ndiscretization.p_max = 2\n");
    std::string err;
    CHECK(invoke({"run", cfg.string(), dir / "out"}, &err) == exit_invalid_input);
    const auto record = json::parse(err);
    CHECK(record["code"] == "invalid_config");
    std::vector<std::string> keys;
    for (const auto& i : record["issues"]) keys.push_back(i["key"]);
    CHECK(contains(keys, "system.masses"));
    CHECK(contains(keys, "discretization.points_per_axis"));
    CHECK(fs::exists(dir / "out" / "error.json"));

    CHECK(invoke({"checks", "bogus", dir / "suite"}, &err) == exit_invalid_input);
    CHECK(json::parse(err)["code"] == "unknown_suite");

    Invocation threads{"checks", "multiplier", dir / "threads"};
    threads.threads = 0;
    CHECK(invoke(threads) == exit_invalid_input);

    CHECK(invoke({"export-grid", (dir / "missing.field").string(), dir / "grid"}, &err) == exit_runtime_error);
}

TEST_CASE("checks command") {
    const auto dir = scratch("checks");
    REQUIRE(invoke({"checks", "multiplier", dir}) == exit_ok);
    const auto manifest = json::parse(read_text(dir / "manifest.json"));
    CHECK(manifest["summary"]["failed"] == 0);
    CHECK(manifest["artifacts"][0]["columns"] == "check,parameters,value,bound,pass");
}

TEST_CASE("identical seeds give identical CSV") {
    const auto dir = scratch("determinism");
    const auto cfg = write_text(dir / "free.cfg", free_config);
    Invocation a{"run", cfg.string(), dir / "a"}, b{"run", cfg.string(), dir / "b"};
    a.seed = b.seed = 11;
    a.overrides = b.overrides = {"system.external.0=yukawa 0.6 0.5"};
    REQUIRE(invoke(a) == exit_ok);
    REQUIRE(invoke(b) == exit_ok);
    CHECK(read_text(dir / "a" / "spectrum.csv") == read_text(dir / "b" / "spectrum.csv"));
}
