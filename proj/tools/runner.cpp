#include "runner.hpp"

#include <chrono>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "config.hpp"
#include "hvz/checks.hpp"
#include "hvz/eigensolve.hpp"
#include "hvz/thresholds.hpp"
#include "hvz/version.hpp"
#include "hvz/weyl.hpp"

namespace hvz::cli {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

// Checks taking longer than this in one "all" run draw a warning.
constexpr double all_checks_budget_seconds = 600.0;

struct Artifact {
    std::string file;
    std::string schema;
};

struct Outcome {
    std::vector<Artifact> artifacts;
    json summary = json::object();
    std::vector<std::string> warnings;
    std::vector<CheckRecord> failures;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path.string());
    out.precision(17);
    return out;
}

EigenOptions solver_options(const RunConfig& c) {
    EigenOptions o;
    o.count = c.eigen_count;
    o.tol = c.tol;
    o.max_matvecs = c.max_iter;
    o.seed = c.seed;
    return o;
}

FiberOptions fiber_options(const RunConfig& c) {
    FiberOptions o;
    o.tol = c.tol;
    o.max_matvecs = c.max_iter;
    o.seed = c.seed;
    return o;
}

MomentumGrid system_grid(const RunConfig& c) {
    return MomentumGrid::make(c.points, c.p_max, c.system.particle_count(), c.mode, c.memory_budget);
}

Outcome run_spectrum(const RunConfig& c, const fs::path& out, std::ostream& log) {
    const auto grid = system_grid(c);
    log << "spectrum: state dimension " << grid.state_dim() << '\n';
    const auto h = assemble_full(grid, c.system);

    std::unique_ptr<SymmetryProjector> permutation, point;
    std::unique_ptr<ProductOperator> both;
    auto options = solver_options(c);
    if (!c.permutation_irrep.empty()) {
        permutation = std::make_unique<SymmetryProjector>(
            FiniteGroup::permutation_group(c.system.particle_count(), c.system.identical), c.permutation_irrep, grid,
            c.system.masses);
        options.projector = permutation.get();
    }
    if (!c.point_group.empty()) {
        point = std::make_unique<SymmetryProjector>(FiniteGroup::point_group(c.point_group, c.convention),
                                                    c.point_irrep, grid, c.system.masses);
        options.projector = point.get();
    }
    if (permutation && point) {
        both = std::make_unique<ProductOperator>(*point, *permutation);
        options.projector = both.get();
    }
    const auto result = lowest_eigenpairs(h, options);

    Outcome o;
    auto csv = open_csv(out / "spectrum.csv");
    csv << "index,eigenvalue,residual,converged\n";
    for (std::size_t i = 0; i < result.values.size(); ++i)
        csv << i << ',' << result.values[i] << ',' << result.residuals[i] << ',' << (result.converged[i] ? 1 : 0)
            << '\n';
    o.artifacts.push_back({"spectrum.csv", "spectrum/1"});

    if (c.save_vectors)
        for (std::size_t i = 0; i < result.vectors.size(); ++i) {
            const auto& v = result.vectors[i];
            const std::string name = "state_" + std::to_string(i) + ".field";
            write_field(SpinorField(grid, Representation::momentum, std::vector<cplx>(v.data(), v.data() + v.size())),
                        (out / name).string());
            o.artifacts.push_back({name, "field-snapshot/1"});
        }

    o.summary["state_dim"] = grid.state_dim();
    o.summary["eigenvalues"] = result.values;
    o.summary["matvecs"] = result.matvecs;
    o.summary["all_converged"] = result.all_converged();
    if (!result.all_converged()) o.warnings.push_back("some eigenpairs did not reach the tolerance");
    log << "spectrum: lowest eigenvalue " << result.values.front() << '\n';
    return o;
}

Outcome run_threshold(const RunConfig& c, const fs::path& out, std::ostream& log) {
    const auto grid = system_grid(c);
    std::optional<FiniteGroup> point;
    if (!c.point_group.empty()) point = FiniteGroup::point_group(c.point_group, c.convention);

    ThresholdOptions options;
    options.symmetry = {point ? &*point : nullptr, c.point_irrep, c.permutation_irrep};
    options.solver = solver_options(c);
    options.dispersion.fiber = fiber_options(c);
    options.deduplicate = c.deduplicate;
    options.prune = c.prune;
    const auto report = hvz_threshold(grid, c.system, options);

    Outcome o;
    write_threshold_csv(report, (out / "threshold.csv").string());
    write_threshold_text(report, (out / "threshold.txt").string());
    auto csv = open_csv(out / "kappa.csv");
    csv << "first,second,kappa,multiplicity,attains_minimum\n";
    for (std::size_t i = 0; i < report.decompositions.size(); ++i) {
        const auto& d = report.decompositions[i];
        const bool argmin = std::find(report.argmin.begin(), report.argmin.end(), static_cast<int>(i)) !=
                            report.argmin.end();
        csv << cluster_label(d.z.first) << ',' << cluster_label(d.z.second) << ',';
        if (d.has_value) csv << d.kappa;
        csv << ',' << d.multiplicity << ',' << (argmin ? 1 : 0) << '\n';
    }
    o.artifacts.push_back({"threshold.csv", "threshold/1"});
    o.artifacts.push_back({"threshold.txt", "threshold-text/1"});
    o.artifacts.push_back({"kappa.csv", "kappa/1"});

    o.summary["kappa"] = report.kappa;
    o.summary["partial"] = report.partial;
    if (!std::isnan(report.witness)) o.summary["sector_witness"] = report.witness;
    if (report.partial) o.warnings.push_back("some branches failed; kappa is a partial minimum");
    log << "threshold: kappa " << report.kappa << (report.partial ? " (partial)" : "") << '\n';
    return o;
}

Outcome run_weyl(const RunConfig& c, const fs::path& out, std::ostream& log) {
    WeylStudyOptions options;
    options.points = c.points;
    options.box0 = c.box0;
    options.width0 = c.width0;
    options.separation0 = c.separation0;
    options.steps = c.weyl_steps;
    options.solver = solver_options(c);
    options.solver.count = 1;
    options.dispersion.fiber = fiber_options(c);
    options.memory_budget = c.memory_budget;
    const auto z = ClusterDecomposition::from_first(c.system.particle_count(), c.first_cluster);

    std::vector<WeylStudyRow> rows;
    json residuals = json::array();
    for (double offset : c.offsets) {
        options.offset = offset;
        const auto study = weyl_study(c.system, z, options);
        for (const auto& r : study) {
            log << "weyl: lambda " << r.lambda << " step " << r.step << " residual " << r.residual << '\n';
            residuals.push_back(r.residual);
        }
        rows.insert(rows.end(), study.begin(), study.end());
    }
    Outcome o;
    write_weyl_csv(rows, (out / "weyl.csv").string());
    o.artifacts.push_back({"weyl.csv", "weyl/1"});
    o.summary["residuals"] = residuals;
    return o;
}

Outcome run_checks(const std::string& suite, const CheckSettings& settings, const fs::path& out, std::ostream& log) {
    const auto t0 = Clock::now();
    const auto records = run_check_suite(suite, settings);
    const double elapsed = seconds_since(t0);

    Outcome o;
    write_checks_csv(records, (out / "checks.csv").string());
    o.artifacts.push_back({"checks.csv", "checks/1"});
    int passed = 0;
    for (const auto& r : records) {
        log << (r.pass ? "PASS " : "FAIL ") << r.id << " [" << r.parameters << "] value " << r.value << " bound "
            << r.bound << '\n';
        if (r.pass) ++passed;
        else o.failures.push_back(r);
    }
    o.summary["suite"] = suite;
    o.summary["passed"] = passed;
    o.summary["failed"] = o.failures.size();
    if (suite == "all" && elapsed > all_checks_budget_seconds)
        o.warnings.push_back("checks(all) took " + std::to_string(elapsed) + " s, beyond the 600 s budget");
    return o;
}

Outcome run_export(const std::string& path, const fs::path& out) {
    const auto field = read_field(path);
    const auto& grid = field.grid();
    const int n = grid.particles();
    const std::size_t sd = static_cast<std::size_t>(grid.spinor_dim());
    const bool momentum = field.representation() == Representation::momentum;
    const char* axis = momentum ? "p" : "x";

    auto csv = open_csv(out / "grid.csv");
    csv << "index";
    for (int k = 0; k < n; ++k)
        csv << ',' << axis << k << "_x," << axis << k << "_y," << axis << k << "_z,spinor" << k;
    csv << ",re,im\n";
    std::vector<std::size_t> site(n), comp(n);
    for (std::size_t i = 0; i < field.size(); ++i) {
        std::size_t rest = i;
        for (int k = n - 1; k >= 0; --k) {
            const std::size_t local = rest % grid.block();
            rest /= grid.block();
            site[k] = local / sd;
            comp[k] = local % sd;
        }
        csv << i;
        for (int k = 0; k < n; ++k) {
            const Vec3 r = momentum ? grid.momentum(site[k]) : grid.position(site[k]);
            csv << ',' << r[0] << ',' << r[1] << ',' << r[2] << ',' << comp[k];
        }
        csv << ',' << field.values()[i].real() << ',' << field.values()[i].imag() << '\n';
    }

    Outcome o;
    o.artifacts.push_back({"grid.csv", "grid/1"});
    o.summary["points_per_axis"] = grid.points();
    o.summary["p_max"] = grid.p_max();
    o.summary["particles"] = n;
    o.summary["spinor_dim"] = sd;
    o.summary["representation"] = momentum ? "momentum" : "position";
    o.summary["norm"] = field.norm();
    return o;
}

json error_json(const std::string& code, const std::string& message) {
    return json{{"status", "error"}, {"code", code}, {"message", message}};
}

// Records the error on `err` and, when possible, as error.json.
int fail(const fs::path& out, std::ostream& err, const json& record, int status) {
    err << record.dump() << '\n';
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!ec) {
        std::ofstream file(out / "error.json");
        if (file) file << record.dump(2) << '\n';
    }
    return status;
}

}  // namespace

std::string error_record(const std::string& code, const std::string& message) {
    return error_json(code, message).dump();
}

int run_command(const Invocation& inv, std::ostream& log, std::ostream& err) {
    const auto t0 = Clock::now();
    json manifest;
    manifest["schema_version"] = manifest_schema_version;
    manifest["command"] = inv.command;
    manifest["input"] = inv.input;

    Outcome outcome;
    double task_seconds = 0.0;
    try {
        if (inv.threads < 1) throw ConfigError(std::vector<ConfigIssue>{{"--threads", "must be at least 1"}});
        fs::create_directories(inv.out);

        if (inv.command == "run") {
            auto entries = load_config(inv.input);
            for (const auto& o : inv.overrides) apply_override(entries, o);
            if (inv.seed) entries["solver.seed"] = std::to_string(*inv.seed);
            const auto config = build_run_config(entries);
            manifest["config_format_version"] = config_format_version;
            manifest["config"] = config.resolved;
            manifest["overrides"] = inv.overrides;
            manifest["seeds"] = {{"solver", config.seed}};

            const auto t1 = Clock::now();
            switch (config.task) {
                case TaskKind::spectrum: outcome = run_spectrum(config, inv.out, log); break;
                case TaskKind::threshold: outcome = run_threshold(config, inv.out, log); break;
                case TaskKind::weyl: outcome = run_weyl(config, inv.out, log); break;
                case TaskKind::checks: {
                    CheckSettings settings;
                    settings.seed = config.seed;
                    outcome = run_checks(config.suite, settings, inv.out, log);
                    break;
                }
            }
            task_seconds = seconds_since(t1);
        } else if (inv.command == "checks") {
            CheckSettings settings;
            settings.seed = inv.seed.value_or(1);
            manifest["seeds"] = {{"checks", settings.seed}};
            const auto t1 = Clock::now();
            outcome = run_checks(inv.input, settings, inv.out, log);
            task_seconds = seconds_since(t1);
        } else if (inv.command == "export-grid") {
            const auto t1 = Clock::now();
            outcome = run_export(inv.input, inv.out);
            task_seconds = seconds_since(t1);
        } else {
            return fail(inv.out, err, error_json("usage", "unknown command '" + inv.command + "'"), exit_invalid_input);
        }
    } catch (const ConfigError& e) {
        auto record = error_json("invalid_config", "configuration rejected");
        record["issues"] = json::array();
        for (const auto& i : e.issues()) record["issues"].push_back({{"key", i.key}, {"message", i.message}});
        return fail(inv.out, err, record, exit_invalid_input);
    } catch (const Error& e) {
        const int status = e.code() == "unknown_suite" ? exit_invalid_input : exit_runtime_error;
        return fail(inv.out, err, error_json(e.code(), e.what()), status);
    } catch (const std::exception& e) {
        return fail(inv.out, err, error_json("internal", e.what()), exit_runtime_error);
    }

    manifest["threads"] = inv.threads;
    manifest["versions"] = component_versions();
    manifest["artifacts"] = json::array();
    for (const auto& a : outcome.artifacts) {
        json entry{{"file", a.file}, {"schema", a.schema}};
        if (a.file.ends_with(".csv")) entry["columns"] = first_line(inv.out / a.file);
        manifest["artifacts"].push_back(entry);
    }
    manifest["summary"] = outcome.summary;
    manifest["warnings"] = outcome.warnings;
    manifest["status"] = outcome.failures.empty() ? "ok" : "failed";
    manifest["wall_time_seconds"] = {{"task", task_seconds}, {"total", seconds_since(t0)}};
    for (const auto& w : outcome.warnings) err << "warning: " << w << '\n';

    try {
        write_json(inv.out / "manifest.json", manifest);
    } catch (const Error& e) {
        return fail(inv.out, err, error_json(e.code(), e.what()), exit_runtime_error);
    }

    if (!outcome.failures.empty()) {
        auto record = error_json("check_failed", std::to_string(outcome.failures.size()) + " check(s) failed");
        record["checks"] = json::array();
        for (const auto& r : outcome.failures)
            record["checks"].push_back(
                {{"check", r.id}, {"parameters", r.parameters}, {"value", r.value}, {"bound", r.bound}});
        return fail(inv.out, err, record, exit_failed_checks);
    }
    return exit_ok;
}

}  // namespace hvz::cli
