#include <iostream>

#include <CLI11.hpp>

#include "hvz/checks.hpp"
#include "hvz/version.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
    using namespace hvz::cli;

    CLI::App app{"Thresholds, spectra and property checks for projected N-particle Dirac operators", "hvz"};
    app.set_version_flag("--version", std::string(hvz::library_version));
    app.require_subcommand(1);

    Invocation inv;
    std::string out = inv.out.string();
    std::uint64_t seed = 0;
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--threads", inv.threads, "Cap on worker threads")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Seed for solvers and random checks");
    app.add_option("--override", inv.overrides, "Replace one config entry (key=value); repeatable");

    auto* run = app.add_subcommand("run", "Run the task described by a config file");
    run->add_option("config", inv.input, "Config file (section.key = value lines)")->required();

    auto* checks = app.add_subcommand("checks", "Run a property check suite");
    checks->add_option("suite", inv.input, "Suite name")->required()->check(CLI::IsMember(hvz::check_suite_names()));

    auto* export_grid = app.add_subcommand("export-grid", "Write a field snapshot as CSV");
    export_grid->add_option("field-file", inv.input, "Field snapshot")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_record("usage", e.what()) << '\n' << app.help();
        return exit_invalid_input;
    }

    inv.out = out;
    if (*seed_opt) inv.seed = seed;
    inv.command = run->parsed() ? "run" : checks->parsed() ? "checks" : "export-grid";
    return run_command(inv, std::cout, std::cerr);
}
