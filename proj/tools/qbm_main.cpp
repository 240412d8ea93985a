// qbm — scenario runner for the damped-oscillator master-equation engines.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qbm/scenario.hpp"

namespace {

void print_diagnostics(const std::vector<qbm::Diagnostic>& diags, bool verbose) {
    for (const auto& d : diags) {
        const bool is_error = d.severity == qbm::Diagnostic::Severity::error;
        if (!is_error && !verbose) continue;
        std::fprintf(stderr, "%s: %s%s%s\n", is_error ? "error" : "warning", d.field.c_str(),
                     d.field.empty() ? "" : ": ", d.message.c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qbm — damped quantum oscillator master-equation simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string engines;
    std::uint64_t seed = 0;
    bool seed_set = false, parallel = false, dump_traj = false;
    int verbosity = 0;

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("config", config_path, "scenario file")->required();

    auto* run = app.add_subcommand("run", "run a scenario");
    run->add_option("config", config_path, "scenario file")->required();
    run->add_option("--out", out_dir, "override [run] out_dir");
    run->add_option("--engines", engines, "override [run] engines (comma list)");
    run->add_option("--seed", seed, "override [run] seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_flag("--parallel", parallel, "run independent engines concurrently");
    run->add_flag("--dump-trajectories", dump_traj, "write per-trajectory series (large)");
    run->add_flag("-v,--verbose", verbosity, "print warnings and progress");

    CLI11_PARSE(app, argc, argv);

    try {
        qbm::ScenarioConfig cfg = qbm::parse_scenario_file(config_path);

        if (validate->parsed()) {
            const auto diags = qbm::validate_config(cfg);
            print_diagnostics(diags, true);
            for (const auto& d : diags)
                if (d.severity == qbm::Diagnostic::Severity::error) return 2;
            std::printf("ok\n");
            return 0;
        }

        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_set) cfg.seed = seed;
        if (dump_traj) cfg.dump_trajectories = true;
        if (!engines.empty()) {
            // reuse the scenario parser for the engine list
            qbm::ScenarioConfig tmp = qbm::parse_scenario(
                "schema = qbm-scenario/1\n[run]\nengines = " + engines + "\n");
            cfg.engines = tmp.engines;
        }

        const qbm::ScenarioReport report = qbm::run_scenario(cfg, parallel);
        print_diagnostics(report.diagnostics, verbosity > 0);
        if (verbosity > 0) {
            for (const auto& e : report.engines)
                std::printf("%-22s %s  (%.2fs)\n", qbm::engine_name(e.engine).c_str(),
                            e.error.empty() ? (e.ran ? "ok" : "skipped") : e.error.c_str(),
                            e.runtime_seconds);
        }
        std::printf("summary: %s\n", report.summary_path.c_str());
        return report.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
