// scenario.hpp — Scenario configuration: a versioned key-value text format,
// its validation diagnostics, and the multi-engine runner.
//
// Format (sections in brackets, '#' comments, key = value):
//
//   schema = qbm-scenario/1
//   [oscillator] mass, omega0, hbar
//   [thermal]    temperature, kB
//   [coefficients] preset (optical_sme|agarwal|caldeira_leggett|dekker_custom|explicit),
//                  lambda, mu, dx, dp, dz
//                  (coefficient values are scalars or "table: t v, t v, ...")
//   [state]      kind (coherent|thermal|squeezed|fock|gaussian) + its fields
//   [run]        engines (comma list of gaussian, fock, stochastic-classical,
//                stochastic-quantum, fokker-planck), t_final, dt, sample_every,
//                n_max, leakage_threshold, grid_n, grid_halfwidth, n_traj,
//                seed, frame (physical|canonical), out_dir, dump_trajectories,
//                write_grids
//   [tolerances] cross_moments, min_eigenvalue, mass_drift (all optional)
//
// Every omitted key takes the default recorded in ScenarioConfig below; the
// resolved configuration is echoed into every output file for provenance.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qbm/gaussian.hpp"
#include "qbm/model.hpp"

namespace qbm {

enum class Engine {
    gaussian,
    fock,
    stochastic_classical,
    stochastic_quantum,
    fokker_planck,
};

std::string engine_name(Engine e);

enum class StateKind { coherent, thermal, squeezed, fock, gaussian };

struct ScenarioConfig {
    std::string schema = "qbm-scenario/1";

    OscillatorParams osc{1.0, 1.0, 1.0};
    ThermalSpec thermal{0.0, 1.0};

    std::string preset = "optical_sme"; // or "explicit"
    double lambda = 0.1;
    double mu = 0.0;                    // explicit only
    Schedule dx{0.0}, dp{0.0}, dz{0.0}; // explicit / dekker_custom

    StateKind state_kind = StateKind::coherent;
    double alpha_re = 1.0, alpha_im = 0.0;
    double state_nbar = 0.0;
    double squeeze_r = 0.0, squeeze_phase = 0.0;
    int fock_n = 0;
    double mean_x = 0.0, mean_p = 0.0, sxx = 0.0, sxp = 0.0, spp = 0.0;

    std::vector<Engine> engines{Engine::gaussian};
    double t_final = 6.283185307179586;
    double dt = 0.01;
    int sample_every = 10;
    int n_max = 60;
    double leakage_threshold = 1e-6;
    int grid_n = 256;
    double grid_halfwidth = 8.0; // in standard deviations
    int n_traj = 2000;
    std::uint64_t seed = 1;
    Frame frame = Frame::physical;
    std::string out_dir = "out";
    bool dump_trajectories = false;
    bool write_grids = false;

    std::optional<double> tol_cross_moments;
    std::optional<double> tol_min_eigenvalue;
    std::optional<double> tol_mass_drift;

    // Derived builders (resolved from the fields above).
    CoefficientSchedule coefficients() const;
    GaussianState initial_gaussian() const;
    bool has_engine(Engine e) const;

    // Canonical key order echo of the resolved configuration.
    std::vector<std::pair<std::string, std::string>> resolved_entries() const;
};

ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig parse_scenario_file(const std::string& path);

struct Diagnostic {
    enum class Severity { error, warning } severity;
    std::string field;
    std::string message;
};

// Pure check; never mutates the config. Errors block run_scenario.
std::vector<Diagnostic> validate_config(const ScenarioConfig& cfg);

struct EngineReport {
    Engine engine;
    double runtime_seconds = 0.0;
    bool ran = false;
    std::string error; // nonempty when the engine threw
    std::string series_path;
    // final-time moments (physical frame)
    double mean_x = 0, mean_p = 0, sxx = 0, sxp = 0, spp = 0;
    double min_eigenvalue = 0.0; // fock / stochastic-quantum only
};

struct ScenarioReport {
    std::vector<Diagnostic> diagnostics;
    std::vector<EngineReport> engines;
    std::map<std::string, double> cross_discrepancies; // "a_vs_b.quantity" -> rel err
    double min_margin = 0.0;
    double fp_mass_drift = 0.0;
    bool tolerances_ok = true;
    int exit_code = 0; // 0 ok, 1 tolerance exceeded, 2 validation error, 3 engine error
    std::string summary_path;
};

// Runs every enabled engine on the shared output grid, writes per-engine CSV
// series and a JSON summary under cfg.out_dir. With run_parallel the engines
// execute concurrently; outputs are identical either way.
ScenarioReport run_scenario(const ScenarioConfig& cfg, bool run_parallel = false);

} // namespace qbm
