#include "qbm/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "qbm/fock.hpp"
#include "qbm/fokker_planck.hpp"
#include "qbm/io.hpp"
#include "qbm/stochastic.hpp"
#include "qbm/wigner.hpp"

namespace qbm {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string engine_name(Engine e) {
    switch (e) {
        case Engine::gaussian: return "gaussian";
        case Engine::fock: return "fock";
        case Engine::stochastic_classical: return "stochastic-classical";
        case Engine::stochastic_quantum: return "stochastic-quantum";
        case Engine::fokker_planck: return "fokker-planck";
    }
    return "?";
}

namespace {

Engine engine_from_name(const std::string& s, int line) {
    if (s == "gaussian") return Engine::gaussian;
    if (s == "fock") return Engine::fock;
    if (s == "stochastic-classical") return Engine::stochastic_classical;
    if (s == "stochastic-quantum") return Engine::stochastic_quantum;
    if (s == "fokker-planck") return Engine::fokker_planck;
    throw ParseError(line, "run.engines", "unknown engine '" + s + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& v, const std::string& field, int line) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ParseError(line, field, "expected a number, got '" + v + "'");
    }
}

long parse_integer(const std::string& v, const std::string& field, int line) {
    try {
        std::size_t used = 0;
        const long d = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ParseError(line, field, "expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& field, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(line, field, "expected a boolean, got '" + v + "'");
}

// scalar or "table: t v, t v, ..."
Schedule parse_schedule(const std::string& v, const std::string& field, int line) {
    if (v.rfind("table:", 0) != 0) return Schedule::constant(parse_number(v, field, line));
    std::vector<std::pair<double, double>> pts;
    std::stringstream ss(v.substr(6));
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        std::stringstream es(trim(entry));
        double t = 0, val = 0;
        if (!(es >> t >> val))
            throw ParseError(line, field, "table entries must be 't value' pairs");
        std::string rest;
        if (es >> rest) throw ParseError(line, field, "table entries must be 't value' pairs");
        pts.emplace_back(t, val);
    }
    if (pts.empty()) throw ParseError(line, field, "empty table");
    try {
        return Schedule::table(std::move(pts));
    } catch (const SimulationError& e) {
        throw ParseError(line, field, e.what());
    }
}

std::string schedule_to_string(const Schedule& s) {
    if (s.is_table()) {
        std::string out = "table:";
        bool first = true;
        for (const auto& [t, v] : s.table_points()) {
            out += first ? " " : ", ";
            out += format_double(t) + " " + format_double(v);
            first = false;
        }
        return out;
    }
    return format_double(s.constant_value());
}

} // namespace

CoefficientSchedule ScenarioConfig::coefficients() const {
    if (preset == "explicit") {
        CoefficientSchedule cs;
        cs.lambda = Schedule::constant(lambda);
        cs.mu = Schedule::constant(mu);
        cs.dx = dx;
        cs.dp = dp;
        cs.dz = dz;
        return cs;
    }
    const Preset p = preset_from_name(preset);
    if (p == Preset::dekker_custom) return preset_dekker(osc, lambda, dx, dp, dz);
    return qbm::preset(p, osc, thermal, lambda);
}

GaussianState ScenarioConfig::initial_gaussian() const {
    switch (state_kind) {
        case StateKind::coherent:
            return GaussianState::coherent(osc, {alpha_re, alpha_im});
        case StateKind::thermal:
            return GaussianState::thermal(osc, state_nbar);
        case StateKind::squeezed:
            return GaussianState::squeezed(osc, squeeze_r, squeeze_phase);
        case StateKind::fock:
            return GaussianState::thermal(osc, static_cast<double>(fock_n));
        case StateKind::gaussian: {
            GaussianState s;
            s.mean << mean_x, mean_p;
            s.cov << sxx, sxp, sxp, spp;
            return s;
        }
    }
    throw SimulationError("unknown state kind");
}

bool ScenarioConfig::has_engine(Engine e) const {
    return std::find(engines.begin(), engines.end(), e) != engines.end();
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::resolved_entries() const {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("schema", schema);
    kv.emplace_back("oscillator.mass", format_double(osc.mass));
    kv.emplace_back("oscillator.omega0", format_double(osc.omega0));
    kv.emplace_back("oscillator.hbar", format_double(osc.hbar));
    kv.emplace_back("thermal.temperature", format_double(thermal.temperature));
    kv.emplace_back("thermal.kB", format_double(thermal.boltzmann));
    kv.emplace_back("coefficients.preset", preset);
    kv.emplace_back("coefficients.lambda", format_double(lambda));
    kv.emplace_back("coefficients.mu", format_double(mu));
    kv.emplace_back("coefficients.dx", schedule_to_string(dx));
    kv.emplace_back("coefficients.dp", schedule_to_string(dp));
    kv.emplace_back("coefficients.dz", schedule_to_string(dz));
    const char* kinds[] = {"coherent", "thermal", "squeezed", "fock", "gaussian"};
    kv.emplace_back("state.kind", kinds[static_cast<int>(state_kind)]);
    kv.emplace_back("state.alpha_re", format_double(alpha_re));
    kv.emplace_back("state.alpha_im", format_double(alpha_im));
    kv.emplace_back("state.nbar", format_double(state_nbar));
    kv.emplace_back("state.r", format_double(squeeze_r));
    kv.emplace_back("state.phase", format_double(squeeze_phase));
    kv.emplace_back("state.n", std::to_string(fock_n));
    kv.emplace_back("state.mean_x", format_double(mean_x));
    kv.emplace_back("state.mean_p", format_double(mean_p));
    kv.emplace_back("state.sxx", format_double(sxx));
    kv.emplace_back("state.sxp", format_double(sxp));
    kv.emplace_back("state.spp", format_double(spp));
    std::string eng;
    for (const auto e : engines) {
        if (!eng.empty()) eng += ',';
        eng += engine_name(e);
    }
    kv.emplace_back("run.engines", eng);
    kv.emplace_back("run.t_final", format_double(t_final));
    kv.emplace_back("run.dt", format_double(dt));
    kv.emplace_back("run.sample_every", std::to_string(sample_every));
    kv.emplace_back("run.n_max", std::to_string(n_max));
    kv.emplace_back("run.leakage_threshold", format_double(leakage_threshold));
    kv.emplace_back("run.grid_n", std::to_string(grid_n));
    kv.emplace_back("run.grid_halfwidth", format_double(grid_halfwidth));
    kv.emplace_back("run.n_traj", std::to_string(n_traj));
    kv.emplace_back("run.seed", std::to_string(seed));
    kv.emplace_back("run.frame", frame == Frame::physical ? "physical" : "canonical");
    kv.emplace_back("run.out_dir", out_dir);
    kv.emplace_back("run.dump_trajectories", dump_trajectories ? "true" : "false");
    kv.emplace_back("run.write_grids", write_grids ? "true" : "false");
    if (tol_cross_moments)
        kv.emplace_back("tolerances.cross_moments", format_double(*tol_cross_moments));
    if (tol_min_eigenvalue)
        kv.emplace_back("tolerances.min_eigenvalue", format_double(*tol_min_eigenvalue));
    if (tol_mass_drift)
        kv.emplace_back("tolerances.mass_drift", format_double(*tol_mass_drift));
    return kv;
}

ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    bool saw_schema = false;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "", "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "", "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "", "empty key");
        const std::string field = section.empty() ? key : section + "." + key;

        if (field == "schema") {
            cfg.schema = value;
            saw_schema = true;
        } else if (field == "oscillator.mass" || field == "oscillator.omega0" ||
                   field == "oscillator.hbar") {
            const double v = parse_number(value, field, line_no);
            try {
                if (field == "oscillator.mass")
                    cfg.osc = OscillatorParams(v, cfg.osc.omega0, cfg.osc.hbar);
                else if (field == "oscillator.omega0")
                    cfg.osc = OscillatorParams(cfg.osc.mass, v, cfg.osc.hbar);
                else
                    cfg.osc = OscillatorParams(cfg.osc.mass, cfg.osc.omega0, v);
            } catch (const std::invalid_argument& e) {
                throw ParseError(line_no, field, e.what());
            }
        } else if (field == "thermal.temperature" || field == "thermal.kB") {
            const double v = parse_number(value, field, line_no);
            try {
                if (field == "thermal.temperature")
                    cfg.thermal = ThermalSpec(v, cfg.thermal.boltzmann);
                else
                    cfg.thermal = ThermalSpec(cfg.thermal.temperature, v);
            } catch (const std::invalid_argument& e) {
                throw ParseError(line_no, field, e.what());
            }
        } else if (field == "coefficients.preset") {
            cfg.preset = value;
            if (value != "explicit") preset_from_name(value); // validates
        } else if (field == "coefficients.lambda") {
            cfg.lambda = parse_number(value, field, line_no);
        } else if (field == "coefficients.mu") {
            cfg.mu = parse_number(value, field, line_no);
        } else if (field == "coefficients.dx") {
            cfg.dx = parse_schedule(value, field, line_no);
        } else if (field == "coefficients.dp") {
            cfg.dp = parse_schedule(value, field, line_no);
        } else if (field == "coefficients.dz") {
            cfg.dz = parse_schedule(value, field, line_no);
        } else if (field == "state.kind") {
            if (value == "coherent") cfg.state_kind = StateKind::coherent;
            else if (value == "thermal") cfg.state_kind = StateKind::thermal;
            else if (value == "squeezed") cfg.state_kind = StateKind::squeezed;
            else if (value == "fock") cfg.state_kind = StateKind::fock;
            else if (value == "gaussian") cfg.state_kind = StateKind::gaussian;
            else throw ParseError(line_no, field, "unknown state kind '" + value + "'");
        } else if (field == "state.alpha_re") {
            cfg.alpha_re = parse_number(value, field, line_no);
        } else if (field == "state.alpha_im") {
            cfg.alpha_im = parse_number(value, field, line_no);
        } else if (field == "state.nbar") {
            cfg.state_nbar = parse_number(value, field, line_no);
        } else if (field == "state.r") {
            cfg.squeeze_r = parse_number(value, field, line_no);
        } else if (field == "state.phase") {
            cfg.squeeze_phase = parse_number(value, field, line_no);
        } else if (field == "state.n") {
            cfg.fock_n = static_cast<int>(parse_integer(value, field, line_no));
        } else if (field == "state.mean_x") {
            cfg.mean_x = parse_number(value, field, line_no);
        } else if (field == "state.mean_p") {
            cfg.mean_p = parse_number(value, field, line_no);
        } else if (field == "state.sxx") {
            cfg.sxx = parse_number(value, field, line_no);
        } else if (field == "state.sxp") {
            cfg.sxp = parse_number(value, field, line_no);
        } else if (field == "state.spp") {
            cfg.spp = parse_number(value, field, line_no);
        } else if (field == "run.engines") {
            cfg.engines.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) cfg.engines.push_back(engine_from_name(item, line_no));
            }
        } else if (field == "run.t_final") {
            cfg.t_final = parse_number(value, field, line_no);
        } else if (field == "run.dt") {
            cfg.dt = parse_number(value, field, line_no);
        } else if (field == "run.sample_every") {
            cfg.sample_every = static_cast<int>(parse_integer(value, field, line_no));
        } else if (field == "run.n_max") {
            cfg.n_max = static_cast<int>(parse_integer(value, field, line_no));
        } else if (field == "run.leakage_threshold") {
            cfg.leakage_threshold = parse_number(value, field, line_no);
        } else if (field == "run.grid_n") {
            cfg.grid_n = static_cast<int>(parse_integer(value, field, line_no));
        } else if (field == "run.grid_halfwidth") {
            cfg.grid_halfwidth = parse_number(value, field, line_no);
        } else if (field == "run.n_traj") {
            cfg.n_traj = static_cast<int>(parse_integer(value, field, line_no));
        } else if (field == "run.seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_integer(value, field, line_no));
        } else if (field == "run.frame") {
            if (value == "physical") cfg.frame = Frame::physical;
            else if (value == "canonical") cfg.frame = Frame::canonical;
            else throw ParseError(line_no, field, "unknown frame '" + value + "'");
        } else if (field == "run.out_dir") {
            cfg.out_dir = value;
        } else if (field == "run.dump_trajectories") {
            cfg.dump_trajectories = parse_bool(value, field, line_no);
        } else if (field == "run.write_grids") {
            cfg.write_grids = parse_bool(value, field, line_no);
        } else if (field == "tolerances.cross_moments") {
            cfg.tol_cross_moments = parse_number(value, field, line_no);
        } else if (field == "tolerances.min_eigenvalue") {
            cfg.tol_min_eigenvalue = parse_number(value, field, line_no);
        } else if (field == "tolerances.mass_drift") {
            cfg.tol_mass_drift = parse_number(value, field, line_no);
        } else {
            throw ParseError(line_no, field, "unknown key");
        }
    }
    if (!saw_schema) throw ParseError(0, "schema", "missing 'schema = qbm-scenario/1'");
    if (cfg.schema != "qbm-scenario/1")
        throw ParseError(0, "schema", "unsupported schema '" + cfg.schema + "'");
    return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimulationError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::vector<Diagnostic> validate_config(const ScenarioConfig& cfg) {
    std::vector<Diagnostic> diags;
    auto error = [&](const std::string& field, const std::string& msg) {
        diags.push_back({Diagnostic::Severity::error, field, msg});
    };
    auto warning = [&](const std::string& field, const std::string& msg) {
        diags.push_back({Diagnostic::Severity::warning, field, msg});
    };

    if (!(cfg.dt > 0.0)) error("run.dt", "dt must be positive");
    if (!(cfg.t_final >= 0.0)) error("run.t_final", "t_final must be nonnegative");
    if (cfg.sample_every < 1) error("run.sample_every", "sample_every must be >= 1");
    if (!(std::isfinite(cfg.lambda) && cfg.lambda >= 0.0))
        error("coefficients.lambda", "lambda must be nonnegative");

    const bool wants_fock = cfg.has_engine(Engine::fock);
    const bool wants_quantum = cfg.has_engine(Engine::stochastic_quantum);
    const bool wants_classical = cfg.has_engine(Engine::stochastic_classical);
    const bool wants_fp = cfg.has_engine(Engine::fokker_planck);
    if ((wants_fock || wants_quantum) && cfg.n_max < 2)
        error("run.n_max", "Fock-basis engines need n_max >= 2");
    if ((wants_classical || wants_quantum) && cfg.n_traj < 100)
        error("run.n_traj", "stochastic ensembles need n_traj >= 100");
    if (wants_fp && cfg.grid_n < 16) error("run.grid_n", "grid too small");

    if (cfg.state_kind == StateKind::squeezed && cfg.squeeze_r < 0.0)
        error("state.r", "squeeze parameter must be nonnegative");
    if (cfg.state_kind == StateKind::fock && cfg.fock_n < 0)
        error("state.n", "Fock index must be nonnegative");
    if (cfg.state_kind == StateKind::thermal && cfg.state_nbar < 0.0)
        error("state.nbar", "thermal occupation must be nonnegative");

    CoefficientSchedule cs;
    bool have_cs = true;
    try {
        cs = cfg.coefficients();
    } catch (const std::exception& e) {
        error("coefficients", e.what());
        have_cs = false;
    }

    if (have_cs && cfg.t_final > 0.0) {
        // sampled schedule checks
        double min_margin = 0.0;
        bool margin_ok = true, psd_ok = true, schedule_ok = true;
        double bad_t = 0.0;
        for (int i = 0; i <= 64; ++i) {
            const double t = cfg.t_final * i / 64.0;
            Coefficients c;
            try {
                c = cs.eval(t);
            } catch (const std::exception& e) {
                error("coefficients", e.what());
                schedule_ok = false;
                break;
            }
            const double m = lindblad_margin(c, cfg.osc.hbar);
            if (i == 0 || m < min_margin) min_margin = m;
            if (m < 0.0 && margin_ok) {
                margin_ok = false;
                bad_t = t;
            }
            // classical noise covariance: a = dp, b = dx, c = -dz
            if (c.dp * c.dx - c.dz * c.dz < -1e-12 * std::max(c.dp * c.dx, c.dz * c.dz))
                psd_ok = false;
        }
        if (schedule_ok && !margin_ok)
            warning("coefficients",
                    "positivity not guaranteed: D_p*D_x - D_z^2 < (hbar*lambda/2)^2 "
                    "(first at t = " + format_double(bad_t) + ")");
        if (schedule_ok && !psd_ok && (wants_classical || wants_quantum))
            warning("run.engines",
                    "classical noise covariance not positive semidefinite (a*b < c^2); "
                    "stochastic engines disabled");

        if (cfg.frame == Frame::canonical &&
            !cs.translationally_invariant(0.0, cfg.t_final))
            error("run.frame",
                  "canonical frame requires translationally invariant damping (lambda = mu)");
        if ((wants_quantum || wants_classical) &&
            !cs.translationally_invariant(0.0, cfg.t_final)) {
            // trajectories realize friction as -Gamma_dot p only
            error("run.engines",
                  "stochastic engines require translationally invariant damping (lambda = mu)");
        }
    }

    if (cfg.state_kind == StateKind::gaussian) {
        GaussianState s = cfg.initial_gaussian();
        if (s.cov(0, 0) < 0.0 || s.cov(1, 1) < 0.0 || s.det() < 0.0)
            error("state", "covariance must be positive semidefinite");
        else if ((wants_fock || wants_quantum) &&
                 s.det() < cfg.osc.hbar * cfg.osc.hbar / 4.0 * (1.0 - 1e-9))
            error("state", "det M >= (hbar/2)^2 required for Fock-basis engines");
        else if (s.det() < cfg.osc.hbar * cfg.osc.hbar / 4.0 * (1.0 - 1e-9))
            warning("state", "initial covariance violates the uncertainty relation; "
                             "classical engines will still run");
    }
    return diags;
}

namespace {

struct MomentRow {
    double t, mean_x, mean_p, sxx, sxp, spp;
};

struct EngineOutput {
    EngineReport report;
    std::vector<MomentRow> rows;
    double mass_drift = 0.0;
};

std::vector<std::string> provenance(const ScenarioConfig& cfg) {
    std::vector<std::string> lines;
    lines.push_back("qbm series");
    for (const auto& [k, v] : cfg.resolved_entries()) lines.push_back(k + " = " + v);
    return lines;
}

double series_scale(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 1e-12;
    for (double v : a) s = std::max(s, std::abs(v));
    for (double v : b) s = std::max(s, std::abs(v));
    return s;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

EngineOutput run_gaussian_engine(const ScenarioConfig& cfg, const CoefficientSchedule& cs,
                                 const std::vector<std::string>& header) {
    EngineOutput out;
    out.report.engine = Engine::gaussian;
    Stopwatch watch;

    const GaussianState init = cfg.initial_gaussian();
    MomentSeries ms = evolve_moments(init, cfg.osc, cs, cfg.t_final, cfg.dt,
                                     cfg.sample_every);

    // canonical-frame cross-check via the propagator pair when requested
    double frame_dev = 0.0;
    if (cfg.frame == Frame::canonical) {
        PropagatorSeries can = propagator(cfg.osc, cs, Frame::canonical, cfg.t_final, cfg.dt,
                                          cfg.sample_every);
        const GaussianState init_can = physical_to_canonical(init, 0.0);
        for (std::size_t i = 0; i < can.times.size() && i < ms.times.size(); ++i) {
            const GaussianState sc = can.props[i].apply(init_can);
            const GaussianState mapped =
                canonical_to_physical(sc.mean, sc.cov, can.props[i].gamma);
            const GaussianState& direct = ms.states[i];
            frame_dev = std::max(frame_dev,
                                 (mapped.mean - direct.mean).cwiseAbs().maxCoeff() +
                                     (mapped.cov - direct.cov).cwiseAbs().maxCoeff());
        }
    }

    const std::string path = cfg.out_dir + "/gaussian.csv";
    CsvWriter csv(path, header,
                  {"t", "mean_x", "mean_p", "sxx", "sxp", "spp", "detM", "margin"});
    for (std::size_t i = 0; i < ms.times.size(); ++i) {
        const auto& s = ms.states[i];
        csv.row({ms.times[i], s.mean[0], s.mean[1], s.cov(0, 0), s.cov(0, 1), s.cov(1, 1),
                 s.det(), ms.margins[i]});
        out.rows.push_back({ms.times[i], s.mean[0], s.mean[1], s.cov(0, 0), s.cov(0, 1),
                            s.cov(1, 1)});
    }
    csv.close();

    const auto& last = ms.states.back();
    out.report.ran = true;
    out.report.series_path = path;
    out.report.runtime_seconds = watch.seconds();
    out.report.mean_x = last.mean[0];
    out.report.mean_p = last.mean[1];
    out.report.sxx = last.cov(0, 0);
    out.report.sxp = last.cov(0, 1);
    out.report.spp = last.cov(1, 1);
    out.report.min_eigenvalue = frame_dev; // reused as frame check for gaussian
    return out;
}

DensityMatrix initial_density(const ScenarioConfig& cfg, const OperatorSet& ops) {
    switch (cfg.state_kind) {
        case StateKind::coherent:
            return DensityMatrix::pure(
                coherent_state(cfg.n_max, {cfg.alpha_re, cfg.alpha_im}));
        case StateKind::thermal:
            return DensityMatrix::thermal(cfg.n_max, cfg.state_nbar);
        case StateKind::squeezed:
            return DensityMatrix::pure(
                squeezed_state(cfg.n_max, cfg.squeeze_r, cfg.squeeze_phase));
        case StateKind::fock:
            return DensityMatrix::pure(fock_state(cfg.n_max, cfg.fock_n));
        case StateKind::gaussian: {
            const GaussianState s = cfg.initial_gaussian();
            return gaussian_density_matrix(ops, s.mean, s.cov);
        }
    }
    throw SimulationError("unknown state kind");
}

EngineOutput run_fock_engine(const ScenarioConfig& cfg, const CoefficientSchedule& cs,
                             const std::vector<std::string>& header) {
    EngineOutput out;
    out.report.engine = Engine::fock;
    Stopwatch watch;

    const OperatorSet ops = build_operators(cfg.osc, cfg.n_max);
    const DensityMatrix rho0 = initial_density(cfg, ops);

    FockEvolveOptions opts;
    opts.sample_every = cfg.sample_every;
    opts.leakage_threshold = cfg.leakage_threshold;
    opts.store_states = cfg.write_grids;
    FockSeries fs = evolve_density(rho0, ops, cs, cfg.t_final, cfg.dt, opts);

    const std::string path = cfg.out_dir + "/fock.csv";
    CsvWriter csv(path, header,
                  {"t", "mean_x", "mean_p", "sxx", "sxp", "spp", "detM", "margin", "purity",
                   "min_eig", "leakage"});
    double min_eig = 0.0;
    for (std::size_t i = 0; i < fs.times.size(); ++i) {
        const auto& o = fs.obs[i];
        const double det = o.sxx * o.spp - o.sxp * o.sxp;
        csv.row({fs.times[i], o.mean_x, o.mean_p, o.sxx, o.sxp, o.spp, det,
                 lindblad_margin(cs, fs.times[i], cfg.osc), o.purity, o.min_eig, o.leakage});
        out.rows.push_back({fs.times[i], o.mean_x, o.mean_p, o.sxx, o.sxp, o.spp});
        min_eig = std::min(min_eig, o.min_eig);
    }
    csv.close();

    if (cfg.write_grids && !fs.states.empty()) {
        WignerGridSpec spec;
        spec.nx = spec.np = std::min(cfg.grid_n, 257);
        const WignerGrid w = wigner_transform(fs.states.back(), ops, spec);
        write_grid_binary(w, cfg.out_dir + "/fock_wigner_final.wig");
        write_grid_csv(w, cfg.out_dir + "/fock_wigner_final.csv");
    }

    const auto& o = fs.obs.back();
    out.report.ran = true;
    out.report.series_path = path;
    out.report.runtime_seconds = watch.seconds();
    out.report.mean_x = o.mean_x;
    out.report.mean_p = o.mean_p;
    out.report.sxx = o.sxx;
    out.report.sxp = o.sxp;
    out.report.spp = o.spp;
    out.report.min_eigenvalue = min_eig;
    return out;
}

EngineOutput run_classical_engine(const ScenarioConfig& cfg, const CoefficientSchedule& cs,
                                  const std::vector<std::string>& header) {
    EngineOutput out;
    out.report.engine = Engine::stochastic_classical;
    Stopwatch watch;

    const NoiseCorrelations nc = noise_from_diffusion(cs, 0.0, cfg.t_final);
    EnsembleSpec spec;
    spec.n_traj = cfg.n_traj;
    spec.seed = cfg.seed;
    spec.t_final = cfg.t_final;
    spec.dt = cfg.dt;
    spec.sample_every = cfg.sample_every;
    spec.keep_paths = cfg.dump_trajectories;
    const EnsembleSeries es = ensemble_covariances(cfg.initial_gaussian(), cfg.osc, nc, spec);

    const std::string path = cfg.out_dir + "/stochastic_classical.csv";
    CsvWriter csv(path, header,
                  {"t", "mean_x", "mean_p", "sxx", "sxp", "spp", "se_mean_x", "se_mean_p",
                   "se_sxx", "se_sxp", "se_spp"});
    for (std::size_t i = 0; i < es.times.size(); ++i) {
        const auto& s = es.stats[i];
        csv.row({es.times[i], s.mean_x, s.mean_p, s.sxx, s.sxp, s.spp, s.se_mean_x,
                 s.se_mean_p, s.se_sxx, s.se_sxp, s.se_spp});
        out.rows.push_back({es.times[i], s.mean_x, s.mean_p, s.sxx, s.sxp, s.spp});
    }
    csv.close();

    if (cfg.dump_trajectories) {
        CsvWriter dump(cfg.out_dir + "/stochastic_classical_paths.csv", header,
                       {"traj", "t", "x", "p"});
        for (std::size_t traj = 0; traj < es.paths.size(); ++traj)
            for (std::size_t i = 0; i < es.times.size(); ++i)
                dump.row({static_cast<double>(traj), es.times[i], es.paths[traj][i][0],
                          es.paths[traj][i][1]});
        dump.close();
    }

    const auto& s = es.stats.back();
    out.report.ran = true;
    out.report.series_path = path;
    out.report.runtime_seconds = watch.seconds();
    out.report.mean_x = s.mean_x;
    out.report.mean_p = s.mean_p;
    out.report.sxx = s.sxx;
    out.report.sxp = s.sxp;
    out.report.spp = s.spp;
    return out;
}

EngineOutput run_quantum_engine(const ScenarioConfig& cfg, const CoefficientSchedule& cs,
                                const std::vector<std::string>& header) {
    EngineOutput out;
    out.report.engine = Engine::stochastic_quantum;
    Stopwatch watch;

    const OperatorSet ops = build_operators(cfg.osc, cfg.n_max);
    const DensityMatrix rho0 = initial_density(cfg, ops);
    const NoiseCorrelations nc = noise_from_diffusion(cs, 0.0, cfg.t_final);

    EnsembleSpec spec;
    spec.n_traj = cfg.n_traj;
    spec.seed = cfg.seed;
    spec.t_final = cfg.t_final;
    spec.dt = cfg.dt;
    spec.sample_every = cfg.sample_every;
    const QuantumEnsembleSeries qs =
        ensemble_average_density(rho0, ops, nc, spec, cfg.leakage_threshold);

    const std::string path = cfg.out_dir + "/stochastic_quantum.csv";
    CsvWriter csv(path, header,
                  {"t", "mean_x", "mean_p", "sxx", "sxp", "spp", "min_eig"});
    double min_eig = 0.0;
    for (std::size_t i = 0; i < qs.times.size(); ++i) {
        const FockObservables o = observables(qs.rho_avg[i], ops);
        // canonical-frame averages mapped to physical moments
        const double emg = std::exp(-qs.gammas[i]);
        const double mean_p = o.mean_p * emg;
        const double sxp = o.sxp * emg;
        const double spp = o.spp * emg * emg;
        csv.row({qs.times[i], o.mean_x, mean_p, o.sxx, sxp, spp, o.min_eig});
        out.rows.push_back({qs.times[i], o.mean_x, mean_p, o.sxx, sxp, spp});
        min_eig = std::min(min_eig, o.min_eig);
        if (i + 1 == qs.times.size()) {
            out.report.mean_x = o.mean_x;
            out.report.mean_p = mean_p;
            out.report.sxx = o.sxx;
            out.report.sxp = sxp;
            out.report.spp = spp;
        }
    }
    csv.close();

    out.report.ran = true;
    out.report.series_path = path;
    out.report.runtime_seconds = watch.seconds();
    out.report.min_eigenvalue = min_eig;
    return out;
}

EngineOutput run_fp_engine(const ScenarioConfig& cfg, const CoefficientSchedule& cs,
                           const std::vector<std::string>& header) {
    EngineOutput out;
    out.report.engine = Engine::fokker_planck;
    Stopwatch watch;

    const GaussianState init = cfg.initial_gaussian();

    // grid extent: rotation envelope of the mean plus k sigma of the widest
    // covariance seen along the run (initial or steady state)
    const double mw = cfg.osc.mass * cfg.osc.omega0;
    const double env = std::hypot(init.mean[0], init.mean[1] / mw);
    double sxx_max = init.cov(0, 0), spp_max = init.cov(1, 1);
    try {
        const Eigen::Matrix2d mss = steady_state_covariance(
            drift_matrix(cfg.osc, cs, 0.0), diffusion_matrix(cs, 0.0));
        sxx_max = std::max(sxx_max, mss(0, 0));
        spp_max = std::max(spp_max, mss(1, 1));
    } catch (const NoSteadyState&) {
        // undamped: crude diffusive growth bound
        const Coefficients c = cs.eval(0.0);
        sxx_max += 2.0 * (c.dx + c.dp / (mw * mw)) * cfg.t_final;
        spp_max += 2.0 * (c.dp + c.dx * mw * mw) * cfg.t_final;
    }
    const double x_half = env + cfg.grid_halfwidth * std::sqrt(sxx_max);
    const double p_half = env * mw + cfg.grid_halfwidth * std::sqrt(spp_max);

    WignerGrid w = WignerGrid::make(cfg.grid_n, cfg.grid_n, x_half, p_half);
    if (cfg.state_kind == StateKind::fock)
        fill_fock_wigner(w, cfg.osc, cfg.fock_n);
    else
        fill_gaussian(w, init.mean, init.cov);

    const double sample_dt = cfg.dt * cfg.sample_every;
    FPSeries fps = fp_evolve(w, cfg.osc, cs, cfg.t_final, sample_dt);

    const std::string path = cfg.out_dir + "/fokker_planck.csv";
    CsvWriter csv(path, header,
                  {"t", "mean_x", "mean_p", "sxx", "sxp", "spp", "mass"});
    for (std::size_t i = 0; i < fps.times.size(); ++i) {
        const auto& m = fps.moments[i];
        csv.row({fps.times[i], m.mean_x, m.mean_p, m.sxx, m.sxp, m.spp, m.mass});
        out.rows.push_back({fps.times[i], m.mean_x, m.mean_p, m.sxx, m.sxp, m.spp});
    }
    csv.close();

    if (cfg.write_grids) {
        write_grid_binary(w, cfg.out_dir + "/fokker_planck_final.wig");
        write_grid_csv(w, cfg.out_dir + "/fokker_planck_final.csv");
    }

    const auto& m = fps.moments.back();
    out.mass_drift = fps.max_mass_drift;
    out.report.ran = true;
    out.report.series_path = path;
    out.report.runtime_seconds = watch.seconds();
    out.report.mean_x = m.mean_x;
    out.report.mean_p = m.mean_p;
    out.report.sxx = m.sxx;
    out.report.sxp = m.sxp;
    out.report.spp = m.spp;
    return out;
}

} // namespace

ScenarioReport run_scenario(const ScenarioConfig& cfg, bool run_parallel) {
    ScenarioReport report;
    report.diagnostics = validate_config(cfg);
    bool blocked = false;
    for (const auto& d : report.diagnostics)
        if (d.severity == Diagnostic::Severity::error) blocked = true;

    fs::create_directories(cfg.out_dir);

    // stochastic engines are disabled (with a warning already emitted) when
    // the classical noise covariance is not PSD
    bool noise_psd = true;
    for (const auto& d : report.diagnostics)
        if (d.message.find("stochastic engines disabled") != std::string::npos)
            noise_psd = false;

    CoefficientSchedule cs;
    if (!blocked) cs = cfg.coefficients();

    if (!blocked && cfg.t_final > 0.0) {
        report.min_margin = lindblad_margin(cs, 0.0, cfg.osc);
        for (int i = 1; i <= 64; ++i)
            report.min_margin = std::min(
                report.min_margin, lindblad_margin(cs, cfg.t_final * i / 64.0, cfg.osc));
    }

    const std::vector<std::string> header = provenance(cfg);
    std::vector<EngineOutput> outputs;

    if (!blocked) {
        std::vector<Engine> to_run;
        for (const Engine e : cfg.engines) {
            if ((e == Engine::stochastic_classical || e == Engine::stochastic_quantum) &&
                !noise_psd)
                continue;
            to_run.push_back(e);
        }

        auto run_one = [&](Engine e) -> EngineOutput {
            try {
                switch (e) {
                    case Engine::gaussian: return run_gaussian_engine(cfg, cs, header);
                    case Engine::fock: return run_fock_engine(cfg, cs, header);
                    case Engine::stochastic_classical:
                        return run_classical_engine(cfg, cs, header);
                    case Engine::stochastic_quantum:
                        return run_quantum_engine(cfg, cs, header);
                    case Engine::fokker_planck: return run_fp_engine(cfg, cs, header);
                }
                throw SimulationError("unknown engine");
            } catch (const std::exception& ex) {
                EngineOutput out;
                out.report.engine = e;
                out.report.error = ex.what();
                return out;
            }
        };

        if (run_parallel) {
            std::vector<std::future<EngineOutput>> futures;
            futures.reserve(to_run.size());
            for (const Engine e : to_run)
                futures.push_back(std::async(std::launch::async, run_one, e));
            for (auto& f : futures) outputs.push_back(f.get());
        } else {
            for (const Engine e : to_run) outputs.push_back(run_one(e));
        }
    }

    // cross-engine discrepancies on the shared time grid
    const char* quantity_names[5] = {"mean_x", "mean_p", "sxx", "sxp", "spp"};
    for (std::size_t ia = 0; ia < outputs.size(); ++ia) {
        for (std::size_t ib = ia + 1; ib < outputs.size(); ++ib) {
            const auto& a = outputs[ia];
            const auto& b = outputs[ib];
            if (!a.report.ran || !b.report.ran) continue;
            // align on common times
            std::vector<std::pair<std::size_t, std::size_t>> idx;
            for (std::size_t i = 0, j = 0; i < a.rows.size() && j < b.rows.size();) {
                const double ta = a.rows[i].t, tb = b.rows[j].t;
                if (std::abs(ta - tb) < 1e-9) {
                    idx.emplace_back(i, j);
                    ++i;
                    ++j;
                } else if (ta < tb) {
                    ++i;
                } else {
                    ++j;
                }
            }
            if (idx.empty()) continue;
            const std::string pair_name =
                engine_name(a.report.engine) + "_vs_" + engine_name(b.report.engine);
            double pair_max = 0.0;
            for (int q = 0; q < 5; ++q) {
                auto get = [&](const MomentRow& r) {
                    switch (q) {
                        case 0: return r.mean_x;
                        case 1: return r.mean_p;
                        case 2: return r.sxx;
                        case 3: return r.sxp;
                        default: return r.spp;
                    }
                };
                std::vector<double> va, vb;
                for (const auto& [i, j] : idx) {
                    va.push_back(get(a.rows[i]));
                    vb.push_back(get(b.rows[j]));
                }
                const double scale = series_scale(va, vb);
                double dev = 0.0;
                for (std::size_t k = 0; k < va.size(); ++k)
                    dev = std::max(dev, std::abs(va[k] - vb[k]));
                const double rel = dev / scale;
                report.cross_discrepancies[pair_name + "." + quantity_names[q]] = rel;
                pair_max = std::max(pair_max, rel);
            }
            report.cross_discrepancies[pair_name + ".max"] = pair_max;
        }
    }

    // tolerance gates
    bool engine_error = false;
    double min_eig = 0.0;
    for (const auto& o : outputs) {
        report.engines.push_back(o.report);
        if (!o.report.error.empty()) engine_error = true;
        if (o.report.engine == Engine::fock || o.report.engine == Engine::stochastic_quantum)
            min_eig = std::min(min_eig, o.report.min_eigenvalue);
        report.fp_mass_drift = std::max(report.fp_mass_drift, o.mass_drift);
    }

    if (cfg.tol_cross_moments) {
        auto deterministic = [](Engine e) {
            return e == Engine::gaussian || e == Engine::fock || e == Engine::fokker_planck;
        };
        for (std::size_t ia = 0; ia < outputs.size(); ++ia)
            for (std::size_t ib = ia + 1; ib < outputs.size(); ++ib) {
                if (!deterministic(outputs[ia].report.engine) ||
                    !deterministic(outputs[ib].report.engine))
                    continue;
                const std::string key = engine_name(outputs[ia].report.engine) + "_vs_" +
                                        engine_name(outputs[ib].report.engine) + ".max";
                const auto it = report.cross_discrepancies.find(key);
                if (it != report.cross_discrepancies.end() &&
                    it->second > *cfg.tol_cross_moments)
                    report.tolerances_ok = false;
            }
    }
    if (cfg.tol_min_eigenvalue && min_eig < -*cfg.tol_min_eigenvalue)
        report.tolerances_ok = false;
    if (cfg.tol_mass_drift && report.fp_mass_drift > *cfg.tol_mass_drift)
        report.tolerances_ok = false;

    if (blocked)
        report.exit_code = 2;
    else if (engine_error)
        report.exit_code = 3;
    else if (!report.tolerances_ok)
        report.exit_code = 1;

    // JSON summary
    ordered_json j;
    j["schema"] = "qbm-summary/1";
    ordered_json jcfg;
    for (const auto& [k, v] : cfg.resolved_entries()) jcfg[k] = v;
    j["config"] = jcfg;
    ordered_json jdiag = ordered_json::array();
    for (const auto& d : report.diagnostics)
        jdiag.push_back({{"severity",
                          d.severity == Diagnostic::Severity::error ? "error" : "warning"},
                         {"field", d.field},
                         {"message", d.message}});
    j["diagnostics"] = jdiag;
    ordered_json jeng;
    for (const auto& e : report.engines) {
        ordered_json je;
        je["ran"] = e.ran;
        je["runtime_seconds"] = e.runtime_seconds;
        if (!e.error.empty()) je["error"] = e.error;
        if (e.ran) {
            je["series"] = e.series_path;
            je["final"] = {{"mean_x", e.mean_x}, {"mean_p", e.mean_p}, {"sxx", e.sxx},
                           {"sxp", e.sxp},       {"spp", e.spp}};
            if (e.engine == Engine::fock || e.engine == Engine::stochastic_quantum)
                je["min_eigenvalue"] = e.min_eigenvalue;
            if (e.engine == Engine::gaussian && cfg.frame == Frame::canonical)
                je["frame_check_max_deviation"] = e.min_eigenvalue;
        }
        jeng[engine_name(e.engine)] = je;
    }
    j["engines"] = jeng;
    ordered_json jcross;
    for (const auto& [k, v] : report.cross_discrepancies) jcross[k] = v;
    j["cross_discrepancies"] = jcross;
    j["min_lindblad_margin"] = report.min_margin;
    j["fp_mass_drift"] = report.fp_mass_drift;
    j["tolerances_ok"] = report.tolerances_ok;
    j["exit_code"] = report.exit_code;

    report.summary_path = cfg.out_dir + "/summary.json";
    std::ofstream jf(report.summary_path, std::ios::binary);
    jf << j.dump(2) << "\n";

    return report;
}

} // namespace qbm
