// errors.hpp — Typed failure conditions raised by the engines

#pragma once

#include <stdexcept>
#include <string>

namespace qbm {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values appeared during time integration.
struct IntegrationDiverged : SimulationError {
    long step;
    double time;
    IntegrationDiverged(long step_, double time_)
        : SimulationError("integration diverged at step " + std::to_string(step_) +
                          " (t = " + std::to_string(time_) + ")"),
          step(step_), time(time_) {}
};

// D_p*D_x - D_z^2 - (hbar*lambda/2)^2 < 0 or a diffusion coefficient is negative.
struct NotLindbladReducible : SimulationError {
    double margin;
    explicit NotLindbladReducible(double margin_)
        : SimulationError("coefficients not reducible to Lindblad form (margin = " +
                          std::to_string(margin_) + ")"),
          margin(margin_) {}
};

// Population reached the top of the Fock ladder.
struct TruncationInsufficient : SimulationError {
    double time;
    double leakage;
    TruncationInsufficient(double time_, double leakage_)
        : SimulationError("Fock truncation insufficient at t = " + std::to_string(time_) +
                          " (top-level population " + std::to_string(leakage_) + ")"),
          time(time_), leakage(leakage_) {}
};

struct UnstableStep : SimulationError {
    double suggested_dt;
    UnstableStep(double dt, double suggested)
        : SimulationError("explicit step dt = " + std::to_string(dt) +
                          " violates the stability bound; use dt <= " + std::to_string(suggested)),
          suggested_dt(suggested) {}
};

// Classical noise covariance is not positive semidefinite (a*b < c^2).
struct UnsamplableNoise : SimulationError {
    using SimulationError::SimulationError;
};

struct NoSteadyState : SimulationError {
    using SimulationError::SimulationError;
};

struct UnsupportedFrame : SimulationError {
    using SimulationError::SimulationError;
};

struct DegenerateCovariance : SimulationError {
    using SimulationError::SimulationError;
};

struct GridResolution : SimulationError {
    double normalization_error;
    explicit GridResolution(double err)
        : SimulationError("phase-space grid too coarse (normalization off by " +
                          std::to_string(err) + ")"),
          normalization_error(err) {}
};

struct ParseError : SimulationError {
    int line;
    std::string field;
    ParseError(int line_, std::string field_, const std::string& what_)
        : SimulationError("parse error at line " + std::to_string(line_) +
                          (field_.empty() ? "" : " (field '" + field_ + "')") + ": " + what_),
          line(line_), field(std::move(field_)) {}
};

} // namespace qbm
