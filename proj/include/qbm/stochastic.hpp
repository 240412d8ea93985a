// stochastic.hpp — Classical and quantum trajectories driven by the two
// delta-correlated forces, and their ensemble averages.
//
// Per step of size dt the integrated force increments (dF, dG) are a
// bivariate Gaussian with covariance [[2A dt, 2mC dt], [2mC dt, 2m^2 B dt]].
// A classical step receives -dG/m on x and +dF on p; a quantum step applies
// the displacement exp[(i/hbar)(e^Gamma dF x + (dG/m) P)] between two
// half-steps of the effective Hamiltonian
//   H_ef = e^-Gamma P^2/(2m) + (1/2) m w0^2 e^Gamma x^2
// (Strang splitting; the displacement is the exact exponential of the
// truncated anti-Hermitian generator, so the state norm is preserved).
//
// Reproducibility contract: every trajectory draws from an RngStream
// substream derived from (seed, trajectory_index) only, and ensemble
// reductions accumulate in trajectory order, so results are bit-identical
// across runs regardless of scheduling.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "qbm/fock.hpp"
#include "qbm/gaussian.hpp"
#include "qbm/model.hpp"
#include "qbm/rng.hpp"

namespace qbm {

using TimeFn = std::function<double(double)>;

inline TimeFn as_fn(const Schedule& s) {
    return [s](double t) { return s(t); };
}

struct ForceIncrements {
    double df = 0.0; // integral of F over the step (momentum units)
    double dg = 0.0; // integral of G over the step (momentum * time units)
    double dt = 0.0;
};

// Draws one step's increments; throws UnsamplableNoise when a b - c^2 < 0
// beyond a small slack.
ForceIncrements sample_increments(const NoiseCorrelations& nc, double t, double dt,
                                  RngStream& rng, const OscillatorParams& osc);

// One Euler-Maruyama step (semi-implicit drift: p first, then x with the
// updated p).
std::array<double, 2> classical_step(double x, double p, const OscillatorParams& osc,
                                     const NoiseCorrelations& nc, double t, double dt,
                                     const ForceIncrements& inc);

// Effective deterministic force F - Gamma_dot G - G_dot, with G_dot taken by
// central differences of step h.
TimeFn equivalent_force_reduction(TimeFn f, TimeFn g, TimeFn gamma_dot, double h = 1e-6);

struct ClassicalPath {
    std::vector<double> times, x, p;
};

// Deterministic RK4 reference integrator for
//   x' = p/m - G/m,  p' = -m w0^2 x + F - Gamma_dot p.
ClassicalPath integrate_classical(const OscillatorParams& osc, const TimeFn& f,
                                  const TimeFn& g, const TimeFn& gamma_dot, double x0,
                                  double p0, double t_final, double dt);

// Same dynamics with F = 0 and G reconstructed on the fly from the effective
// force: G(t) = K e^-Gamma - e^-Gamma \int_0^t e^Gamma Feff dtau, carried as
// an auxiliary ODE alongside (x, p) so no interpolation error enters.
ClassicalPath integrate_classical_g_only(const OscillatorParams& osc, const TimeFn& f_eff,
                                         const TimeFn& gamma, const TimeFn& gamma_dot,
                                         double K, double x0, double p0, double t_final,
                                         double dt);

struct EnsembleSpec {
    int n_traj = 1000;
    std::uint64_t seed = 0;
    double t_final = 1.0;
    double dt = 1e-3;
    int sample_every = 1;
    bool keep_paths = false;
};

struct MomentStats {
    double mean_x = 0, mean_p = 0, sxx = 0, sxp = 0, spp = 0;
    // jackknife standard errors
    double se_mean_x = 0, se_mean_p = 0, se_sxx = 0, se_sxp = 0, se_spp = 0;
};

struct EnsembleSeries {
    std::vector<double> times;
    std::vector<MomentStats> stats;
    // paths[traj][output_index] = (x, p); filled when keep_paths is set
    std::vector<std::vector<std::array<double, 2>>> paths;
};

// Unbiased sample means/covariances across trajectories with jackknife
// standard errors. Initial conditions are drawn from the Gaussian init
// state (zero covariance = deterministic start). Requires n_traj >= 100.
EnsembleSeries ensemble_covariances(const GaussianState& init, const OscillatorParams& osc,
                                    const NoiseCorrelations& nc, const EnsembleSpec& spec);

// Cached per-step Strang propagator shared by all trajectories of a run.
class QuantumPropagator {
public:
    QuantumPropagator(const OperatorSet& ops, const NoiseCorrelations& nc, double t0,
                      double dt, long n_steps);

    double time_at(long k) const { return t0_ + k * dt_; }
    double dt() const { return dt_; }
    long n_steps() const { return n_steps_; }
    double gamma_mid(long k) const { return gamma_mid_[k]; }

    void step(Vec& psi, long k, const ForceIncrements& inc) const;
    void step(Mat& rho, long k, const ForceIncrements& inc) const;

    // exp[(i/hbar)(c_f x + c_g P)] applied in place.
    void apply_displacement(Vec& psi, double c_f, double c_g) const;
    Mat displacement_matrix(double c_f, double c_g) const;

private:
    const OperatorSet* ops_;
    double t0_, dt_;
    long n_steps_;
    bool diagonal_;            // Gamma == 0: H_ef = h0, half steps are phases
    Vec diag_half_;            // e^{-i h0 dt / 2 hbar}
    std::vector<Mat> u_first_, u_second_;
    std::vector<double> gamma_mid_;
    Eigen::MatrixXd quad_q_;   // eigenvectors of (a + a†)
    Eigen::VectorXd quad_w_;   // eigenvalues
};

// One Strang step (half H_ef, exact displacement kick, half H_ef); dt = 0
// reduces to the bare kick. Norm is preserved to roundoff.
Vec quantum_kick(const Vec& psi, const OperatorSet& ops, const NoiseCorrelations& nc,
                 double t, double dt, const ForceIncrements& inc);

struct QuantumEnsembleSeries {
    std::vector<double> times;
    std::vector<double> gammas;   // Gamma(t) at the sample times
    std::vector<Mat> rho_avg;     // canonical-frame ensemble averages
    double max_norm_error = 0.0;  // worst |1 - ||psi||| seen across the run
};

// Averages n_traj independent random-unitary trajectories; pure rho0 runs
// state-vector trajectories, mixed rho0 falls back to matrix trajectories.
// Requires n_traj >= 100.
QuantumEnsembleSeries ensemble_average_density(const DensityMatrix& rho0,
                                               const OperatorSet& ops,
                                               const NoiseCorrelations& nc,
                                               const EnsembleSpec& spec,
                                               double leakage_threshold = 1e-6);

} // namespace qbm
