// gaussian.hpp — Exact-to-quadrature evolution of first and second moments,
// Gaussian phase-space propagators in the physical and canonical frames, and
// the frame-equivalence map.
//
// Physical frame: drift A = [[mu-lambda, 1/m], [-m w0^2, -(mu+lambda)]],
// diffusion D = [[D_x, D_z], [D_z, D_p]], d<q>/dt = A<q>,
// dM/dt = A M + M A^T + 2D.
//
// Canonical frame (translationally invariant subfamily lambda = mu only):
// P = e^Gamma p with Gamma(t) = integral of 2*lambda. Drift and diffusion
// pick up e^(+-Gamma) factors; covariances map as N11 = M11,
// N12 = e^Gamma M12, N22 = e^(2 Gamma) M22 and densities carry a Jacobian
// e^(-Gamma). All exponentials use Gamma itself (e^(2 lambda t) for constant
// lambda); frame equivalence is verified numerically by the test suite.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qbm/model.hpp"

namespace qbm {

struct GaussianState {
    Eigen::Vector2d mean{0.0, 0.0};   // <x>, <p>
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero(); // [[sxx, sxp], [sxp, spp]]

    double det() const { return cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0); }

    static GaussianState ground(const OscillatorParams& osc);
    static GaussianState coherent(const OscillatorParams& osc, std::complex<double> alpha);
    static GaussianState thermal(const OscillatorParams& osc, double nbar);
    // Squeezed vacuum S(r e^{i phase})|0>, displaced by alpha.
    static GaussianState squeezed(const OscillatorParams& osc, double r, double phase,
                                  std::complex<double> alpha = 0.0);
};

enum class Frame { physical, canonical };

Eigen::Matrix2d drift_matrix(const OscillatorParams& osc, const CoefficientSchedule& cs,
                             double t);
Eigen::Matrix2d diffusion_matrix(const CoefficientSchedule& cs, double t);

struct MomentSeries {
    std::vector<double> times;
    std::vector<GaussianState> states;
    std::vector<double> margins; // Lindblad margin sampled along the run

    const GaussianState& back() const { return states.back(); }
};

// Fixed-step classical RK4 on the 5-dimensional moment vector; the
// covariance is stored by its three independent entries so M stays exactly
// symmetric. Throws IntegrationDiverged on non-finite values.
MomentSeries evolve_moments(const GaussianState& state0, const OscillatorParams& osc,
                            const CoefficientSchedule& cs, double t_final, double dt,
                            int sample_every = 1);

// Unique solution M of A M + M A^T + 2 D = 0 via the direct 3x3 linear
// system in (sxx, sxp, spp). Requires A Hurwitz; throws NoSteadyState.
Eigen::Matrix2d steady_state_covariance(const Eigen::Matrix2d& A, const Eigen::Matrix2d& D);

struct Propagator {
    Eigen::Matrix2d r = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d n = Eigen::Matrix2d::Zero();
    Frame frame = Frame::physical;
    double gamma = 0.0; // Gamma(t) accumulated along the integration

    // Moments transported by this propagator from an initial state given in
    // the same frame.
    GaussianState apply(const GaussianState& initial) const;
};

struct PropagatorSeries {
    std::vector<double> times;
    std::vector<Propagator> props;

    const Propagator& back() const { return props.back(); }
};

// Integrates dR/dt = A R, dN/dt = A N + N A^T + 2 D from R(0) = I, N(0) = 0
// in the requested frame. The canonical frame is only defined for lambda =
// mu; UnsupportedFrame otherwise.
PropagatorSeries propagator(const OscillatorParams& osc, const CoefficientSchedule& cs,
                            Frame frame, double t_final, double dt, int sample_every = 1);

// Normalized bivariate Gaussian at (x, p); DegenerateCovariance if det <= 0.
double gaussian_density(const GaussianState& state, double x, double p);

// Frame maps: <p> = <P> e^-Gamma, M11 = N11, M12 = e^-Gamma N12,
// M22 = e^-2Gamma N22 (and inverse).
GaussianState canonical_to_physical(const Eigen::Vector2d& mean_P, const Eigen::Matrix2d& cov_N,
                                    double gamma_t);
GaussianState physical_to_canonical(const GaussianState& physical, double gamma_t);

} // namespace qbm
