// fock.hpp — Truncated Fock-basis realization of the bilinear master
// equation, its Lindblad decomposition, observables, and state factories.
//
// The generator is
//   drho/dt = -(i/hbar)[H, rho] + L rho,  H = H0 + (mu/2){x, p},
//   L rho = (i lambda / 2 hbar) ([p, {x, rho}] - [x, {p, rho}])
//           - (D_p/hbar^2) [x, [x, rho]] - (D_x/hbar^2) [p, [p, rho]]
//           + (D_z/hbar^2) ([x, [p, rho]] + [p, [x, rho]]).
// The two D_z double commutators are kept separately (not folded into one
// doubled term): they differ at the truncation corner where [x, p] != i hbar,
// and only the symmetric form is reproduced entrywise by the Lindblad
// decomposition on the truncated matrices.

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qbm/banded.hpp"
#include "qbm/model.hpp"

namespace qbm {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct OperatorSet {
    int n_max = 0;
    OscillatorParams osc;
    Mat a, adag, x, p, h0, hmu; // hmu = (1/2){x, p}; H = h0 + mu * hmu
    Mat x2, p2, xp;             // cached products; px = xp.adjoint()

    Banded bx, bp;                       // bandwidth 1
    Banded bh0, bhmu, bx2, bp2, bxp, bpx; // bandwidth 2
};

// Standard ladder matrix elements: a(n-1, n) = sqrt(n);
// x = x_scale (a + a†), p = i p_scale (a† - a), h0 = hbar w0 (a†a + 1/2).
OperatorSet build_operators(const OscillatorParams& osc, int n_max);

// dim-n_max state vectors
Vec coherent_state(int n_max, std::complex<double> alpha);
Vec fock_state(int n_max, int n);
Vec squeezed_state(int n_max, double r, double phase = 0.0);

struct DensityMatrix {
    Mat rho;

    int dim() const { return static_cast<int>(rho.rows()); }
    static DensityMatrix pure(const Vec& psi) { return {psi * psi.adjoint()}; }
    static DensityMatrix thermal(int n_max, double nbar);
    // Hermiticity / unit-trace residuals for invariant checks.
    double hermiticity_residual() const;
    double trace_error() const;
};

// Displaced squeezed thermal state with the requested Gaussian moments
// (one-mode Williamson construction). Requires det M >= (hbar/2)^2.
struct GaussianState;
DensityMatrix gaussian_density_matrix(const OperatorSet& ops, const Eigen::Vector2d& mean,
                                      const Eigen::Matrix2d& cov);

// Right-hand side of the master equation at time t. rho must be Hermitian.
Mat liouvillian_apply(const Mat& rho, const OperatorSet& ops, const CoefficientSchedule& cs,
                      double t);

struct FockObservables {
    double mean_x = 0, mean_p = 0, sxx = 0, sxp = 0, spp = 0;
    double purity = 0, trace = 0, min_eig = 0, leakage = 0;
};

// All expectations via trace pairing; sxp = <{x,p}>/2 - <x><p>.
FockObservables observables(const Mat& rho, const OperatorSet& ops);

struct FockSeries {
    std::vector<double> times;
    std::vector<FockObservables> obs;
    std::vector<Mat> states; // sampled density matrices (same times)
    // Raw per-step integrator residuals, recorded before the re-Hermitize /
    // renormalize guards are applied.
    double max_trace_drift = 0.0;
    double max_hermiticity_residual = 0.0;
};

struct FockEvolveOptions {
    int sample_every = 1;
    double leakage_threshold = 1e-8;
    bool store_states = true;
    bool track_min_eig = true;
};

// Fixed-step RK4 on the matrix ODE. Each step re-Hermitizes and renormalizes
// the trace (guards, not crutches: raw drifts are recorded and asserted by
// tests). Throws TruncationInsufficient when the top two Fock levels exceed
// the leakage threshold.
FockSeries evolve_density(const DensityMatrix& rho0, const OperatorSet& ops,
                          const CoefficientSchedule& cs, double t_final, double dt,
                          const FockEvolveOptions& opts = {});

// Factorizes the 2x2 coefficient matrix [[D_p, s], [s*, D_x]]/hbar^2 with
// s = -D_z - i hbar lambda / 2 into at most two (alpha, beta) pairs.
// Throws NotLindbladReducible (carrying the margin) when margin < 0.
LindbladSet lindblad_decompose(const CoefficientSchedule& cs, double t,
                               const OscillatorParams& osc);

// Dissipator assembled from a Lindblad set: sum_j (2 Phi rho Phi† - Phi†Phi
// rho - rho Phi†Phi). For a valid decomposition this equals the whole
// non-Hamiltonian part of the generator (friction and diffusion terms),
// i.e. liouvillian_apply(rho) + (i/hbar)[H, rho], entrywise on the
// truncated matrices.
Mat lindblad_dissipator_apply(const Mat& rho, const LindbladSet& set, const OperatorSet& ops);

// Trace distance (1/2) || a - b ||_1 of two Hermitian matrices.
double trace_distance(const Mat& a, const Mat& b);

} // namespace qbm
