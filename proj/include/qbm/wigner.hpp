// wigner.hpp — Wigner transform of a Fock-basis density matrix:
// W(x, p) = (1/pi hbar) \int dy e^{-2ipy/hbar} <x-y|rho|x+y>,
// evaluated by Hermite-function reconstruction of the position-basis kernel
// (stabilized two-term recurrence, no factorials) and trapezoidal
// y-quadrature.

#pragma once

#include "qbm/fock.hpp"
#include "qbm/grid.hpp"

namespace qbm {

struct WignerGridSpec {
    int nx = 129, np = 129;
    double x_half = 0.0, p_half = 0.0; // half-widths; 0 = derive from rho (8 sigma)
    double y_oversample = 5.0;         // quadrature points per half oscillation
    double normalization_tol = 1e-6;
};

// Orthonormal harmonic-oscillator eigenfunctions psi_n(x), n < n_max.
Eigen::VectorXd hermite_functions(const OscillatorParams& osc, int n_max, double x);

// Throws GridResolution when the grid mass misses Tr rho by more than the
// configured tolerance.
WignerGrid wigner_transform(const Mat& rho, const OperatorSet& ops,
                            const WignerGridSpec& spec);

} // namespace qbm
