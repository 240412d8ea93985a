// grid.hpp — Sampled phase-space functions W(x, p) on a rectangular grid.
// Shared between the Wigner transform and the Fokker-Planck solver so grids
// can be differenced directly.

#pragma once

#include <Eigen/Dense>

#include "qbm/model.hpp"

namespace qbm {

struct GridMoments {
    double mean_x = 0, mean_p = 0, sxx = 0, sxp = 0, spp = 0, mass = 0;
};

struct WignerGrid {
    int nx = 0, np = 0;
    double x0 = 0, p0 = 0; // center of the first cell
    double dx = 0, dp = 0;
    // values(j, i) = W(x0 + i*dx, p0 + j*dp); p runs down a column so the
    // p-direction stencils touch contiguous memory.
    Eigen::MatrixXd values;

    static WignerGrid make(int nx, int np, double x_half, double p_half) {
        WignerGrid g;
        g.nx = nx;
        g.np = np;
        g.dx = 2.0 * x_half / nx;
        g.dp = 2.0 * p_half / np;
        g.x0 = -x_half + 0.5 * g.dx;
        g.p0 = -p_half + 0.5 * g.dp;
        g.values = Eigen::MatrixXd::Zero(np, nx);
        return g;
    }

    double x_at(int i) const { return x0 + i * dx; }
    double p_at(int j) const { return p0 + j * dp; }
    double cell_area() const { return dx * dp; }
};

// Midpoint-rule quadrature moments; means and covariances are normalized by
// the Riemann mass.
GridMoments grid_moments(const WignerGrid& w);

// Fills a grid with a bivariate Gaussian (means, covariance).
struct GaussianState;
void fill_gaussian(WignerGrid& w, const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov);

// Analytic Wigner function of the Fock state |n>:
// W_n = ((-1)^n / pi hbar) L_n(4 eps) e^{-2 eps},
// eps = m w0 x^2 / (2 hbar) + p^2 / (2 m hbar w0).
void fill_fock_wigner(WignerGrid& w, const OscillatorParams& osc, int n);

} // namespace qbm
