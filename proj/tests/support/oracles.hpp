// oracles.hpp — Independent reference implementations used only by tests.
// None of these share code paths with the library kernels they check.

#pragma once

#include <cmath>
#include <complex>

#include "qbm/fock.hpp"
#include "qbm/gaussian.hpp"
#include "qbm/rng.hpp"

namespace qbm::oracle {

// The master-equation right-hand side assembled literally term by term:
// -(i/hbar)[H, rho] + (i lambda/2hbar)[p, {x, rho}] - (i lambda/2hbar)[x, {p, rho}]
// - (D_p/hbar^2)[x,[x,rho]] - (D_x/hbar^2)[p,[p,rho]]
// + (D_z/hbar^2)([x,[p,rho]] + [p,[x,rho]]).
inline Mat liouvillian_reference(const Mat& rho, const OperatorSet& ops,
                                 const Coefficients& c) {
    using namespace std::complex_literals;
    const double hbar = ops.osc.hbar;
    const double h2 = hbar * hbar;
    const Mat& x = ops.x;
    const Mat& p = ops.p;
    auto comm = [](const Mat& a, const Mat& b) { return Mat(a * b - b * a); };
    auto anti = [](const Mat& a, const Mat& b) { return Mat(a * b + b * a); };

    const Mat H = ops.h0 + c.mu * ops.hmu;
    Mat rhs = (-1.0i / hbar) * comm(H, rho);
    rhs += (0.5i * c.lambda / hbar) * comm(p, anti(x, rho));
    rhs -= (0.5i * c.lambda / hbar) * comm(x, anti(p, rho));
    rhs -= (c.dp / h2) * comm(x, comm(x, rho));
    rhs -= (c.dx / h2) * comm(p, comm(p, rho));
    rhs += (c.dz / h2) * (comm(x, comm(p, rho)) + comm(p, comm(x, rho)));
    return rhs;
}

// Damped oscillator mean motion for constant lambda = mu < omega0, D = 0:
// x'' + 2 lambda x' + w0^2 x = 0 with x' = p/m.
struct DampedMeans {
    double x, p;
};
inline DampedMeans damped_oscillator_means(double x0, double p0,
                                           const OscillatorParams& osc, double lambda,
                                           double t) {
    const double wt = std::sqrt(osc.omega0 * osc.omega0 - lambda * lambda);
    const double v0 = p0 / osc.mass;
    const double c = std::cos(wt * t), s = std::sin(wt * t);
    const double e = std::exp(-lambda * t);
    const double x = e * (x0 * c + (v0 + lambda * x0) / wt * s);
    const double v = e * (v0 * c - (osc.omega0 * osc.omega0 * x0 + lambda * v0) / wt * s);
    return {x, osc.mass * v};
}

// <a>(t) = alpha e^{-(lambda + i w0) t} for the zero-temperature optical
// master equation acting on a coherent state.
inline std::complex<double> coherent_decay(std::complex<double> alpha, double lambda,
                                           double omega0, double t) {
    return alpha * std::exp(std::complex<double>(-lambda * t, -omega0 * t));
}

// Random Hermitian matrix with entries of order 1.
inline Mat random_hermitian(int n, RngStream& rng) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = std::complex<double>(rng.next_normal(), rng.next_normal());
    return 0.5 * (m + m.adjoint());
}

// Random physical density matrix (positive, unit trace).
inline Mat random_density(int n, RngStream& rng) {
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            g(i, j) = std::complex<double>(rng.next_normal(), rng.next_normal());
    Mat rho = g * g.adjoint();
    return rho / rho.trace().real();
}

inline double rel_err(double got, double want, double floor = 1e-300) {
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

} // namespace qbm::oracle
