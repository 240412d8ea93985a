#include "qbm/wigner.hpp"

#include <cmath>

namespace qbm {

Eigen::VectorXd hermite_functions(const OscillatorParams& osc, int n_max, double x) {
    // h_0 = pi^-1/4 e^{-xi^2/2}, h_n = xi sqrt(2/n) h_{n-1} - sqrt((n-1)/n) h_{n-2};
    // psi_n(x) = h_n(x/l) / sqrt(l) with l = sqrt(hbar / m w0).
    const double l = std::sqrt(osc.hbar / (osc.mass * osc.omega0));
    const double xi = x / l;
    Eigen::VectorXd h(n_max);
    const double norm = 1.0 / std::sqrt(l);
    h(0) = 0.7511255444649424828587030047762276930510 * std::exp(-0.5 * xi * xi) * norm;
    if (n_max > 1) h(1) = xi * std::sqrt(2.0) * h(0);
    for (int n = 2; n < n_max; ++n)
        h(n) = xi * std::sqrt(2.0 / n) * h(n - 1) - std::sqrt((n - 1.0) / n) * h(n - 2);
    return h;
}

WignerGrid wigner_transform(const Mat& rho, const OperatorSet& ops,
                            const WignerGridSpec& spec) {
    const OscillatorParams& osc = ops.osc;
    const double hbar = osc.hbar;
    const int n = ops.n_max;

    double x_half = spec.x_half, p_half = spec.p_half;
    if (x_half <= 0.0 || p_half <= 0.0) {
        const FockObservables o = observables(rho, ops);
        const double kx = 8.0 * std::sqrt(std::max(o.sxx, 1e-300));
        const double kp = 8.0 * std::sqrt(std::max(o.spp, 1e-300));
        x_half = std::abs(o.mean_x) + kx;
        p_half = std::abs(o.mean_p) + kp;
    }

    WignerGrid w = WignerGrid::make(spec.nx, spec.np, x_half, p_half);

    // y-quadrature: resolve the fastest phase 2 p_max y / hbar and cover the
    // classically allowed support of the highest retained level.
    const double l = std::sqrt(hbar / (osc.mass * osc.omega0));
    const double p_max = std::max(std::abs(w.p_at(0)), std::abs(w.p_at(w.np - 1)));
    const double turn = l * std::sqrt(2.0 * n + 1.0);
    const double y_max = 1.2 * turn + x_half;
    double dy = 3.14159265358979323846 * hbar / (2.0 * std::max(p_max, 1e-300));
    dy = std::min(dy / spec.y_oversample, l / 6.0);
    const int ny = static_cast<int>(std::ceil(y_max / dy));

    // Phase tables cos/sin(2 p_j y_k / hbar), (ny+1) x np.
    Eigen::MatrixXd ctab(ny + 1, w.np), stab(ny + 1, w.np);
    for (int j = 0; j < w.np; ++j) {
        const double f = 2.0 * w.p_at(j) / hbar;
        for (int k = 0; k <= ny; ++k) {
            ctab(k, j) = std::cos(f * k * dy);
            stab(k, j) = std::sin(f * k * dy);
        }
    }

    Eigen::VectorXd sr(ny + 1), si(ny + 1);
    const double prefactor = dy / (3.14159265358979323846 * hbar);
    for (int i = 0; i < w.nx; ++i) {
        const double x = w.x_at(i);
        // S_k = phi(x-y)^T rho phi(x+y); S_{-k} = conj(S_k) since rho is
        // Hermitian and the phi are real.
        for (int k = 0; k <= ny; ++k) {
            const double y = k * dy;
            const Eigen::VectorXd phi_m = hermite_functions(osc, n, x - y);
            const Eigen::VectorXd phi_p = hermite_functions(osc, n, x + y);
            const std::complex<double> s =
                (phi_m.cast<std::complex<double>>().transpose() * rho *
                 phi_p.cast<std::complex<double>>())(0, 0);
            sr(k) = s.real();
            si(k) = s.imag();
        }
        // trapezoid over y in [-ymax, ymax] using conjugate symmetry
        const double w0 = sr(0);
        sr(0) = 0.0;
        si(0) = 0.0;
        sr(ny) *= 0.5;
        si(ny) *= 0.5;
        w.values.col(i) =
            prefactor * (w0 + 2.0 * (ctab.transpose() * sr + stab.transpose() * si).array())
                .matrix();
    }

    const double mass = w.values.sum() * w.cell_area();
    const double err = std::abs(mass - rho.trace().real());
    if (err > spec.normalization_tol) throw GridResolution(err);
    return w;
}

} // namespace qbm
