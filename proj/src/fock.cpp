#include "qbm/fock.hpp"

#include <cmath>

#include "qbm/gaussian.hpp"

namespace qbm {

using namespace std::complex_literals;

OperatorSet build_operators(const OscillatorParams& osc, int n_max) {
    if (n_max < 2) throw std::invalid_argument("n_max must be at least 2");
    OperatorSet ops;
    ops.n_max = n_max;
    ops.osc = osc;

    ops.a = Mat::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) ops.a(n - 1, n) = std::sqrt(static_cast<double>(n));
    ops.adag = ops.a.adjoint();

    const double sx = osc.x_scale(), sp = osc.p_scale();
    ops.x = sx * (ops.a + ops.adag);
    ops.p = 1.0i * sp * (ops.adag - ops.a);
    ops.h0 = Mat::Zero(n_max, n_max);
    for (int n = 0; n < n_max; ++n) ops.h0(n, n) = osc.hbar * osc.omega0 * (n + 0.5);
    ops.x2 = ops.x * ops.x;
    ops.p2 = ops.p * ops.p;
    ops.xp = ops.x * ops.p;
    ops.hmu = 0.5 * (ops.xp + ops.xp.adjoint());

    ops.bx = Banded::from_dense(ops.x, 1);
    ops.bp = Banded::from_dense(ops.p, 1);
    ops.bh0 = Banded::from_dense(ops.h0, 2);
    ops.bhmu = Banded::from_dense(ops.hmu, 2);
    ops.bx2 = Banded::from_dense(ops.x2, 2);
    ops.bp2 = Banded::from_dense(ops.p2, 2);
    ops.bxp = Banded::from_dense(ops.xp, 2);
    ops.bpx = Banded::from_dense(ops.xp.adjoint(), 2);
    return ops;
}

Vec coherent_state(int n_max, std::complex<double> alpha) {
    Vec c(n_max);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return c / c.norm();
}

Vec fock_state(int n_max, int n) {
    if (n < 0 || n >= n_max) throw std::invalid_argument("Fock index outside truncation");
    Vec c = Vec::Zero(n_max);
    c(n) = 1.0;
    return c;
}

Vec squeezed_state(int n_max, double r, double phase) {
    // |r, phase> = S|0> with c_2n = sech(r)^1/2 (-e^{i phase} tanh r)^n
    // sqrt((2n)!)/(2^n n!); computed by a stable ratio recurrence.
    Vec c = Vec::Zero(n_max);
    const double th = std::tanh(r);
    const std::complex<double> factor = -std::polar(th, phase);
    std::complex<double> cur = std::sqrt(1.0 / std::cosh(r));
    c(0) = cur;
    for (int n = 1; 2 * n < n_max; ++n) {
        cur *= factor * std::sqrt((2.0 * n) * (2.0 * n - 1.0)) / (2.0 * n);
        c(2 * n) = cur;
    }
    return c / c.norm();
}

DensityMatrix DensityMatrix::thermal(int n_max, double nbar) {
    Mat rho = Mat::Zero(n_max, n_max);
    if (nbar <= 0.0) {
        rho(0, 0) = 1.0;
        return {rho};
    }
    const double q = nbar / (nbar + 1.0);
    double w = 1.0, sum = 0.0;
    for (int n = 0; n < n_max; ++n, w *= q) {
        rho(n, n) = w;
        sum += w;
    }
    rho /= sum; // renormalize the truncated geometric series
    return {rho};
}

double DensityMatrix::hermiticity_residual() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::trace_error() const { return std::abs(rho.trace().real() - 1.0) +
                                                   std::abs(rho.trace().imag()); }

namespace {

struct GeneratorCoeffs {
    Banded g;                     // left factor: rhs = G rho + (G rho)† + sandwich
    std::complex<double> c_xx, c_pp, c_xp, c_px; // sandwich word coefficients
};

GeneratorCoeffs generator_coeffs(const OperatorSet& ops, const Coefficients& c) {
    const double hbar = ops.osc.hbar;
    const double h2 = hbar * hbar;
    GeneratorCoeffs gc;
    gc.g = Banded(ops.n_max, 2);
    // -(i/hbar) H with H = h0 + mu * hmu
    gc.g.add_scaled(std::complex<double>(0.0, -1.0 / hbar), ops.bh0);
    gc.g.add_scaled(std::complex<double>(0.0, -c.mu / hbar), ops.bhmu);
    // left words of the dissipator
    gc.g.add_scaled(-c.dp / h2, ops.bx2);
    gc.g.add_scaled(-c.dx / h2, ops.bp2);
    gc.g.add_scaled(std::complex<double>(c.dz / h2, -c.lambda / (2.0 * hbar)), ops.bxp);
    gc.g.add_scaled(std::complex<double>(c.dz / h2, c.lambda / (2.0 * hbar)), ops.bpx);
    // sandwich words
    gc.c_xx = 2.0 * c.dp / h2;
    gc.c_pp = 2.0 * c.dx / h2;
    gc.c_xp = std::complex<double>(-2.0 * c.dz / h2, -c.lambda / hbar);
    gc.c_px = std::conj(gc.c_xp);
    return gc;
}

// Workspace buffers reused across RK4 stages.
struct LiouvillianWorkspace {
    Mat xr, pr, gr, mix, out;
    void resize(int n) {
        xr.resize(n, n);
        pr.resize(n, n);
        gr.resize(n, n);
        mix.resize(n, n);
        out.resize(n, n);
    }
};

// rhs = G rho + (G rho)† + (c_xx x rho + c_px p rho) x + (c_xp x rho + c_pp p rho) p.
// Word-for-word identical to the six-term assembly in the header comment;
// requires rho Hermitian (all RK4 stage arguments are).
void liouvillian_into(const Mat& rho, const OperatorSet& ops, const GeneratorCoeffs& gc,
                      LiouvillianWorkspace& ws, Mat& rhs) {
    ops.bx.apply_left(rho, ws.xr);
    ops.bp.apply_left(rho, ws.pr);
    gc.g.apply_left(rho, ws.gr);
    rhs = ws.gr + ws.gr.adjoint();
    ws.mix = gc.c_xx * ws.xr + gc.c_px * ws.pr;
    ops.bx.apply_right(ws.mix, ws.out);
    rhs += ws.out;
    ws.mix = gc.c_xp * ws.xr + gc.c_pp * ws.pr;
    ops.bp.apply_right(ws.mix, ws.out);
    rhs += ws.out;
}

} // namespace

Mat liouvillian_apply(const Mat& rho, const OperatorSet& ops, const CoefficientSchedule& cs,
                      double t) {
    const GeneratorCoeffs gc = generator_coeffs(ops, cs.eval(t));
    LiouvillianWorkspace ws;
    ws.resize(ops.n_max);
    Mat rhs(ops.n_max, ops.n_max);
    liouvillian_into(rho, ops, gc, ws, rhs);
    return rhs;
}

FockObservables observables(const Mat& rho, const OperatorSet& ops) {
    FockObservables o;
    o.trace = rho.trace().real();
    o.mean_x = ops.bx.trace_prod(rho).real();
    o.mean_p = ops.bp.trace_prod(rho).real();
    o.sxx = ops.bx2.trace_prod(rho).real() - o.mean_x * o.mean_x;
    o.spp = ops.bp2.trace_prod(rho).real() - o.mean_p * o.mean_p;
    o.sxp = ops.bhmu.trace_prod(rho).real() - o.mean_x * o.mean_p;
    o.purity = rho.squaredNorm();
    const int n = ops.n_max;
    o.leakage = rho(n - 1, n - 1).real() + rho(n - 2, n - 2).real();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()),
                                          Eigen::EigenvaluesOnly);
    o.min_eig = es.eigenvalues().minCoeff();
    return o;
}

FockSeries evolve_density(const DensityMatrix& rho0, const OperatorSet& ops,
                          const CoefficientSchedule& cs, double t_final, double dt,
                          const FockEvolveOptions& opts) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (rho0.dim() != ops.n_max) throw std::invalid_argument("dimension mismatch");

    const int n = ops.n_max;
    Mat rho = 0.5 * (rho0.rho + rho0.rho.adjoint());
    rho /= rho.trace().real();

    FockSeries out;
    LiouvillianWorkspace ws;
    ws.resize(n);
    Mat k1(n, n), k2(n, n), k3(n, n), k4(n, n), stage(n, n);

    const long n_steps = std::lround(t_final / dt);
    const int sample_every = std::max(1, opts.sample_every);

    auto sample = [&](double t) {
        out.times.push_back(t);
        FockObservables o = observables(rho, ops);
        if (!opts.track_min_eig) o.min_eig = 0.0;
        out.obs.push_back(o);
        if (opts.store_states) out.states.push_back(rho);
    };
    sample(0.0);

    for (long step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        const GeneratorCoeffs g0 = generator_coeffs(ops, cs.eval(t));
        const GeneratorCoeffs gh = generator_coeffs(ops, cs.eval(t + 0.5 * dt));
        const GeneratorCoeffs g1 = generator_coeffs(ops, cs.eval(t + dt));

        liouvillian_into(rho, ops, g0, ws, k1);
        stage = rho + (0.5 * dt) * k1;
        liouvillian_into(stage, ops, gh, ws, k2);
        stage = rho + (0.5 * dt) * k2;
        liouvillian_into(stage, ops, gh, ws, k3);
        stage = rho + dt * k3;
        liouvillian_into(stage, ops, g1, ws, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        // raw residuals before the guards
        const double raw_trace = rho.trace().real();
        if (!std::isfinite(raw_trace)) throw IntegrationDiverged(step + 1, t + dt);
        out.max_trace_drift = std::max(out.max_trace_drift, std::abs(raw_trace - 1.0));
        double herm = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i <= j; ++i)
                herm = std::max(herm, std::abs(rho(i, j) - std::conj(rho(j, i))));
        out.max_hermiticity_residual = std::max(out.max_hermiticity_residual, herm);

        rho = 0.5 * (rho + rho.adjoint()).eval();
        rho /= rho.trace().real();

        const double leak = rho(n - 1, n - 1).real() + rho(n - 2, n - 2).real();
        if (leak > opts.leakage_threshold)
            throw TruncationInsufficient((step + 1) * dt, leak);

        if ((step + 1) % sample_every == 0 || step + 1 == n_steps) sample((step + 1) * dt);
    }
    return out;
}

LindbladSet lindblad_decompose(const CoefficientSchedule& cs, double t,
                               const OscillatorParams& osc) {
    const Coefficients c = cs.eval(t);
    const double margin = lindblad_margin(c, osc.hbar);
    if (margin < 0.0) throw NotLindbladReducible(margin);

    const double h2 = osc.hbar * osc.hbar;
    Eigen::Matrix2cd gram;
    const std::complex<double> s(-c.dz / h2, -c.lambda / (2.0 * osc.hbar));
    gram << c.dp / h2, s, std::conj(s), c.dx / h2;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(gram);
    LindbladSet set;
    const double scale = std::max(es.eigenvalues().maxCoeff(), 0.0);
    for (int k = 1; k >= 0; --k) { // descending eigenvalues
        const double ev = es.eigenvalues()(k);
        if (ev <= scale * 1e-14 || ev <= 0.0) continue;
        const double w = std::sqrt(ev);
        set.pairs.push_back({w * es.eigenvectors()(0, k), w * es.eigenvectors()(1, k)});
    }
    return set;
}

Mat lindblad_dissipator_apply(const Mat& rho, const LindbladSet& set, const OperatorSet& ops) {
    Mat out = Mat::Zero(ops.n_max, ops.n_max);
    for (const auto& pair : set.pairs) {
        const Mat phi = pair.alpha * ops.x + pair.beta * ops.p;
        const Mat phid = phi.adjoint();
        out += 2.0 * phi * rho * phid - phid * phi * rho - rho * phid * phi;
    }
    return out;
}

double trace_distance(const Mat& a, const Mat& b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * ((a - b) + (a - b).adjoint()),
                                          Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

// U = exp(-i H) for Hermitian H.
Mat unitary_from_hermitian(const Mat& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    Vec phases(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i)
        phases(i) = std::polar(1.0, -es.eigenvalues()(i));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

DensityMatrix gaussian_density_matrix(const OperatorSet& ops, const Eigen::Vector2d& mean,
                                      const Eigen::Matrix2d& cov) {
    const OscillatorParams& osc = ops.osc;
    const double hbar = osc.hbar;
    const double det = cov.determinant();
    if (det < hbar * hbar / 4.0 * (1.0 - 1e-9))
        throw std::invalid_argument("covariance violates the uncertainty relation");

    // Dimensionless quadratures X = x / (sqrt(2) sx), Pt = p / (sqrt(2) sp);
    // vacuum covariance is I/2 in these variables.
    const double sx = osc.x_scale(), sp = osc.p_scale();
    Eigen::Matrix2d v;
    v << cov(0, 0) / (2.0 * sx * sx), cov(0, 1) / (2.0 * sx * sp),
        cov(0, 1) / (2.0 * sx * sp), cov(1, 1) / (2.0 * sp * sp);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(v);
    double k1 = es.eigenvalues()(0), k2 = es.eigenvalues()(1); // ascending
    Eigen::Matrix2d evec = es.eigenvectors();
    if (evec.determinant() < 0.0) evec.col(1) *= -1.0;
    const double nu = std::sqrt(std::max(k1 * k2, 0.25));
    const double nbar = std::max(nu - 0.5, 0.0);
    const double r = 0.25 * std::log(k2 / k1); // squeeze of the minor axis
    // rotation angle of the minor (squeezed) axis
    const double theta = std::atan2(evec(1, 0), evec(0, 0));

    DensityMatrix state = DensityMatrix::thermal(ops.n_max, nbar);

    // squeeze: S = exp((r/2)(a^2 - a†^2)) = exp(-i Hs), Hs Hermitian
    const Mat hs = (0.5 * r) * 1.0i * (ops.a * ops.a - ops.adag * ops.adag);
    const Mat sq = unitary_from_hermitian(hs);
    state.rho = sq * state.rho * sq.adjoint();

    // rotate the squeezed axis into place: covariance transforms with R(-theta)
    Mat rot(ops.n_max, ops.n_max);
    rot.setZero();
    for (int n = 0; n < ops.n_max; ++n) rot(n, n) = std::polar(1.0, theta * n);
    state.rho = rot * state.rho * rot.adjoint();

    // displace to the requested mean: D = exp[(i/hbar)(<p> x - <x> p)]
    const Mat hd = (mean[0] * ops.p - mean[1] * ops.x) / hbar;
    const Mat disp = unitary_from_hermitian(hd);
    state.rho = disp * state.rho * disp.adjoint();

    state.rho = 0.5 * (state.rho + state.rho.adjoint()).eval();
    state.rho /= state.rho.trace().real();
    return state;
}

} // namespace qbm
