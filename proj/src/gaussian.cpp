#include "qbm/gaussian.hpp"

#include <cmath>

namespace qbm {

GaussianState GaussianState::ground(const OscillatorParams& osc) {
    GaussianState s;
    s.cov << osc.hbar / (2.0 * osc.mass * osc.omega0), 0.0, 0.0,
        osc.mass * osc.hbar * osc.omega0 / 2.0;
    return s;
}

GaussianState GaussianState::coherent(const OscillatorParams& osc, std::complex<double> alpha) {
    GaussianState s = ground(osc);
    s.mean << 2.0 * osc.x_scale() * alpha.real(), 2.0 * osc.p_scale() * alpha.imag();
    return s;
}

GaussianState GaussianState::thermal(const OscillatorParams& osc, double nbar) {
    GaussianState s = ground(osc);
    s.cov *= (2.0 * nbar + 1.0);
    return s;
}

GaussianState GaussianState::squeezed(const OscillatorParams& osc, double r, double phase,
                                      std::complex<double> alpha) {
    // <a^2> = -e^{i phase} sinh r cosh r for S = exp((r/2)(e^{-i phase} a^2
    // - e^{i phase} a†^2)); quadrature x is squeezed at phase = 0.
    GaussianState s = coherent(osc, alpha);
    const double sx = osc.x_scale(), sp = osc.p_scale();
    const double c2 = std::cosh(2.0 * r), s2 = std::sinh(2.0 * r);
    s.cov(0, 0) = sx * sx * (c2 - std::cos(phase) * s2);
    s.cov(1, 1) = sp * sp * (c2 + std::cos(phase) * s2);
    s.cov(0, 1) = s.cov(1, 0) = -sx * sp * std::sin(phase) * s2;
    return s;
}

Eigen::Matrix2d drift_matrix(const OscillatorParams& osc, const CoefficientSchedule& cs,
                             double t) {
    const Coefficients c = cs.eval(t);
    Eigen::Matrix2d A;
    A << c.mu - c.lambda, 1.0 / osc.mass, -osc.mass * osc.omega0 * osc.omega0,
        -(c.mu + c.lambda);
    return A;
}

Eigen::Matrix2d diffusion_matrix(const CoefficientSchedule& cs, double t) {
    const Coefficients c = cs.eval(t);
    Eigen::Matrix2d D;
    D << c.dx, c.dz, c.dz, c.dp;
    return D;
}

namespace {

// Moment vector y = (mx, mp, sxx, sxp, spp).
using Moments = Eigen::Matrix<double, 5, 1>;

Moments moment_rhs(const Moments& y, const Eigen::Matrix2d& A, const Eigen::Matrix2d& D) {
    Moments dy;
    dy[0] = A(0, 0) * y[0] + A(0, 1) * y[1];
    dy[1] = A(1, 0) * y[0] + A(1, 1) * y[1];
    dy[2] = 2.0 * (A(0, 0) * y[2] + A(0, 1) * y[3]) + 2.0 * D(0, 0);
    dy[3] = A(1, 0) * y[2] + (A(0, 0) + A(1, 1)) * y[3] + A(0, 1) * y[4] + 2.0 * D(0, 1);
    dy[4] = 2.0 * (A(1, 0) * y[3] + A(1, 1) * y[4]) + 2.0 * D(1, 1);
    return dy;
}

GaussianState to_state(const Moments& y) {
    GaussianState s;
    s.mean << y[0], y[1];
    s.cov << y[2], y[3], y[3], y[4];
    return s;
}

} // namespace

MomentSeries evolve_moments(const GaussianState& state0, const OscillatorParams& osc,
                            const CoefficientSchedule& cs, double t_final, double dt,
                            int sample_every) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be nonnegative");
    if (sample_every < 1) sample_every = 1;

    Moments y;
    y << state0.mean[0], state0.mean[1], state0.cov(0, 0), state0.cov(0, 1), state0.cov(1, 1);

    MomentSeries out;
    const long n_steps = std::lround(t_final / dt);
    out.times.reserve(n_steps / sample_every + 2);

    auto sample = [&](double t) {
        out.times.push_back(t);
        out.states.push_back(to_state(y));
        out.margins.push_back(lindblad_margin(cs, t, osc));
    };
    sample(0.0);

    for (long step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        const Eigen::Matrix2d A0 = drift_matrix(osc, cs, t);
        const Eigen::Matrix2d D0 = diffusion_matrix(cs, t);
        const Eigen::Matrix2d Ah = drift_matrix(osc, cs, t + 0.5 * dt);
        const Eigen::Matrix2d Dh = diffusion_matrix(cs, t + 0.5 * dt);
        const Eigen::Matrix2d A1 = drift_matrix(osc, cs, t + dt);
        const Eigen::Matrix2d D1 = diffusion_matrix(cs, t + dt);

        const Moments k1 = moment_rhs(y, A0, D0);
        const Moments k2 = moment_rhs(y + 0.5 * dt * k1, Ah, Dh);
        const Moments k3 = moment_rhs(y + 0.5 * dt * k2, Ah, Dh);
        const Moments k4 = moment_rhs(y + dt * k3, A1, D1);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (!y.allFinite()) throw IntegrationDiverged(step + 1, t + dt);
        if ((step + 1) % sample_every == 0 || step + 1 == n_steps) sample((step + 1) * dt);
    }
    return out;
}

Eigen::Matrix2d steady_state_covariance(const Eigen::Matrix2d& A, const Eigen::Matrix2d& D) {
    // Hurwitz for a 2x2 real matrix: tr < 0 and det > 0.
    if (!(A.trace() < 0.0 && A.determinant() > 0.0))
        throw NoSteadyState("drift matrix is not Hurwitz; no steady-state covariance");
    Eigen::Matrix3d K;
    K << 2.0 * A(0, 0), 2.0 * A(0, 1), 0.0,
         A(1, 0), A(0, 0) + A(1, 1), A(0, 1),
         0.0, 2.0 * A(1, 0), 2.0 * A(1, 1);
    Eigen::Vector3d rhs(-2.0 * D(0, 0), -2.0 * D(0, 1), -2.0 * D(1, 1));
    const Eigen::Vector3d m = K.fullPivLu().solve(rhs);
    Eigen::Matrix2d M;
    M << m[0], m[1], m[1], m[2];
    return M;
}

GaussianState Propagator::apply(const GaussianState& initial) const {
    GaussianState out;
    out.mean = r * initial.mean;
    out.cov = r * initial.cov * r.transpose() + n;
    out.cov(0, 1) = out.cov(1, 0) = 0.5 * (out.cov(0, 1) + out.cov(1, 0));
    return out;
}

namespace {

// Propagator state: R (4 entries), N (3 entries), Gamma.
using PropState = Eigen::Matrix<double, 8, 1>;

struct FrameMatrices {
    Eigen::Matrix2d A, D;
};

FrameMatrices frame_matrices(const OscillatorParams& osc, const CoefficientSchedule& cs,
                             Frame frame, double t, double gamma) {
    if (frame == Frame::physical) return {drift_matrix(osc, cs, t), diffusion_matrix(cs, t)};
    const Coefficients c = cs.eval(t);
    const double eg = std::exp(gamma), emg = std::exp(-gamma);
    Eigen::Matrix2d A, D;
    A << 0.0, emg / osc.mass, -osc.mass * osc.omega0 * osc.omega0 * eg, 0.0;
    D << c.dx, c.dz * eg, c.dz * eg, c.dp * eg * eg;
    return {A, D};
}

PropState prop_rhs(const PropState& y, const OscillatorParams& osc,
                   const CoefficientSchedule& cs, Frame frame, double t) {
    const auto [A, D] = frame_matrices(osc, cs, frame, t, y[7]);
    Eigen::Matrix2d R;
    R << y[0], y[1], y[2], y[3];
    Eigen::Matrix2d N;
    N << y[4], y[5], y[5], y[6];
    const Eigen::Matrix2d dR = A * R;
    const Eigen::Matrix2d dN = A * N + N * A.transpose() + 2.0 * D;
    PropState dy;
    dy << dR(0, 0), dR(0, 1), dR(1, 0), dR(1, 1), dN(0, 0), 0.5 * (dN(0, 1) + dN(1, 0)),
        dN(1, 1), 2.0 * cs.eval(t).lambda;
    return dy;
}

} // namespace

PropagatorSeries propagator(const OscillatorParams& osc, const CoefficientSchedule& cs,
                            Frame frame, double t_final, double dt, int sample_every) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (sample_every < 1) sample_every = 1;
    if (frame == Frame::canonical && !cs.translationally_invariant(0.0, t_final))
        throw UnsupportedFrame("canonical frame requires translationally invariant damping "
                               "(lambda = mu)");

    PropState y;
    y << 1, 0, 0, 1, 0, 0, 0, 0;

    PropagatorSeries out;
    auto sample = [&](double t) {
        Propagator p;
        p.r << y[0], y[1], y[2], y[3];
        p.n << y[4], y[5], y[5], y[6];
        p.frame = frame;
        p.gamma = y[7];
        out.times.push_back(t);
        out.props.push_back(p);
    };
    sample(0.0);

    const long n_steps = std::lround(t_final / dt);
    for (long step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        const PropState k1 = prop_rhs(y, osc, cs, frame, t);
        const PropState k2 = prop_rhs(y + 0.5 * dt * k1, osc, cs, frame, t + 0.5 * dt);
        const PropState k3 = prop_rhs(y + 0.5 * dt * k2, osc, cs, frame, t + 0.5 * dt);
        const PropState k4 = prop_rhs(y + dt * k3, osc, cs, frame, t + dt);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw IntegrationDiverged(step + 1, t + dt);
        if ((step + 1) % sample_every == 0 || step + 1 == n_steps) sample((step + 1) * dt);
    }
    return out;
}

double gaussian_density(const GaussianState& state, double x, double p) {
    const double det = state.det();
    if (!(det > 0.0)) throw DegenerateCovariance("covariance matrix is singular");
    const double dx = x - state.mean[0], dp = p - state.mean[1];
    const double q = (state.cov(1, 1) * dx * dx - 2.0 * state.cov(0, 1) * dx * dp +
                      state.cov(0, 0) * dp * dp) /
                     det;
    return std::exp(-0.5 * q) / (6.283185307179586476925286766559 * std::sqrt(det));
}

GaussianState canonical_to_physical(const Eigen::Vector2d& mean_P, const Eigen::Matrix2d& cov_N,
                                    double gamma_t) {
    const double emg = std::exp(-gamma_t);
    GaussianState s;
    s.mean << mean_P[0], mean_P[1] * emg;
    s.cov << cov_N(0, 0), cov_N(0, 1) * emg, cov_N(1, 0) * emg, cov_N(1, 1) * emg * emg;
    return s;
}

GaussianState physical_to_canonical(const GaussianState& physical, double gamma_t) {
    const double eg = std::exp(gamma_t);
    GaussianState s;
    s.mean << physical.mean[0], physical.mean[1] * eg;
    s.cov << physical.cov(0, 0), physical.cov(0, 1) * eg, physical.cov(1, 0) * eg,
        physical.cov(1, 1) * eg * eg;
    return s;
}

} // namespace qbm
