#include "qbm/stochastic.hpp"

#include <cmath>

namespace qbm {

using namespace std::complex_literals;

ForceIncrements sample_increments(const NoiseCorrelations& nc, double t, double dt,
                                  RngStream& rng, const OscillatorParams& osc) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const auto s = nc.eval(t);
    const double m = osc.mass;
    const double v11 = 2.0 * s.a * dt;
    const double v12 = 2.0 * m * s.c * dt;
    const double v22 = 2.0 * m * m * s.b * dt;

    const double scale = std::max({s.a * s.b, s.c * s.c, 1e-300});
    if (s.a * s.b - s.c * s.c < -1e-12 * scale)
        throw UnsamplableNoise("noise covariance not positive semidefinite (a b < c^2 at t = " +
                               std::to_string(t) + ")");

    // 2x2 Cholesky with graceful degenerate handling
    const double z1 = rng.next_normal();
    const double z2 = rng.next_normal();
    ForceIncrements inc;
    inc.dt = dt;
    if (v11 > 0.0) {
        const double l11 = std::sqrt(v11);
        const double l21 = v12 / l11;
        const double rem = std::max(v22 - l21 * l21, 0.0);
        inc.df = l11 * z1;
        inc.dg = l21 * z1 + std::sqrt(rem) * z2;
    } else {
        inc.df = 0.0;
        inc.dg = std::sqrt(std::max(v22, 0.0)) * z2;
    }
    return inc;
}

std::array<double, 2> classical_step(double x, double p, const OscillatorParams& osc,
                                     const NoiseCorrelations& nc, double t, double dt,
                                     const ForceIncrements& inc) {
    const auto s = nc.eval(t);
    const double m = osc.mass;
    const double p_new = p + dt * (-m * osc.omega0 * osc.omega0 * x - s.gamma_dot * p) + inc.df;
    const double x_new = x + dt * p_new / m - inc.dg / m;
    return {x_new, p_new};
}

TimeFn equivalent_force_reduction(TimeFn f, TimeFn g, TimeFn gamma_dot, double h) {
    return [f = std::move(f), g = std::move(g), gd = std::move(gamma_dot), h](double t) {
        const double gdot = (g(t + h) - g(t - h)) / (2.0 * h);
        return f(t) - gd(t) * g(t) - gdot;
    };
}

namespace {

struct State2 {
    double x, p;
};

} // namespace

ClassicalPath integrate_classical(const OscillatorParams& osc, const TimeFn& f,
                                  const TimeFn& g, const TimeFn& gamma_dot, double x0,
                                  double p0, double t_final, double dt) {
    auto rhs = [&](double t, const State2& s) {
        return State2{s.p / osc.mass - g(t) / osc.mass,
                      -osc.mass * osc.omega0 * osc.omega0 * s.x + f(t) - gamma_dot(t) * s.p};
    };
    ClassicalPath out;
    State2 s{x0, p0};
    const long n = std::lround(t_final / dt);
    out.times.reserve(n + 1);
    auto push = [&](double t) {
        out.times.push_back(t);
        out.x.push_back(s.x);
        out.p.push_back(s.p);
    };
    push(0.0);
    for (long k = 0; k < n; ++k) {
        const double t = k * dt;
        const State2 k1 = rhs(t, s);
        const State2 k2 = rhs(t + 0.5 * dt, {s.x + 0.5 * dt * k1.x, s.p + 0.5 * dt * k1.p});
        const State2 k3 = rhs(t + 0.5 * dt, {s.x + 0.5 * dt * k2.x, s.p + 0.5 * dt * k2.p});
        const State2 k4 = rhs(t + dt, {s.x + dt * k3.x, s.p + dt * k3.p});
        s.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        s.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        push(t + dt);
    }
    return out;
}

ClassicalPath integrate_classical_g_only(const OscillatorParams& osc, const TimeFn& f_eff,
                                         const TimeFn& gamma, const TimeFn& gamma_dot,
                                         double K, double x0, double p0, double t_final,
                                         double dt) {
    struct State3 {
        double x, p, integral; // integral = \int e^Gamma Feff dtau
    };
    auto g_of = [&](double t, double integral) {
        return std::exp(-gamma(t)) * (K - integral);
    };
    auto rhs = [&](double t, const State3& s) {
        const double g = g_of(t, s.integral);
        return State3{s.p / osc.mass - g / osc.mass,
                      -osc.mass * osc.omega0 * osc.omega0 * s.x - gamma_dot(t) * s.p,
                      std::exp(gamma(t)) * f_eff(t)};
    };
    ClassicalPath out;
    State3 s{x0, p0, 0.0};
    const long n = std::lround(t_final / dt);
    auto push = [&](double t) {
        out.times.push_back(t);
        out.x.push_back(s.x);
        out.p.push_back(s.p);
    };
    push(0.0);
    for (long k = 0; k < n; ++k) {
        const double t = k * dt;
        auto axpy = [&](const State3& a, double h, const State3& d) {
            return State3{a.x + h * d.x, a.p + h * d.p, a.integral + h * d.integral};
        };
        const State3 k1 = rhs(t, s);
        const State3 k2 = rhs(t + 0.5 * dt, axpy(s, 0.5 * dt, k1));
        const State3 k3 = rhs(t + 0.5 * dt, axpy(s, 0.5 * dt, k2));
        const State3 k4 = rhs(t + dt, axpy(s, dt, k3));
        s.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        s.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        s.integral += dt / 6.0 * (k1.integral + 2.0 * k2.integral + 2.0 * k3.integral +
                                  k4.integral);
        push(t + dt);
    }
    return out;
}

namespace {

// Unbiased mean/covariance plus jackknife SEs from per-trajectory samples.
MomentStats stats_from_snapshot(const std::vector<std::array<double, 2>>& snap) {
    const int n = static_cast<int>(snap.size());
    double sx = 0, sp = 0, sxx = 0, sxp = 0, spp = 0;
    for (const auto& v : snap) {
        sx += v[0];
        sp += v[1];
        sxx += v[0] * v[0];
        sxp += v[0] * v[1];
        spp += v[1] * v[1];
    }
    const double mx = sx / n, mp = sp / n;
    MomentStats st;
    st.mean_x = mx;
    st.mean_p = mp;
    st.sxx = (sxx - n * mx * mx) / (n - 1);
    st.sxp = (sxp - n * mx * mp) / (n - 1);
    st.spp = (spp - n * mp * mp) / (n - 1);

    // mean jackknife == s/sqrt(n)
    st.se_mean_x = std::sqrt(std::max(st.sxx, 0.0) / n);
    st.se_mean_p = std::sqrt(std::max(st.spp, 0.0) / n);

    // leave-one-out covariances
    auto jack = [&](auto leave_out) {
        double acc = 0, acc2 = 0;
        for (const auto& v : snap) {
            const double th = leave_out(v);
            acc += th;
            acc2 += th * th;
        }
        const double m = acc / n;
        return std::sqrt(std::max((n - 1.0) / n * (acc2 - n * m * m), 0.0));
    };
    const double nn = n;
    st.se_sxx = jack([&](const std::array<double, 2>& v) {
        const double mxi = (sx - v[0]) / (nn - 1);
        return (sxx - v[0] * v[0] - (nn - 1) * mxi * mxi) / (nn - 2);
    });
    st.se_spp = jack([&](const std::array<double, 2>& v) {
        const double mpi = (sp - v[1]) / (nn - 1);
        return (spp - v[1] * v[1] - (nn - 1) * mpi * mpi) / (nn - 2);
    });
    st.se_sxp = jack([&](const std::array<double, 2>& v) {
        const double mxi = (sx - v[0]) / (nn - 1);
        const double mpi = (sp - v[1]) / (nn - 1);
        return (sxp - v[0] * v[1] - (nn - 1) * mxi * mpi) / (nn - 2);
    });
    return st;
}

} // namespace

EnsembleSeries ensemble_covariances(const GaussianState& init, const OscillatorParams& osc,
                                    const NoiseCorrelations& nc, const EnsembleSpec& spec) {
    if (spec.n_traj < 100) throw std::invalid_argument("ensemble needs n_traj >= 100");
    if (!(spec.dt > 0.0)) throw std::invalid_argument("dt must be positive");

    const long n_steps = std::lround(spec.t_final / spec.dt);
    const int sample_every = std::max(1, spec.sample_every);
    std::vector<long> out_steps;
    out_steps.push_back(0);
    for (long k = 1; k <= n_steps; ++k)
        if (k % sample_every == 0 || k == n_steps) out_steps.push_back(k);

    // initial-condition Cholesky (may be zero)
    const Eigen::Matrix2d m0 = init.cov;
    Eigen::Matrix2d l0 = Eigen::Matrix2d::Zero();
    if (m0(0, 0) > 0.0) {
        l0(0, 0) = std::sqrt(m0(0, 0));
        l0(1, 0) = m0(0, 1) / l0(0, 0);
        l0(1, 1) = std::sqrt(std::max(m0(1, 1) - l0(1, 0) * l0(1, 0), 0.0));
    } else {
        l0(1, 1) = std::sqrt(std::max(m0(1, 1), 0.0));
    }

    std::vector<std::vector<std::array<double, 2>>> snaps(
        out_steps.size(), std::vector<std::array<double, 2>>(spec.n_traj));

    for (int traj = 0; traj < spec.n_traj; ++traj) {
        RngStream rng = RngStream::substream(spec.seed, traj);
        const double z1 = rng.next_normal(), z2 = rng.next_normal();
        double x = init.mean[0] + l0(0, 0) * z1;
        double p = init.mean[1] + l0(1, 0) * z1 + l0(1, 1) * z2;

        std::size_t next_out = 0;
        long k = 0;
        snaps[next_out++][traj] = {x, p};
        for (; k < n_steps; ++k) {
            const double t = k * spec.dt;
            const ForceIncrements inc = sample_increments(nc, t, spec.dt, rng, osc);
            const auto xp = classical_step(x, p, osc, nc, t, spec.dt, inc);
            x = xp[0];
            p = xp[1];
            if (next_out < out_steps.size() && k + 1 == out_steps[next_out])
                snaps[next_out++][traj] = {x, p};
        }
    }

    EnsembleSeries out;
    for (std::size_t i = 0; i < out_steps.size(); ++i) {
        out.times.push_back(out_steps[i] * spec.dt);
        out.stats.push_back(stats_from_snapshot(snaps[i]));
    }
    if (spec.keep_paths) {
        out.paths.assign(spec.n_traj, std::vector<std::array<double, 2>>(out_steps.size()));
        for (std::size_t i = 0; i < out_steps.size(); ++i)
            for (int traj = 0; traj < spec.n_traj; ++traj) out.paths[traj][i] = snaps[i][traj];
    }
    return out;
}

QuantumPropagator::QuantumPropagator(const OperatorSet& ops, const NoiseCorrelations& nc,
                                     double t0, double dt, long n_steps)
    : ops_(&ops), t0_(t0), dt_(dt), n_steps_(n_steps) {
    const int n = ops.n_max;
    const double hbar = ops.osc.hbar;

    // quadrature operator a + a† (real symmetric tridiagonal)
    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) quad(k - 1, k) = quad(k, k - 1) = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qes(quad);
    quad_q_ = qes.eigenvectors();
    quad_w_ = qes.eigenvalues();

    gamma_mid_.resize(n_steps);
    bool gamma_zero = true;
    for (long k = 0; k < n_steps; ++k) {
        gamma_mid_[k] = nc.eval(t0 + (k + 0.5) * dt).gamma;
        if (std::abs(gamma_mid_[k]) > 1e-15 ||
            std::abs(nc.eval(t0 + k * dt).gamma) > 1e-15)
            gamma_zero = false;
    }
    diagonal_ = gamma_zero;

    if (diagonal_) {
        diag_half_.resize(n);
        for (int j = 0; j < n; ++j)
            diag_half_(j) = std::polar(1.0, -ops.osc.omega0 * (j + 0.5) * 0.5 * dt);
    } else {
        // H_ef evaluated at the midpoint of each half interval keeps the
        // splitting second order for time-dependent Gamma.
        u_first_.resize(n_steps);
        u_second_.resize(n_steps);
        auto half_unitary = [&](double t_eval) {
            const double g = nc.eval(t_eval).gamma;
            const Eigen::MatrixXcd h =
                std::exp(-g) / (2.0 * ops.osc.mass) * ops.p2 +
                0.5 * ops.osc.mass * ops.osc.omega0 * ops.osc.omega0 * std::exp(g) * ops.x2;
            Eigen::SelfAdjointEigenSolver<Mat> es(h);
            Vec phases(n);
            for (int j = 0; j < n; ++j)
                phases(j) = std::polar(1.0, -es.eigenvalues()(j) * 0.5 * dt / hbar);
            return Mat(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
        };
        for (long k = 0; k < n_steps; ++k) {
            u_first_[k] = half_unitary(t0 + (k + 0.25) * dt);
            u_second_[k] = half_unitary(t0 + (k + 0.75) * dt);
        }
    }
}

void QuantumPropagator::apply_displacement(Vec& psi, double c_f, double c_g) const {
    const OperatorSet& ops = *ops_;
    const double hbar = ops.osc.hbar;
    // c_f x + c_g P = w a + conj(w) a† with conj(w) = c_f sx + i c_g sp;
    // conjugating by e^{i phi n} reduces it to |w| (a + a†).
    const std::complex<double> wbar(c_f * ops.osc.x_scale(), c_g * ops.osc.p_scale());
    const double r = std::abs(wbar);
    if (r == 0.0) return;
    const double phi = std::arg(wbar);
    const int n = ops.n_max;

    for (int j = 1; j < n; ++j) psi(j) *= std::polar(1.0, -phi * j);
    Vec tmp = quad_q_.transpose().cast<std::complex<double>>() * psi;
    for (int j = 0; j < n; ++j) tmp(j) *= std::polar(1.0, r * quad_w_(j) / hbar);
    psi.noalias() = quad_q_.cast<std::complex<double>>() * tmp;
    for (int j = 1; j < n; ++j) psi(j) *= std::polar(1.0, phi * j);
}

Mat QuantumPropagator::displacement_matrix(double c_f, double c_g) const {
    const int n = ops_->n_max;
    Mat d = Mat::Identity(n, n);
    for (int j = 0; j < n; ++j) {
        Vec col = d.col(j);
        apply_displacement(col, c_f, c_g);
        d.col(j) = col;
    }
    return d;
}

void QuantumPropagator::step(Vec& psi, long k, const ForceIncrements& inc) const {
    const double eg = std::exp(gamma_mid_[k]);
    if (diagonal_) {
        psi.array() *= diag_half_.array();
        apply_displacement(psi, eg * inc.df, inc.dg / ops_->osc.mass);
        psi.array() *= diag_half_.array();
    } else {
        psi = u_first_[k] * psi;
        apply_displacement(psi, eg * inc.df, inc.dg / ops_->osc.mass);
        psi = u_second_[k] * psi;
    }
}

void QuantumPropagator::step(Mat& rho, long k, const ForceIncrements& inc) const {
    const double eg = std::exp(gamma_mid_[k]);
    const Mat d = displacement_matrix(eg * inc.df, inc.dg / ops_->osc.mass);
    if (diagonal_) {
        rho = diag_half_.asDiagonal() * rho * diag_half_.conjugate().asDiagonal();
        rho = d * rho * d.adjoint();
        rho = diag_half_.asDiagonal() * rho * diag_half_.conjugate().asDiagonal();
    } else {
        rho = u_first_[k] * rho * u_first_[k].adjoint();
        rho = d * rho * d.adjoint();
        rho = u_second_[k] * rho * u_second_[k].adjoint();
    }
}

Vec quantum_kick(const Vec& psi, const OperatorSet& ops, const NoiseCorrelations& nc,
                 double t, double dt, const ForceIncrements& inc) {
    Vec out = psi;
    if (dt == 0.0) {
        // bare kick at time t
        QuantumPropagator prop(ops, nc, t, 1.0, 0); // dt unused; just caches Q
        const double eg = std::exp(nc.eval(t).gamma);
        prop.apply_displacement(out, eg * inc.df, inc.dg / ops.osc.mass);
        return out;
    }
    QuantumPropagator prop(ops, nc, t, dt, 1);
    prop.step(out, 0, inc);
    return out;
}

QuantumEnsembleSeries ensemble_average_density(const DensityMatrix& rho0,
                                               const OperatorSet& ops,
                                               const NoiseCorrelations& nc,
                                               const EnsembleSpec& spec,
                                               double leakage_threshold) {
    if (spec.n_traj < 100) throw std::invalid_argument("ensemble needs n_traj >= 100");
    const int n = ops.n_max;
    const long n_steps = std::lround(spec.t_final / spec.dt);
    const int sample_every = std::max(1, spec.sample_every);

    std::vector<long> out_steps;
    out_steps.push_back(0);
    for (long k = 1; k <= n_steps; ++k)
        if (k % sample_every == 0 || k == n_steps) out_steps.push_back(k);

    // pure initial states run cheap state-vector trajectories
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho0.rho + rho0.rho.adjoint()));
    const bool pure = (rho0.rho * rho0.rho).trace().real() > 1.0 - 1e-10;
    Vec psi0;
    if (pure) {
        int imax;
        es.eigenvalues().maxCoeff(&imax);
        psi0 = es.eigenvectors().col(imax);
    }

    QuantumPropagator prop(ops, nc, 0.0, spec.dt, n_steps);

    QuantumEnsembleSeries out;
    std::vector<Mat> acc(out_steps.size(), Mat::Zero(n, n));

    for (int traj = 0; traj < spec.n_traj; ++traj) {
        RngStream rng = RngStream::substream(spec.seed, traj);
        std::size_t next_out = 0;
        if (pure) {
            Vec psi = psi0;
            acc[next_out] += psi * psi.adjoint();
            ++next_out;
            for (long k = 0; k < n_steps; ++k) {
                const ForceIncrements inc =
                    sample_increments(nc, k * spec.dt, spec.dt, rng, ops.osc);
                prop.step(psi, k, inc);
                const double leak = std::norm(psi(n - 1)) + std::norm(psi(n - 2));
                if (leak > leakage_threshold)
                    throw TruncationInsufficient((k + 1) * spec.dt, leak);
                if (next_out < out_steps.size() && k + 1 == out_steps[next_out]) {
                    out.max_norm_error =
                        std::max(out.max_norm_error, std::abs(psi.norm() - 1.0));
                    acc[next_out] += psi * psi.adjoint();
                    ++next_out;
                }
            }
        } else {
            Mat rho = rho0.rho;
            acc[next_out] += rho;
            ++next_out;
            for (long k = 0; k < n_steps; ++k) {
                const ForceIncrements inc =
                    sample_increments(nc, k * spec.dt, spec.dt, rng, ops.osc);
                prop.step(rho, k, inc);
                const double leak = rho(n - 1, n - 1).real() + rho(n - 2, n - 2).real();
                if (leak > leakage_threshold)
                    throw TruncationInsufficient((k + 1) * spec.dt, leak);
                if (next_out < out_steps.size() && k + 1 == out_steps[next_out]) {
                    out.max_norm_error =
                        std::max(out.max_norm_error, std::abs(rho.trace().real() - 1.0));
                    acc[next_out] += rho;
                    ++next_out;
                }
            }
        }
    }

    for (std::size_t i = 0; i < out_steps.size(); ++i) {
        const double t = out_steps[i] * spec.dt;
        out.times.push_back(t);
        out.gammas.push_back(nc.eval(t).gamma);
        Mat avg = acc[i] / double(spec.n_traj);
        out.rho_avg.push_back(0.5 * (avg + avg.adjoint()));
    }
    return out;
}

} // namespace qbm
