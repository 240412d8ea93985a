#include "qbm/fokker_planck.hpp"

#include <cmath>
#include <limits>

namespace qbm {

GridMoments grid_moments(const WignerGrid& w) {
    GridMoments m;
    const double area = w.cell_area();
    double mass = 0, sx = 0, sp = 0;
    for (int i = 0; i < w.nx; ++i) {
        const double x = w.x_at(i);
        const auto col = w.values.col(i);
        const double csum = col.sum();
        mass += csum;
        sx += x * csum;
        for (int j = 0; j < w.np; ++j) sp += w.p_at(j) * col(j);
    }
    mass *= area;
    m.mass = mass;
    if (mass == 0.0) return m;
    m.mean_x = sx * area / mass;
    m.mean_p = sp * area / mass;
    double sxx = 0, sxp = 0, spp = 0;
    for (int i = 0; i < w.nx; ++i) {
        const double dx = w.x_at(i) - m.mean_x;
        for (int j = 0; j < w.np; ++j) {
            const double dp = w.p_at(j) - m.mean_p;
            const double v = w.values(j, i);
            sxx += dx * dx * v;
            sxp += dx * dp * v;
            spp += dp * dp * v;
        }
    }
    m.sxx = sxx * area / mass;
    m.sxp = sxp * area / mass;
    m.spp = spp * area / mass;
    return m;
}

void fill_gaussian(WignerGrid& w, const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
    const double det = cov.determinant();
    if (!(det > 0.0)) throw DegenerateCovariance("covariance matrix is singular");
    const double norm = 1.0 / (6.283185307179586476925286766559 * std::sqrt(det));
    for (int i = 0; i < w.nx; ++i) {
        const double dx = w.x_at(i) - mean[0];
        for (int j = 0; j < w.np; ++j) {
            const double dp = w.p_at(j) - mean[1];
            const double q =
                (cov(1, 1) * dx * dx - 2.0 * cov(0, 1) * dx * dp + cov(0, 0) * dp * dp) / det;
            w.values(j, i) = norm * std::exp(-0.5 * q);
        }
    }
}

void fill_fock_wigner(WignerGrid& w, const OscillatorParams& osc, int n) {
    const double pref = ((n % 2 == 0) ? 1.0 : -1.0) /
                        (3.14159265358979323846 * osc.hbar);
    for (int i = 0; i < w.nx; ++i) {
        const double x = w.x_at(i);
        for (int j = 0; j < w.np; ++j) {
            const double p = w.p_at(j);
            const double eps = osc.mass * osc.omega0 * x * x / (2.0 * osc.hbar) +
                               p * p / (2.0 * osc.mass * osc.hbar * osc.omega0);
            // Laguerre L_n(4 eps) by the three-term recurrence
            const double z = 4.0 * eps;
            double lk = 1.0, lkm = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double lkp = ((2.0 * k - 1.0 - z) * lk - (k - 1.0) * lkm) / k;
                lkm = lk;
                lk = lkp;
            }
            w.values(j, i) = pref * lk * std::exp(-2.0 * eps);
        }
    }
}

namespace {

struct FPCoeffs {
    double vx_const; // (mu - lambda), multiplies x in vx = p/m + (mu-lambda) x
    double vp_x;     // -m w0^2
    double vp_p;     // -(mu + lambda)
    double dx_, dp_, dz_;
    double inv_m;
};

FPCoeffs fp_coeffs(const OscillatorParams& osc, const CoefficientSchedule& cs, double t) {
    const Coefficients c = cs.eval(t);
    return FPCoeffs{c.mu - c.lambda,
                    -osc.mass * osc.omega0 * osc.omega0,
                    -(c.mu + c.lambda),
                    c.dx,
                    c.dp,
                    c.dz,
                    1.0 / osc.mass};
}

// Conservative RHS: rhs = -div(flux). Columns hold p-scans (see grid.hpp).
void fp_rhs(const WignerGrid& w, const FPCoeffs& c, const Eigen::VectorXd& p_over_m,
            Eigen::MatrixXd& rhs, Eigen::VectorXd& scratch_prev,
            Eigen::VectorXd& scratch_next, Eigen::VectorXd& dpd_prev,
            Eigen::VectorXd& dpd_next) {
    const int nx = w.nx, np = w.np;
    const double inv_dx = 1.0 / w.dx, inv_dp = 1.0 / w.dp;
    rhs.setZero();

    // central d/dp of one column, one-sided at the p boundary
    auto dp_column = [&](int i, Eigen::VectorXd& out) {
        const auto col = w.values.col(i);
        out(0) = (col(1) - col(0)) * inv_dp;
        out.segment(1, np - 2) =
            (col.segment(2, np - 2) - col.segment(0, np - 2)) * (0.5 * inv_dp);
        out(np - 1) = (col(np - 1) - col(np - 2)) * inv_dp;
    };

    // ---- x-direction faces (between columns i and i+1) ----
    Eigen::VectorXd& f_prev = scratch_prev; // flux through the left face of col i
    Eigen::VectorXd& f_next = scratch_next;
    f_prev.setZero();
    dp_column(0, dpd_prev);
    for (int i = 0; i < nx; ++i) {
        if (i + 1 < nx) {
            dp_column(i + 1, dpd_next);
            const double x_face = w.x_at(i) + 0.5 * w.dx;
            const double vc = c.vx_const * x_face;
            // vx = p/m + (mu-lambda) x_face, per row
            f_next.array() = (p_over_m.array() + vc) *
                             (0.5 * (w.values.col(i) + w.values.col(i + 1))).array();
            f_next -= c.dx_ * (w.values.col(i + 1) - w.values.col(i)) * inv_dx;
            f_next -= c.dz_ * 0.5 * (dpd_prev + dpd_next);
        } else {
            f_next.setZero();
        }
        rhs.col(i) -= (f_next - f_prev) * inv_dx;
        std::swap(f_prev, f_next);
        std::swap(dpd_prev, dpd_next);
    }

    // ---- p-direction faces (within each column) ----
    Eigen::VectorXd& dxd = scratch_next; // central d/dx at cells of column i
    for (int i = 0; i < nx; ++i) {
        const int il = std::max(i - 1, 0), ir = std::min(i + 1, nx - 1);
        const double denom = (ir - il) * w.dx;
        dxd = (w.values.col(ir) - w.values.col(il)) / denom;

        const double vpx = c.vp_x * w.x_at(i);
        auto col = w.values.col(i);
        double flux_below = 0.0; // face j-1/2, zero at the boundary
        for (int j = 0; j < np; ++j) {
            double flux_above = 0.0;
            if (j + 1 < np) {
                const double p_face = w.p_at(j) + 0.5 * w.dp;
                const double vp = vpx + c.vp_p * p_face;
                flux_above = vp * 0.5 * (col(j) + col(j + 1)) -
                             c.dp_ * (col(j + 1) - col(j)) * inv_dp -
                             c.dz_ * 0.5 * (dxd(j) + dxd(j + 1));
            }
            rhs(j, i) -= (flux_above - flux_below) * inv_dp;
            flux_below = flux_above;
        }
    }
}

} // namespace

double fp_max_stable_dt(const WignerGrid& w, const OscillatorParams& osc,
                        const CoefficientSchedule& cs, double t) {
    const FPCoeffs c = fp_coeffs(osc, cs, t);
    const double xmax = std::max(std::abs(w.x_at(0)), std::abs(w.x_at(w.nx - 1)));
    const double pmax = std::max(std::abs(w.p_at(0)), std::abs(w.p_at(w.np - 1)));
    const double vx_max = pmax * c.inv_m + std::abs(c.vx_const) * xmax;
    const double vp_max = std::abs(c.vp_x) * xmax + std::abs(c.vp_p) * pmax;
    const double adv = vx_max / w.dx + vp_max / w.dp;
    const double diff = 4.0 * c.dx_ / (w.dx * w.dx) + 4.0 * c.dp_ / (w.dp * w.dp) +
                        2.0 * std::abs(c.dz_) / (w.dx * w.dp);
    // RK4 stability: imaginary axis to 2*sqrt(2), real axis to ~2.785.
    double bound = std::numeric_limits<double>::infinity();
    if (adv > 0.0) bound = std::min(bound, 2.82 / adv);
    if (diff > 0.0) bound = std::min(bound, 2.78 / diff);
    return 0.8 * bound;
}

void fp_step(WignerGrid& w, const OscillatorParams& osc, const CoefficientSchedule& cs,
             double t, double dt) {
    const double bound = fp_max_stable_dt(w, osc, cs, t);
    if (dt > bound) throw UnstableStep(dt, bound);

    static thread_local Eigen::MatrixXd k, acc;
    static thread_local Eigen::VectorXd s1, s2, s3, s4, p_over_m;
    const int nx = w.nx, np = w.np;
    k.resize(np, nx);
    acc.resize(np, nx);
    s1.resize(np);
    s2.resize(np);
    s3.resize(np);
    s4.resize(np);
    p_over_m = Eigen::VectorXd::LinSpaced(np, w.p_at(0), w.p_at(np - 1)) / osc.mass;

    WignerGrid stage;
    stage.nx = w.nx;
    stage.np = w.np;
    stage.x0 = w.x0;
    stage.p0 = w.p0;
    stage.dx = w.dx;
    stage.dp = w.dp;

    const FPCoeffs c0 = fp_coeffs(osc, cs, t);
    const FPCoeffs ch = fp_coeffs(osc, cs, t + 0.5 * dt);
    const FPCoeffs c1 = fp_coeffs(osc, cs, t + dt);

    fp_rhs(w, c0, p_over_m, k, s1, s2, s3, s4);
    acc = k;
    stage.values = w.values + (0.5 * dt) * k;
    fp_rhs(stage, ch, p_over_m, k, s1, s2, s3, s4);
    acc += 2.0 * k;
    stage.values = w.values + (0.5 * dt) * k;
    fp_rhs(stage, ch, p_over_m, k, s1, s2, s3, s4);
    acc += 2.0 * k;
    stage.values = w.values + dt * k;
    fp_rhs(stage, c1, p_over_m, k, s1, s2, s3, s4);
    acc += k;
    w.values += (dt / 6.0) * acc;
}

FPSeries fp_evolve(WignerGrid& w, const OscillatorParams& osc, const CoefficientSchedule& cs,
                   double t_final, double sample_dt) {
    FPSeries out;
    const double mass0 = grid_moments(w).mass;
    out.times.push_back(0.0);
    out.moments.push_back(grid_moments(w));

    const long n_out = std::lround(t_final / sample_dt);
    double t = 0.0;
    for (long s = 0; s < n_out; ++s) {
        // stability bound re-evaluated per sampling interval
        const double bound = fp_max_stable_dt(w, osc, cs, t);
        const long m = std::max(1l, std::lround(std::ceil(sample_dt / bound)));
        const double dt = sample_dt / m;
        for (long q = 0; q < m; ++q) {
            fp_step(w, osc, cs, t, dt);
            t += dt;
        }
        t = (s + 1) * sample_dt; // avoid accumulation drift
        const GridMoments gm = grid_moments(w);
        out.times.push_back(t);
        out.moments.push_back(gm);
        out.max_mass_drift = std::max(out.max_mass_drift, std::abs(gm.mass - mass0));
        if (!std::isfinite(gm.mass)) throw IntegrationDiverged(s + 1, t);
    }
    return out;
}

} // namespace qbm
