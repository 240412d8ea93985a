#include "qbm/model.hpp"

#include <cmath>

namespace qbm {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

} // namespace

OscillatorParams::OscillatorParams(double m, double w0, double hb)
    : mass(m), omega0(w0), hbar(hb) {
    require(std::isfinite(m) && m > 0.0, "mass must be positive and finite");
    require(std::isfinite(w0) && w0 > 0.0, "omega0 must be positive and finite");
    require(std::isfinite(hb) && hb > 0.0, "hbar must be positive and finite");
}

double OscillatorParams::x_scale() const { return std::sqrt(hbar / (2.0 * mass * omega0)); }
double OscillatorParams::p_scale() const { return std::sqrt(mass * hbar * omega0 / 2.0); }

ThermalSpec::ThermalSpec(double T, double kB) : temperature(T), boltzmann(kB) {
    require(std::isfinite(T) && T >= 0.0, "temperature must be nonnegative and finite");
    require(std::isfinite(kB) && kB > 0.0, "boltzmann constant must be positive and finite");
}

double thermal_occupation(const OscillatorParams& osc, const ThermalSpec& th) {
    if (th.temperature == 0.0) return 0.0;
    const double beta = osc.hbar * osc.omega0 / (th.boltzmann * th.temperature);
    const double denom = std::expm1(beta);
    if (std::isinf(denom)) return 0.0; // e^beta overflowed: deep quantum regime
    return 1.0 / denom;
}

CoefficientSchedule CoefficientSchedule::constants(double lambda, double mu, double dx,
                                                   double dp, double dz) {
    CoefficientSchedule cs;
    cs.lambda = Schedule::constant(lambda);
    cs.mu = Schedule::constant(mu);
    cs.dx = Schedule::constant(dx);
    cs.dp = Schedule::constant(dp);
    cs.dz = Schedule::constant(dz);
    return cs;
}

Coefficients CoefficientSchedule::eval(double t) const {
    Coefficients c{lambda(t), mu(t), dx(t), dp(t), dz(t)};
    if (!(std::isfinite(c.lambda) && std::isfinite(c.mu) && std::isfinite(c.dx) &&
          std::isfinite(c.dp) && std::isfinite(c.dz)))
        throw SimulationError("coefficient schedule is not finite at t = " + std::to_string(t));
    if (c.dx < 0.0 || c.dp < 0.0)
        throw SimulationError("diffusion coefficients must be nonnegative at t = " +
                              std::to_string(t));
    return c;
}

bool CoefficientSchedule::translationally_invariant(double t0, double t1, int samples) const {
    for (int i = 0; i < samples; ++i) {
        const double t = t0 + (t1 - t0) * i / (samples - 1.0);
        const Coefficients c = eval(t);
        const double scale = std::max({std::abs(c.lambda), std::abs(c.mu), 1e-300});
        if (std::abs(c.lambda - c.mu) > 1e-12 * scale) return false;
    }
    return true;
}

double lindblad_margin(const Coefficients& c, double hbar) {
    const double hl = hbar * c.lambda / 2.0;
    return c.dp * c.dx - c.dz * c.dz - hl * hl;
}

double lindblad_margin(const CoefficientSchedule& cs, double t, const OscillatorParams& osc) {
    return lindblad_margin(cs.eval(t), osc.hbar);
}

Preset preset_from_name(const std::string& name) {
    if (name == "optical_sme") return Preset::optical_sme;
    if (name == "agarwal") return Preset::agarwal;
    if (name == "caldeira_leggett") return Preset::caldeira_leggett;
    if (name == "dekker_custom") return Preset::dekker_custom;
    throw SimulationError("unknown preset name '" + name + "'");
}

std::string preset_name(Preset p) {
    switch (p) {
        case Preset::optical_sme: return "optical_sme";
        case Preset::agarwal: return "agarwal";
        case Preset::caldeira_leggett: return "caldeira_leggett";
        case Preset::dekker_custom: return "dekker_custom";
    }
    return "?";
}

CoefficientSchedule preset(Preset which, const OscillatorParams& osc, const ThermalSpec& th,
                           double lambda) {
    if (!(std::isfinite(lambda) && lambda >= 0.0))
        throw std::invalid_argument("preset damping rate must be nonnegative");
    const double nbar = thermal_occupation(osc, th);
    switch (which) {
        case Preset::optical_sme: {
            const double dp = lambda * osc.mass * osc.hbar * osc.omega0 * (nbar + 0.5);
            const double dx = dp / ((osc.mass * osc.omega0) * (osc.mass * osc.omega0));
            return CoefficientSchedule::constants(lambda, 0.0, dx, dp, 0.0);
        }
        case Preset::agarwal: {
            const double dp = 2.0 * osc.mass * lambda * osc.hbar * osc.omega0 * nbar;
            return CoefficientSchedule::constants(lambda, lambda, 0.0, dp, 0.0);
        }
        case Preset::caldeira_leggett: {
            const double dp = 2.0 * osc.mass * lambda * th.boltzmann * th.temperature;
            return CoefficientSchedule::constants(lambda, lambda, 0.0, dp, 0.0);
        }
        case Preset::dekker_custom:
            throw SimulationError("dekker_custom requires explicit diffusion schedules; "
                                  "use preset_dekker");
    }
    throw SimulationError("unknown preset");
}

CoefficientSchedule preset_dekker(const OscillatorParams&, double lambda, Schedule dx,
                                  Schedule dp, Schedule dz) {
    if (!(std::isfinite(lambda) && lambda >= 0.0))
        throw std::invalid_argument("preset damping rate must be nonnegative");
    CoefficientSchedule cs;
    cs.lambda = Schedule::constant(lambda);
    cs.mu = Schedule::constant(lambda);
    cs.dx = std::move(dx);
    cs.dp = std::move(dp);
    cs.dz = std::move(dz);
    return cs;
}

NoiseCorrelations NoiseCorrelations::constants(double a, double b, double c, double lambda) {
    NoiseCorrelations nc;
    nc.a = Schedule::constant(a);
    nc.b = Schedule::constant(b);
    nc.c = Schedule::constant(c);
    nc.gamma = Schedule::linear(0.0, 2.0 * lambda);
    nc.gamma_dot = Schedule::constant(2.0 * lambda);
    return nc;
}

NoiseCorrelations::Sample NoiseCorrelations::eval(double t) const {
    Sample s{a(t), b(t), c(t), gamma(t), gamma_dot(t)};
    if (!(std::isfinite(s.a) && std::isfinite(s.b) && std::isfinite(s.c) &&
          std::isfinite(s.gamma) && std::isfinite(s.gamma_dot)))
        throw SimulationError("noise correlations are not finite at t = " + std::to_string(t));
    if (s.a < 0.0 || s.b < 0.0)
        throw SimulationError("noise strengths a, b must be nonnegative at t = " +
                              std::to_string(t));
    return s;
}

Diffusion map_noise_to_diffusion(const NoiseCorrelations& nc, double t) {
    const auto s = nc.eval(t);
    return Diffusion{s.b, s.a, -s.c};
}

NoiseCorrelations noise_from_diffusion(const CoefficientSchedule& cs, double t0, double t1) {
    NoiseCorrelations nc;
    nc.a = cs.dp;
    nc.b = cs.dx;
    if (cs.dz.is_constant()) {
        nc.c = Schedule::constant(-cs.dz.constant_value());
    } else {
        auto pts = cs.dz.table_points();
        for (auto& p : pts) p.second = -p.second;
        nc.c = Schedule::table(std::move(pts));
    }
    // Gamma_t = integral of 2*lambda from t0, tabulated on a fine grid when
    // lambda varies; exact line for constant lambda.
    if (cs.lambda.is_constant()) {
        const double l = cs.lambda.constant_value();
        nc.gamma = Schedule::linear(-2.0 * l * t0, 2.0 * l);
        nc.gamma_dot = Schedule::constant(2.0 * l);
    } else {
        const int n = 2048;
        const double h = (t1 - t0) / n;
        std::vector<std::pair<double, double>> gamma_pts, gdot_pts;
        double acc = 0.0;
        gamma_pts.push_back({t0, 0.0});
        gdot_pts.push_back({t0, 2.0 * cs.lambda(t0)});
        for (int i = 1; i <= n; ++i) {
            const double ta = t0 + (i - 1) * h, tb = t0 + i * h;
            acc += h * (cs.lambda(ta) + cs.lambda(tb)); // trapezoid of 2*lambda
            gamma_pts.push_back({tb, acc});
            gdot_pts.push_back({tb, 2.0 * cs.lambda(tb)});
        }
        nc.gamma = Schedule::table(std::move(gamma_pts));
        nc.gamma_dot = Schedule::table(std::move(gdot_pts));
    }
    return nc;
}

LindbladSet::Residual LindbladSet::verify(const Coefficients& c, double hbar) const {
    double sb = 0.0, sa = 0.0;
    std::complex<double> sc{0.0, 0.0};
    for (const auto& p : pairs) {
        sa += std::norm(p.alpha);
        sb += std::norm(p.beta);
        sc += std::conj(p.alpha) * p.beta;
    }
    const double h2 = hbar * hbar;
    const std::complex<double> target{-c.dz / h2, c.lambda / (2.0 * hbar)};
    return Residual{
        std::abs(sb - c.dx / h2),
        std::abs(sa - c.dp / h2),
        std::abs(sc - target),
    };
}

} // namespace qbm
