// model.hpp — Oscillator parameters, master-equation coefficient families,
// classical-noise correlations and the Lindblad positivity predicate.
//
// Conventions used throughout the library:
//   * Units are caller-supplied and must be mutually consistent; the
//     "oscillator units" m = hbar = omega0 = 1 are used by most tests.
//   * The bilinear master equation is parameterized by (lambda, mu, D_x,
//     D_p, D_z). Friction rates: d<x>/dt gains (mu-lambda)<x>, d<p>/dt
//     gains -(mu+lambda)<p>. The diffusion matrix is [[D_x, D_z],[D_z, D_p]].
//   * The translationally invariant subfamily has lambda = mu and a
//     dissipative function Gamma(t) = integral of 2*lambda.
//   * Classical noise strengths (A, B, C): Var(dF) = 2A dt on the momentum
//     force, Var(dG) = 2 m^2 B dt on the velocity force, Cov = 2 m C dt.
//     These map to diffusion coefficients as D_p = A, D_x = B, D_z = -C.
//     (The A/B pairing is fixed by units and by the second-moment growth
//     rates; the D_z sign is fixed by the x-update receiving -dG/m while
//     the p-update receives +dF, which makes Cov(dx, dp) = -2C dt.)

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "qbm/errors.hpp"
#include "qbm/schedule.hpp"

namespace qbm {

struct OscillatorParams {
    double mass = 1.0;
    double omega0 = 1.0;
    double hbar = 1.0;

    OscillatorParams() = default;
    OscillatorParams(double m, double w0, double hb);

    double period() const { return 6.283185307179586476925286766559 / omega0; }
    // Ground-state widths sqrt(hbar/2m w0), sqrt(m hbar w0 / 2).
    double x_scale() const;
    double p_scale() const;
};

struct ThermalSpec {
    double temperature = 0.0; // in energy/k_B units
    double boltzmann = 1.0;   // k_B

    ThermalSpec() = default;
    ThermalSpec(double T, double kB);
};

// Mean number of quanta (e^beta - 1)^-1 with beta = hbar*omega0/(kB*T).
// Returns 0 at T = 0 (limit); saturates to 0 instead of faulting when
// e^beta overflows.
double thermal_occupation(const OscillatorParams& osc, const ThermalSpec& th);

struct Coefficients {
    double lambda = 0.0;
    double mu = 0.0;
    double dx = 0.0;
    double dp = 0.0;
    double dz = 0.0;
};

class CoefficientSchedule {
public:
    Schedule lambda;
    Schedule mu;
    Schedule dx;
    Schedule dp;
    Schedule dz;

    CoefficientSchedule() = default;
    static CoefficientSchedule constants(double lambda, double mu, double dx, double dp,
                                         double dz);

    // Samples all five coefficients, enforcing dx, dp >= 0 and finiteness.
    Coefficients eval(double t) const;

    bool translationally_invariant(double t0, double t1, int samples = 33) const;
};

// Positivity margin D_p*D_x - D_z^2 - (hbar*lambda/2)^2 at time t.
// Together with D_x, D_p >= 0, margin >= 0 is necessary and sufficient for
// the bilinear dissipator to be expressible in Lindblad form, which in turn
// preserves positivity of the statistical operator. Equivalent form of the
// bound: (hbar * Tr A / 4)^2 with Tr A = -2*lambda.
double lindblad_margin(const Coefficients& c, double hbar);
double lindblad_margin(const CoefficientSchedule& cs, double t, const OscillatorParams& osc);

enum class Preset {
    optical_sme,     // damped-oscillator equation of quantum optics, mu = 0
    agarwal,         // lambda = mu, D_p = 2 m lambda hbar omega0 nbar
    caldeira_leggett,// lambda = mu, D_p = 2 m lambda kB T (high-T limit)
    dekker_custom,   // lambda = mu with caller-supplied diffusion schedules
};

Preset preset_from_name(const std::string& name);
std::string preset_name(Preset p);

// Builds the coefficient schedule of a named family at damping rate lambda.
//
// optical_sme: D_p = lambda*m*hbar*omega0*(nbar + 1/2), D_x = D_p/(m*omega0)^2,
// D_z = 0, mu = 0. This is the unique choice consistent with the Lindblad
// sums for Phi_1 = sqrt(lambda(nbar+1)) a, Phi_2 = sqrt(lambda nbar) a†: it
// gives margin = (hbar*lambda/2)^2 (4(nbar+1/2)^2 - 1) >= 0 (zero exactly at
// nbar = 0) and the thermal steady covariance (2nbar+1) * ground.
//
// agarwal: includes the explicit hbar so that its high-temperature limit
// reproduces caldeira_leggett (nbar -> kB T / hbar omega0).
CoefficientSchedule preset(Preset which, const OscillatorParams& osc, const ThermalSpec& th,
                           double lambda);
CoefficientSchedule preset_dekker(const OscillatorParams& osc, double lambda, Schedule dx,
                                  Schedule dp, Schedule dz);

// Classical stochastic-force correlation strengths and dissipative function.
struct NoiseCorrelations {
    Schedule a;         // momentum^2 / time
    Schedule b;         // length^2 / time
    Schedule c;         // length*momentum / time
    Schedule gamma;     // dimensionless dissipative function Gamma_t
    Schedule gamma_dot; // d Gamma / dt (friction rate)

    NoiseCorrelations() = default;

    // Constant strengths with Gamma_t = 2*lambda*t.
    static NoiseCorrelations constants(double a, double b, double c, double lambda);

    struct Sample {
        double a, b, c, gamma, gamma_dot;
    };
    Sample eval(double t) const;
};

struct Diffusion {
    double dx, dp, dz;
};

// Identification of noise strengths with diffusion coefficients:
// D_x = B_t, D_p = A_t, D_z = -C_t (see the header comment for why).
Diffusion map_noise_to_diffusion(const NoiseCorrelations& nc, double t);
// Inverse map, used to drive the stochastic engines from a coefficient set.
NoiseCorrelations noise_from_diffusion(const CoefficientSchedule& cs, double t0, double t1);

// One Lindblad operator Phi = alpha*x + beta*p.
struct LindbladPair {
    std::complex<double> alpha;
    std::complex<double> beta;
};

struct LindbladSet {
    std::vector<LindbladPair> pairs;

    // Residuals of the three constraint sums against (cs, t); all should be
    // ~machine precision for a valid decomposition.
    struct Residual {
        double sum_beta2;  // |sum |beta|^2 - D_x/hbar^2|
        double sum_alpha2; // |sum |alpha|^2 - D_p/hbar^2|
        double sum_cross;  // |sum conj(alpha) beta - (i lambda/2hbar - D_z/hbar^2)|
    };
    Residual verify(const Coefficients& c, double hbar) const;
};

} // namespace qbm
