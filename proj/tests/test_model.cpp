#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qbm/model.hpp"
#include "qbm/rng.hpp"
#include "support/oracles.hpp"

using namespace qbm;

namespace {
const OscillatorParams kOsc{1.0, 1.0, 1.0};
}

TEST_CASE("thermal occupation limits and values") {
    CHECK(thermal_occupation(kOsc, ThermalSpec{0.0, 1.0}) == 0.0);

    // beta = ln 2  =>  nbar = 1
    ThermalSpec th_ln2{1.0 / std::log(2.0), 1.0};
    CHECK(thermal_occupation(kOsc, th_ln2) == doctest::Approx(1.0).epsilon(1e-14));

    // beta = 1  =>  nbar = 1/(e - 1), evaluated independently
    ThermalSpec th_one{1.0, 1.0};
    const double expected = 1.0 / (std::exp(1.0) - 1.0);
    CHECK(thermal_occupation(kOsc, th_one) == doctest::Approx(expected).epsilon(1e-15));

    // huge beta must saturate to zero, not fault
    OscillatorParams stiff{1.0, 1e6, 1.0};
    CHECK(thermal_occupation(stiff, ThermalSpec{1e-6, 1.0}) == 0.0);
}

TEST_CASE("thermal occupation is monotone in T and vanishes at T -> 0") {
    double prev = 0.0;
    for (double T = 0.1; T < 30.0; T *= 1.7) {
        const double n = thermal_occupation(kOsc, ThermalSpec{T, 1.0});
        CHECK(n > prev);
        prev = n;
    }
    CHECK(thermal_occupation(kOsc, ThermalSpec{1e-8, 1.0}) < 1e-30);
}

TEST_CASE("parameter invariants are enforced") {
    CHECK_THROWS_AS(OscillatorParams(0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(OscillatorParams(1.0, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ThermalSpec(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CoefficientSchedule::constants(0.1, 0.1, -1.0, 0.0, 0.0).eval(0.0),
                    SimulationError);
}

TEST_CASE("lindblad margin: basic values") {
    SUBCASE("no damping, unit diffusion") {
        auto cs = CoefficientSchedule::constants(0.0, 0.0, 1.0, 1.0, 0.0);
        CHECK(lindblad_margin(cs, 0.0, kOsc) == 1.0);
    }
    SUBCASE("agarwal margin is exactly -(hbar lambda/2)^2") {
        const double lambda = 0.37;
        auto cs = preset(Preset::agarwal, kOsc, ThermalSpec{2.0, 1.0}, lambda);
        CHECK(lindblad_margin(cs, 0.0, kOsc) == -(lambda / 2.0) * (lambda / 2.0));
    }
    SUBCASE("optical master equation at nbar = 0 sits exactly on the margin") {
        auto cs = preset(Preset::optical_sme, kOsc, ThermalSpec{0.0, 1.0}, 0.3);
        CHECK(lindblad_margin(cs, 0.0, kOsc) == 0.0);
    }
}

TEST_CASE("lindblad margin is symmetric under D_z -> -D_z") {
    RngStream rng(7);
    for (int i = 0; i < 50; ++i) {
        Coefficients c;
        c.lambda = std::abs(rng.next_normal());
        c.dx = std::abs(rng.next_normal());
        c.dp = std::abs(rng.next_normal());
        c.dz = rng.next_normal();
        Coefficients flipped = c;
        flipped.dz = -c.dz;
        CHECK(lindblad_margin(c, 1.0) == lindblad_margin(flipped, 1.0));
    }
}

TEST_CASE("optical preset: margin nonnegative, zero iff nbar = 0, monotone in nbar") {
    const double lambda = 0.2;
    double prev = -1.0;
    for (double T : {0.0, 0.3, 0.7, 1.0, 2.0, 5.0, 20.0}) {
        ThermalSpec th{T, 1.0};
        auto cs = preset(Preset::optical_sme, kOsc, th, lambda);
        const double m = lindblad_margin(cs, 0.0, kOsc);
        if (T == 0.0)
            CHECK(m == 0.0);
        else
            CHECK(m > 0.0);
        CHECK(m > prev);
        prev = m;
    }
}

TEST_CASE("agarwal and caldeira_leggett presets always sit below the margin") {
    for (double lambda : {0.01, 0.1, 1.0, 3.0}) {
        for (auto which : {Preset::agarwal, Preset::caldeira_leggett}) {
            auto cs = preset(which, kOsc, ThermalSpec{1.3, 1.0}, lambda);
            CHECK(lindblad_margin(cs, 0.0, kOsc) < 0.0);
            CHECK(lindblad_margin(cs, 0.0, kOsc) ==
                  doctest::Approx(-(lambda / 2) * (lambda / 2)).epsilon(1e-14));
        }
    }
}

TEST_CASE("preset coefficient values") {
    SUBCASE("optical at T = 0") {
        auto cs = preset(Preset::optical_sme, kOsc, ThermalSpec{0.0, 1.0}, 0.4);
        const Coefficients c = cs.eval(0.0);
        CHECK(c.mu == 0.0);
        CHECK(c.dz == 0.0);
        // D_p = lambda m hbar w0 (nbar + 1/2); the rank-1 Lindblad structure
        // Phi = sqrt(lambda) a fixes the overall factor
        CHECK(c.dp == doctest::Approx(0.4 * 0.5).epsilon(1e-15));
        CHECK(c.dx == doctest::Approx(c.dp).epsilon(1e-15)); // (m w0)^2 = 1
    }
    SUBCASE("agarwal at T = 0 has no diffusion and mu = lambda") {
        auto cs = preset(Preset::agarwal, kOsc, ThermalSpec{0.0, 1.0}, 0.4);
        const Coefficients c = cs.eval(0.0);
        CHECK(c.mu == 0.4);
        CHECK(c.dx == 0.0);
        CHECK(c.dp == 0.0);
        CHECK(c.dz == 0.0);
    }
    SUBCASE("caldeira_leggett approaches agarwal at high temperature") {
        double prev_gap = 1.0;
        for (double T : {10.0, 50.0, 250.0}) {
            ThermalSpec th{T, 1.0};
            const double dp_ag = preset(Preset::agarwal, kOsc, th, 0.2).eval(0.0).dp;
            const double dp_cl = preset(Preset::caldeira_leggett, kOsc, th, 0.2).eval(0.0).dp;
            const double gap = std::abs(dp_ag / dp_cl - 1.0);
            CHECK(gap < 1.1 / (2.0 * T)); // nbar = kT/hw0 - 1/2 + O(1/T)
            CHECK(gap < prev_gap);
            prev_gap = gap;
        }
    }
    SUBCASE("unknown preset name throws") {
        CHECK_THROWS_AS(preset_from_name("bogus"), SimulationError);
    }
}

TEST_CASE("noise <-> diffusion map") {
    SUBCASE("zeros map to zeros") {
        auto nc = NoiseCorrelations::constants(0.0, 0.0, 0.0, 0.0);
        const Diffusion d = map_noise_to_diffusion(nc, 0.0);
        CHECK(d.dx == 0.0);
        CHECK(d.dp == 0.0);
        CHECK(d.dz == 0.0);
    }
    SUBCASE("units force D_x = B, D_p = A; sign convention D_z = -C") {
        auto nc = NoiseCorrelations::constants(1.0, 1.0, 0.0, 0.0);
        const Diffusion d = map_noise_to_diffusion(nc, 0.0);
        CHECK(d.dx == 1.0);
        CHECK(d.dp == 1.0);
        CHECK(d.dz == 0.0);

        auto nc2 = NoiseCorrelations::constants(0.5, 0.25, 0.1, 0.0);
        const Diffusion d2 = map_noise_to_diffusion(nc2, 0.0);
        CHECK(d2.dp == 0.5);
        CHECK(d2.dx == 0.25);
        CHECK(d2.dz == -0.1);
    }
    SUBCASE("round trip through noise_from_diffusion") {
        auto cs = CoefficientSchedule::constants(0.15, 0.15, 0.07, 0.2, 0.01);
        auto nc = noise_from_diffusion(cs, 0.0, 10.0);
        const Diffusion d = map_noise_to_diffusion(nc, 3.0);
        CHECK(d.dx == doctest::Approx(0.07).epsilon(1e-14));
        CHECK(d.dp == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(d.dz == doctest::Approx(0.01).epsilon(1e-14));
        CHECK(nc.eval(4.0).gamma == doctest::Approx(2.0 * 0.15 * 4.0).epsilon(1e-14));
        CHECK(nc.eval(4.0).gamma_dot == doctest::Approx(0.3).epsilon(1e-14));
    }
    SUBCASE("lindblad-valid schedules always give samplable noise") {
        RngStream rng(41);
        for (int i = 0; i < 60; ++i) {
            // construct margin >= 0 by scaling D_p up
            const double lambda = std::abs(rng.next_normal()) + 0.01;
            const double dx = std::abs(rng.next_normal()) + 0.01;
            const double dz = rng.next_normal() * 0.3;
            const double dp =
                (dz * dz + lambda * lambda / 4.0) / dx * (1.0 + std::abs(rng.next_normal()));
            Coefficients c{lambda, lambda, dx, dp, dz};
            REQUIRE(lindblad_margin(c, 1.0) >= 0.0);
            // a b - c^2 = D_p D_x - D_z^2 >= (lambda/2)^2 > 0
            const double a = dp, b = dx, cc = -dz;
            CHECK(a * b - cc * cc >= lambda * lambda / 4.0 - 1e-12);
        }
    }
}

TEST_CASE("schedule forms: constant, linear, table") {
    Schedule c = Schedule::constant(2.5);
    CHECK(c(0.0) == 2.5);
    CHECK(c(1e9) == 2.5);
    CHECK(c.derivative(1.0) == 0.0);

    Schedule l = Schedule::linear(1.0, 2.0);
    CHECK(l(0.0) == 1.0);
    CHECK(l(10.0) == 21.0);
    CHECK(l.derivative(5.0) == 2.0);

    Schedule t = Schedule::table({{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}});
    CHECK(t(0.5) == doctest::Approx(0.5));
    CHECK(t(1.5) == doctest::Approx(0.75));
    CHECK(t(-1.0) == 0.0);  // constant extrapolation
    CHECK(t(5.0) == 0.5);
    CHECK_THROWS_AS(Schedule::table({{0.0, 1.0}, {0.0, 2.0}}), SimulationError);
}

TEST_CASE("lindblad set constraint residuals") {
    // hand-built rank-1 set for the zero-temperature optical equation
    const double lambda = 0.3;
    LindbladSet set;
    set.pairs.push_back({std::sqrt(lambda / 2.0), std::complex<double>(0.0, std::sqrt(lambda / 2.0))});
    Coefficients c{lambda, 0.0, lambda / 2.0, lambda / 2.0, 0.0};
    const auto res = set.verify(c, 1.0);
    CHECK(res.sum_alpha2 < 1e-14);
    CHECK(res.sum_beta2 < 1e-14);
    CHECK(res.sum_cross < 1e-14);
}
