// fokker_planck.hpp — Direct explicit solution of the phase-space equation
//   dW/dt = d/dp[(m w0^2 x + (mu+lambda) p) W] - d/dx[(p/m + (mu-lambda) x) W]
//           + D_p d2W/dp2 + D_x d2W/dx2 + 2 D_z d2W/dxdp
// on a rectangular grid with zero-flux (reflecting) boundaries.
//
// Discretization: conservative face fluxes. Advection uses second-order
// central face averages, diffusion and the mixed term second-order central
// differences, all written as fluxes so the Riemann mass telescopes to
// roundoff. Time stepping is classical RK4, which is stable for the pure
// advection limit as well (its stability region covers the imaginary axis
// up to 2*sqrt(2)). First-order upwinding was rejected: its numerical
// diffusion |v| dx / 2 is several percent of the physical D at a 512^2
// resolution, far above the cross-engine tolerances this solver must meet.

#pragma once

#include "qbm/grid.hpp"
#include "qbm/model.hpp"

namespace qbm {

// Largest dt the explicit step accepts for this grid and the coefficients
// at time t (advective and diffusive von Neumann bounds, with safety 0.8).
double fp_max_stable_dt(const WignerGrid& w, const OscillatorParams& osc,
                        const CoefficientSchedule& cs, double t);

// One explicit step in place; throws UnstableStep (with the suggested dt)
// when dt exceeds the stability bound.
void fp_step(WignerGrid& w, const OscillatorParams& osc, const CoefficientSchedule& cs,
             double t, double dt);

struct FPSeries {
    std::vector<double> times;
    std::vector<GridMoments> moments;
    double max_mass_drift = 0.0;
};

// Marches from t = 0 to t_final, sampling grid moments every sample_dt.
// The internal step is the stability bound snapped to divide the sampling
// interval. The grid is updated in place.
FPSeries fp_evolve(WignerGrid& w, const OscillatorParams& osc, const CoefficientSchedule& cs,
                   double t_final, double sample_dt);

} // namespace qbm
