#pragma once

// Eikonal/transport hierarchy for the semiclassical ansatz
// v_app = (sum_{j<=n} a_j h^j) e^{iS/h}.  Expanding
//   i h dv/ds + h^2 Lap v = omega |v|^{p-1} v
// in powers of h with v = a e^{iS/h} gives
//   dS/ds   = -(grad S)^2 - omega |a_0|^{p-1}
//   da_j/ds = -2 grad S . grad a_j - a_j Lap S + i Lap a_{j-1} - N_j
// where a_{-1} = 0 and N_j is the h^j coefficient of
// (i omega a / h) (f(a) - f(a_0)),  f(b) = (b conj(b))^{(p-1)/2}.
// The j = 0 coefficient of f(a) - f(a_0) vanishes, so the division by h is
// an exact downshift of the truncated Cauchy-product series (symbolcalc).
// The hierarchy is closed at order J by setting a_{J+1} = 0; the cost of the
// closure shows up as the measured h^{n+1} decay of wkb_residual.

#include <optional>
#include <string>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

struct WkbState {
    double s = 0.0;           // current time
    Field S;                  // phase; real up to roundoff dust
    std::vector<Field> amps;  // amplitude coefficients a_0 .. a_J
    int p = 3;                // odd nonlinearity exponent >= 3
    double omega = 1.0;       // coupling (+1 defocusing, -1 focusing, 0 free)

    int order() const { return (int)amps.size() - 1; }
    // Grids consistent, p odd >= 3, S real to 1e-10 of its sup (absolute
    // floor 1e-14 so an identically small phase is not rejected for dust).
    void validate() const;
};

// Time derivative of a WkbState, same field layout.
struct WkbDeriv {
    Field dS;
    std::vector<Field> damps;
};

struct HierarchyConfig {
    // Classical 4-stage Runge-Kutta step.  The default is small enough that
    // halving it moves the test trajectories by < 1e-8 (checked in tests).
    double dt = 1e-3;
    int closure_order = 0;  // J: must match the state, a_{J+1} := 0
    double s_max = 0.2;     // hard cap on the final time

    void validate() const;  // throws ConfigError
};

// Right-hand side of the truncated hierarchy.  Spatial derivatives are
// spectral; the nonlinear coefficients come from the symbolcalc Cauchy
// product capped at J+1 (so a_{J+1} enters the top order and is zero).
WkbDeriv hierarchy_rhs(const WkbState& state);

// Integrate from state0.s to s_end (absolute) with a uniform step of at
// most cfg.dt, storing the state at every step (front is state0 itself).
// Throws ConfigError on malformed input or s_end outside [state0.s, s_max];
// throws RuntimeAbort when sup|a_0| exceeds 10^3 times its initial value or
// goes non-finite (focusing collapse or s beyond the analyticity time).
std::vector<WkbState> integrate_wkb(const WkbState& state0, double s_end,
                                    const HierarchyConfig& cfg);

// First s at which sup|a_0| reaches twice its initial value, or s_max when
// the amplitude never doubles.  Focusing runs should stay below half of
// this proxy time; the experiments layer enforces that convention.
double blowup_proxy_time(const WkbState& state0, const HierarchyConfig& cfg);

// Pointwise (sum_{j<=n} a_j h^j) e^{i Re(S)/h} with n = min(J, n_override)
// (n = J when no override).  The real part keeps the factor unimodular;
// the state invariant bounds the imaginary dust.
Field assemble_vapp(const WkbState& state, double h,
                    std::optional<int> n_override = std::nullopt);

// L^2 norm of r_h(s) = i h dv/ds + h^2 Lap v - omega |v|^{p-1} v for the
// order-n assembly, with dv/ds by 4th-order central differences.  Needs a
// uniform time grid of >= 5 slices; entry k corresponds to traj[k + 2].
std::vector<double> wkb_residual(const std::vector<WkbState>& traj, double h, int n);

// Write one Field binary per (slice, component) plus manifest.json holding
// the times, J, params (grid, p, omega) and the step dt.  Creates dir.
void write_trajectory(const std::vector<WkbState>& traj, const std::string& dir);

}  // namespace nlslab
