#pragma once

// Bookkeeping between the physical equation  i dt u + Lap u = omega |u|^{p-1} u
// and its semiclassical rescaling  i h ds v + h^2 Lap v = omega |v|^{p-1} v
// under  t = hbar^alpha s,  x = hbar z,  h = hbar^beta,
//        u(t, x) = hbar^gamma v(s, z)  with
//        alpha = beta + 2,  (p-1) gamma = -2 (beta + 1).
//
// Derived exponents are computed as single correctly-rounded divisions of
// exact integers whenever the inputs allow it, so rational substitution
// examples reproduce bit-exactly.

#include <string>

#include "nlslab/grid.hpp"

namespace nlslab {

struct SemiclassicalParams {
    int d = 3;
    int p = 7;           // odd, >= 3
    double omega = 1.0;  // +1 defocusing / -1 focusing
    double beta = 0.0;
    double alpha = 0.0;  // beta + 2
    double gamma = 0.0;  // -2 (beta + 1) / (p - 1)
    double hbar = 0.5;   // in (0,1)
    std::string convention = "forced-beta";  // or "thm1" / "thm2"

    double h() const;  // hbar^beta
    SemiclassicalParams with_hbar(double hb) const;
    void validate() const;  // throws ConfigError
};

// gamma fixed by beta: gamma = -2 (beta + 1) / (p - 1).
SemiclassicalParams make_params(int d, int p, double omega, double beta, double hbar = 0.5);
// gamma = -d / (p + 1)  =>  beta = (d (p-1) - 2 (p+1)) / (2 (p+1)).
SemiclassicalParams make_params_thm1(int d, int p, double omega, double hbar = 0.5);
// gamma = sigma - d/2 + eps  =>  beta = -(p-1) gamma / 2 - 1.
SemiclassicalParams make_params_thm2(int d, int p, double omega, double sigma, double eps,
                                     double hbar = 0.5);

// raw thm1-convention beta without validation (may be <= 0 for subcritical p)
double beta_thm1(int d, int p);
// exact integer test: beta_thm1 > 0  <=>  p (d-2) > d + 2
bool beta_thm1_positive(int d, int p);

struct CriticalIndices {
    double sigma_c;    // d/2 - 2/(p-1)
    double sigma_sob;  // d/2 - d/(p+1)
};
CriticalIndices critical_indices(int d, int p);

// growth-rate map I(sigma) on (0, sigma_c):
//   sigma/2                                for sigma <= d/2 - 4/(p-1),
//   sigma / ( ((p-1)/2) (d/2 - sigma) )    otherwise.
double inflation_rate(int d, int p, double sigma);

// || u ||_{H^sigma} of the physical-side function u(x) = hbar^gamma v(x/hbar):
// hbar^{gamma + d/2} * || (1 + |xi|^2/hbar^2)^{sigma/2} v ||_{L^2}.
double physical_sobolev_norm(const Field& v, const SemiclassicalParams& pr, double sigma);
// || u ||_{L^q} = hbar^{gamma + d/q} * || v ||_{L^q}.
double physical_lebesgue_norm(const Field& v, const SemiclassicalParams& pr, double q);

// H^+(u) = 1/2 int |grad u|^2 + 1/(p+1) int |u|^{p+1}; `physical` selects the
// physical-variable functional (via the change of variables) or the
// semiclassical-variable one evaluated on v directly.
double hplus_energy(const Field& v, const SemiclassicalParams& pr, bool physical);

}  // namespace nlslab
