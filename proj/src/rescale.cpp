#include "nlslab/rescale.hpp"

#include <cmath>

namespace nlslab {

double SemiclassicalParams::h() const { return std::pow(hbar, beta); }

SemiclassicalParams SemiclassicalParams::with_hbar(double hb) const {
    SemiclassicalParams q = *this;
    q.hbar = hb;
    q.validate();
    return q;
}

void SemiclassicalParams::validate() const {
    if (d < 1) throw ConfigError("params: d must be >= 1");
    if (p < 3 || p % 2 == 0) throw ConfigError("params: p must be odd and >= 3");
    if (omega != 1.0 && omega != -1.0) throw ConfigError("params: omega must be +1 or -1");
    if (!(beta > 0.0)) throw ConfigError("params: beta must be positive");
    if (!(hbar > 0.0 && hbar < 1.0)) throw ConfigError("params: hbar must lie in (0,1)");
}

SemiclassicalParams make_params(int d, int p, double omega, double beta, double hbar) {
    SemiclassicalParams pr;
    pr.d = d;
    pr.p = p;
    pr.omega = omega;
    pr.beta = beta;
    pr.alpha = beta + 2.0;
    pr.gamma = -2.0 * (beta + 1.0) / (double)(p - 1);
    pr.hbar = hbar;
    pr.convention = "forced-beta";
    pr.validate();
    return pr;
}

double beta_thm1(int d, int p) {
    // single correctly-rounded division of exact integers
    return (double)(d * (p - 1) - 2 * (p + 1)) / (double)(2 * (p + 1));
}

bool beta_thm1_positive(int d, int p) { return d * (p - 1) > 2 * (p + 1); }

SemiclassicalParams make_params_thm1(int d, int p, double omega, double hbar) {
    SemiclassicalParams pr;
    pr.d = d;
    pr.p = p;
    pr.omega = omega;
    pr.beta = beta_thm1(d, p);
    pr.alpha = pr.beta + 2.0;
    pr.gamma = -(double)d / (double)(p + 1);
    pr.hbar = hbar;
    pr.convention = "thm1";
    pr.validate();
    return pr;
}

SemiclassicalParams make_params_thm2(int d, int p, double omega, double sigma, double eps,
                                     double hbar) {
    SemiclassicalParams pr;
    pr.d = d;
    pr.p = p;
    pr.omega = omega;
    pr.gamma = sigma - (double)d / 2.0 + eps;
    pr.beta = -((double)(p - 1) / 2.0) * pr.gamma - 1.0;
    pr.alpha = pr.beta + 2.0;
    pr.hbar = hbar;
    pr.convention = "thm2";
    pr.validate();
    return pr;
}

CriticalIndices critical_indices(int d, int p) {
    if (p < 3 || p % 2 == 0) throw ConfigError("critical_indices: p must be odd and >= 3");
    CriticalIndices ci;
    ci.sigma_c = (double)(d * (p - 1) - 4) / (double)(2 * (p - 1));
    ci.sigma_sob = (double)(d * (p - 1)) / (double)(2 * (p + 1));
    return ci;
}

double inflation_rate(int d, int p, double sigma) {
    const CriticalIndices ci = critical_indices(d, p);
    if (!(sigma > 0.0 && sigma < ci.sigma_c))
        throw ConfigError("inflation_rate: sigma must lie in (0, sigma_c)");
    const double knee = (double)(d * (p - 1) - 8) / (double)(2 * (p - 1));  // d/2 - 4/(p-1)
    if (sigma <= knee) return sigma / 2.0;
    return sigma / (((double)(p - 1) / 2.0) * ((double)d / 2.0 - sigma));
}

double physical_sobolev_norm(const Field& v, const SemiclassicalParams& pr, double sigma) {
    if (v.grid.d != pr.d) throw ConfigError("physical_sobolev_norm: dimension mismatch");
    const double pre = std::pow(pr.hbar, pr.gamma + (double)pr.d / 2.0);
    return pre * sobolev_norm(v, sigma, 1.0 / pr.hbar);
}

double physical_lebesgue_norm(const Field& v, const SemiclassicalParams& pr, double q) {
    if (v.grid.d != pr.d) throw ConfigError("physical_lebesgue_norm: dimension mismatch");
    const double pre = std::pow(pr.hbar, pr.gamma + (double)pr.d / q);
    return pre * lebesgue_norm(v, q);
}

double hplus_energy(const Field& v, const SemiclassicalParams& pr, bool physical) {
    if (v.grid.d != pr.d) throw ConfigError("hplus_energy: dimension mismatch");
    const double kin = 0.5 * dirichlet_integral(v);
    const double q = (double)(pr.p + 1);
    const double pot = std::pow(lebesgue_norm(v, q), q) / q;
    if (!physical) return kin + pot;
    const double g = pr.gamma, dd = (double)pr.d;
    return std::pow(pr.hbar, 2.0 * g + dd - 2.0) * kin + std::pow(pr.hbar, q * g + dd) * pot;
}

}  // namespace nlslab
