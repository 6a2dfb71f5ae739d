#pragma once

// Scaling experiments.  Each run sweeps a decreasing sequence of hbar
// values, builds concentrated semiclassical data, evolves them (with the
// split-step solver, or with the WKB hierarchy when only phases matter),
// measures physical-space norms, and fits log-log exponents against the
// predicted ones.  Reports are plain data: norm series per hbar, slope
// fits paired with predictions and tolerances, and named verdicts.

#include <string>
#include <utility>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/rescale.hpp"
#include "nlslab/solver.hpp"
#include "nlslab/wkb.hpp"

namespace nlslab {

// strictly decreasing hbar values in (0,1); at least 4 entries so the
// exponent fits are over-determined
struct HbarSequence {
    std::vector<double> values;

    void validate() const;                            // throws ConfigError
    std::vector<double> h_values(double beta) const;  // h = hbar^beta
};

// one measured quantity per hbar, aligned with HbarSequence::values;
// entries are NaN for aborted runs
struct NormSeries {
    std::string label;
    std::vector<double> values;
};

// fitted exponent of value ~ hbar^slope next to its prediction;
// pass means |slope - predicted| <= tolerance
struct SlopeFit {
    std::string label;
    std::string series;  // label of the NormSeries the fit was computed from
    double slope = 0.0;
    double stderr_ = 0.0;
    double predicted = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct Verdict {
    std::string label;
    bool pass = false;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<double> hbars;
    std::vector<NormSeries> series;
    std::vector<SlopeFit> fits;
    std::vector<Verdict> verdicts;
    std::vector<std::string> notes;  // cutoff warnings, aborts, per-run info

    bool passed() const;  // every fit and every verdict passes
};

// least-squares exponent of log(value) against log(hbar); the second
// member is the standard error of the slope.  Needs >= 4 points with
// positive hbar and value.
std::pair<double, double> fit_exponent(
    const std::vector<std::pair<double, double>>& points);

// Semiclassical datum v(0,z) = chi(hbar^{1-eta} |z|) a0(z), where chi is
// the standard smooth bump: 1 for |xi| <= r/2, exp(1 - 1/(1-q^2)) with
// q = 2|xi|/r - 1 on r/2 < |xi| < r, and 0 beyond.  Without the cutoff the
// datum is a0 itself.  If the cutoff removes more than 1e-8 of the squared
// mass a warning is appended to *warnings (the run continues).
Field initial_datum(const Field& a0, const SemiclassicalParams& pr, double eta,
                    bool use_cutoff, double r = 8.0,
                    std::vector<std::string>* warnings = nullptr);

// Energy-space separation experiment.  For each hbar, the profile
// a0(z) = e^{-z^2} and its (1+delta)-dilate are evolved to s_h = h^{1-eps}
// with delta = hbar^{eps beta} log(1/hbar); the report tracks the H+ energy
// of both data, the difference norms at time 0 (log-compensated for the
// fits, since delta carries a log factor), the L^{p+1} separation at s_h,
// and the pointwise modulus gap that shows the separation is a phase
// effect.
struct Thm1Config {
    int d = 3;
    int p = 7;
    double omega = 1.0;
    double eps = 0.3;          // perturbation exponent in delta
    double nu_fraction = 0.5;  // nu = nu_fraction * eps * beta, in (0,1)
    double eta = 0.3;          // cutoff sharpening exponent
    double cutoff_r = 8.0;
    bool use_cutoff = true;
    GridSpec grid{3, 48, 8.0};
    double dt = 5e-3;             // capped further by the solver budgets
    std::vector<double> q_list;   // Lebesgue exponents at t=0; default p+1..p+3
    double sep_threshold = 0.25;  // separation vs |u0|_{L^{p+1}}
    double slope_tol_h = 0.08;    // tolerance, H^{1+nu} difference exponent
    double slope_tol_l = 0.04;    // tolerance, L^{p+1} difference exponent

    void validate() const;
};

ExperimentReport thm1_run(const HbarSequence& seq, const Thm1Config& cfg);

// Sobolev norm inflation experiment: H^sigma at t=0 vanishes like
// hbar^eps while H^rho at the observation time s(hbar) = hbar^kappa s_star
// inflates.  kappa = 0 is the plain fixed-time regime; kappa > 0 shifts
// the observation time and weakens the inflation exponent accordingly.
struct Thm2Config {
    int d = 3;
    int p = 7;
    double omega = 1.0;
    GridSpec grid{3, 64, 10.0};
    double dt = 1e-3;  // capped further by the solver budgets
    double s_star = 0.1;
    double kappa = 0.0;
    double slope_tol = 0.05;

    void validate() const;
};

// Admissibility of (sigma, rho, eps): throws ConfigError naming the bound
// that fails (all bounds on rho are strict).
void thm2_validate_window(int d, int p, double sigma, double rho, double eps);

// predicted exponents under gamma = sigma - d/2 + eps,
// beta = -(p-1)gamma/2 - 1
double thm2_slope_at_zero(int d, int p, double sigma, double eps);  // == eps
double thm2_slope_at_obs(int d, int p, double sigma, double rho, double eps,
                         double kappa = 0.0);

ExperimentReport thm2_run(const HbarSequence& seq, double sigma, double rho,
                          double eps, const Thm2Config& cfg);

// WKB-level mechanism behind the separation: integrate the order-0
// hierarchy from a0 and (1+delta)a0, and check that the phase gap
// (S~ - S)(s_h) matches its leading prediction
// -omega (p-1) delta s_h a0^{p-1} pointwise where the profile is large,
// and that |S~ - S|/h reaches pi/2 for the smallest hbar.  beta is free
// here: the gap grows like (p-1) log(1/h)/beta independently of eps, while
// a steep beta keeps s_h small enough for the leading-order prediction to
// be accurate.
struct PhaseDivergenceConfig {
    int d = 3;
    int p = 7;
    double omega = 1.0;
    double beta = 30.0;
    double eps = 0.3;
    GridSpec grid{3, 48, 8.0};
    double dt = 2e-4;      // hierarchy step
    double rel_tol = 0.1;  // pointwise tolerance on the phase prediction
    double core_level = 0.1;  // prediction checked where a0^{p-1} > level*max

    void validate() const;
};

ExperimentReport phase_divergence_check(const HbarSequence& seq,
                                        const PhaseDivergenceConfig& cfg);

// artifact writers: machine-readable JSON, a per-hbar CSV table, and a
// log-log SVG with the measured points plus fitted and predicted lines
void write_report_json(const ExperimentReport& rep, const std::string& path);
void write_report_csv(const ExperimentReport& rep, const std::string& path);
void write_report_svg(const ExperimentReport& rep, const std::string& path);

}  // namespace nlslab
