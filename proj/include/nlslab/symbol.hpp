#pragma once

// Truncated analytic-symbol calculus on the periodic grid.
//
// A SymbolSeries is a truncated formal power series in the small parameter h,
//     b(s, z, h) = sum_{j=0..J} b_j(s, z) h^j,
// whose coefficients are sampled on a shared spatial grid and a uniform time
// grid s_i in [0, s0_used].  The scale of majorant norms
//     ||b||_theta = sum_j (eps^j / j!) sup_{tau, s, y}
//                   |W(z) b_j(s, z)| (1 - tau - s/s0)^{j + theta},
// with z = x + i y, |y| < l*tau, s <= s0*(1 - tau), and the exponential
// weight W(z) = exp((1 + z^2)^{1/2}), is evaluated by sampling tau and the
// imaginary shift y on declared grids; strip values come from the spectral
// shift of the band-limited interpolant.  The result is a lower bound of the
// continuum sup that converges as the sample counts grow.
//
// On top of the norms sit ratio checks for the product, smoothing and
// composition inequalities of the calculus, and a Picard iteration that
// solves the phase/amplitude system in second-derivative form,
//     u = (d2/ds2 phi, d2/ds2 a) = F(s, u),
// reconstructing (phi, a) by repeated time antiderivatives and the phase S
// by one more.  Multiplication by h and division of an h-multiple by h are
// exact index shifts of the coefficient list, so the whole calculus is
// h-free; h only enters when a series is evaluated.

#include <array>
#include <cstdint>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

struct MajorantParams {
    double s0 = 0.05;       // time radius
    double l = 0.3;         // strip half-width, 0 < l < 1/2
    double B = 2.0;         // coefficient growth base
    double eps = 0.4;       // formal parameter, 0 < eps < 1/B
    double theta = 1.0;     // default norm exponent in [0, 1]
    int tau_samples = 32;   // tau grid: (t + 1/2)/tau_samples, t = 0..tau_samples-1
    int strip_samples = 9;  // imaginary shifts per axis, odd, includes y = 0

    void validate() const;  // throws ConfigError on violation
};

struct SymbolSeries {
    GridSpec grid;
    int J = 0;             // truncation order: coefficients j = 0..J
    int nt = 1;            // time slices; s_i = i * ds, ds = s0_used/(nt-1)
    double s0_used = 0.0;  // time radius actually populated (0 when nt == 1)
    // coeff[j] holds nt contiguous slices of grid.total() values each
    std::vector<std::vector<cplx>> coeff;

    static SymbolSeries zero(const GridSpec& g, int J, int nt, double s0_used);

    double ds() const { return nt > 1 ? s0_used / (nt - 1) : 0.0; }
    double s_at(int i) const { return i * ds(); }

    cplx* slice(int j, int i) { return coeff[j].data() + (std::size_t)i * grid.total(); }
    const cplx* slice(int j, int i) const {
        return coeff[j].data() + (std::size_t)i * grid.total();
    }
    Field slice_field(int j, int i) const;
    void set_slice(int j, int i, const Field& f);

    // the two series live on the same grid/time layout
    bool layout_matches(const SymbolSeries& o) const;
};

// --- the weight --------------------------------------------------------------

// W(z) = exp((1 + z^2)^{1/2}), z in C^d with z^2 = z_1^2 + ... + z_d^2,
// principal branch.  Requires |Im z_a| < 1/2 per axis so that Re(1+z^2) > 0.
cplx weight(const std::vector<cplx>& z);

// --- series arithmetic --------------------------------------------------------

SymbolSeries series_add(const SymbolSeries& a, const SymbolSeries& b);
SymbolSeries series_sub(const SymbolSeries& a, const SymbolSeries& b);
SymbolSeries series_scale(const SymbolSeries& a, cplx c);

// b |-> h * b: shift coefficients up one index (order min(J+1, j_cap)).
SymbolSeries upshift(const SymbolSeries& b, int j_cap = 8);
// b |-> (b - b_0)/h: shift coefficients down one index (exact; order J-1,
// or the zero series of order 0 when J == 0).
SymbolSeries downshift(const SymbolSeries& b);

// conjugate symbol: on the real grid it is the pointwise conjugate; its own
// spectrum then continues it holomorphically to the strip
SymbolSeries symbol_conj(const SymbolSeries& b);

// Cauchy product in h, pointwise (dealiased) products on each slice;
// truncated at min(J1 + J2, j_cap).
SymbolSeries symbol_product(const SymbolSeries& a, const SymbolSeries& b, int j_cap = 8);

// coefficient-wise spectral derivative / Laplacian
SymbolSeries series_derivative(const SymbolSeries& b, int axis);
SymbolSeries series_laplacian(const SymbolSeries& b);

// ds^{-1}: coefficient-wise cumulative composite trapezoid integral from 0;
// output vanishes identically at s = 0.  Requires nt >= 2.
SymbolSeries time_antiderivative(const SymbolSeries& b);

// Evaluate the truncated series at a concrete h: one Field per time slice.
std::vector<Field> evaluate_series(const SymbolSeries& b, double h);

// --- majorant norms -----------------------------------------------------------

// Discretized ||b||_theta.  Preconditions: mp valid, b.s0_used covers
// mp.s0 * (1 - 1/tau_samples), strip shifts within the overflow guard.
double majorant_norm(const SymbolSeries& b, const MajorantParams& mp, double theta);

struct RatioResult {
    double ratio = 0.0;
    bool vacuous = false;  // denominator vanished; no information
};

// ||b1 b2||_theta / (||b1||_0 ||b2||_theta)
RatioResult check_product_inequality(const SymbolSeries& b1, const SymbolSeries& b2,
                                     const MajorantParams& mp, double theta);

// one ratio (lhs / claimed rhs-without-constant) per smoothing inequality
struct SmoothingReport {
    RatioResult anti_grad;    // ||ds^{-1} grad b||_1      / (s0 ||b||_1)
    RatioResult anti_hlap;    // ||ds^{-1} h Lap b||_1     / (s0 ||b||_1)
    RatioResult anti_hdiff;   // ||ds^{-1} (b - b_0)/h||_1 / (s0 ||b||_1)
    RatioResult anti_half;    // ||ds^{-1} b||_{1/2}       / (s0 ||b||_1)
    RatioResult anti_one;     // ||ds^{-1} b||_1           / (s0 ||b||_1)
    RatioResult anti_double;  // ||ds^{-2} b||_0           / (s0 ||b||_1)
};
SmoothingReport check_smoothing_inequalities(const SymbolSeries& b, const MajorantParams& mp);

// ||(ds^{-1} b1)(ds^{-1} b2)||_1 / (s0^2 ||b1||_1 ||b2||_1)
RatioResult check_composition_inequality(const SymbolSeries& b1, const SymbolSeries& b2,
                                         const MajorantParams& mp);

// --- norm corpus --------------------------------------------------------------

// Band-limited two-term (J = 1) random symbol: each coefficient is a decayed
// random trig polynomial times a smooth complex time envelope.
struct RandomStream;  // rng.hpp
SymbolSeries make_corpus_symbol(const GridSpec& g, RandomStream& rs, int nt, double s0,
                                int kmax, double decay);

struct InequalityStats {
    double ratio_max = 0.0;
    double ratio_mean = 0.0;
    int samples = 0;  // non-vacuous ratios aggregated
    void absorb(const RatioResult& r);
};

struct CorpusReport {
    std::uint64_t seed = 0;
    int count = 0;
    double h = 0.0;
    MajorantParams mp;
    InequalityStats product;     // pairs (b_{2i}, b_{2i+1}), theta = mp.theta
    InequalityStats anti_grad;
    InequalityStats anti_hlap;
    InequalityStats anti_hdiff;
    InequalityStats anti_half;
    InequalityStats anti_one;
    InequalityStats anti_double;
    InequalityStats compose;     // pairs, as for product
};

// Deterministic seeded corpus sweep: `count` symbols on grid g; requires
// 0 < h < mp.eps (the calculus is stated for that range; the shift
// operators themselves are h-exact).
CorpusReport run_norm_corpus(std::uint64_t seed, int count, const GridSpec& g,
                             const MajorantParams& mp, double h);

// --- Picard fixed point -------------------------------------------------------

struct PicardOptions {
    int iters = 8;
    int nt = 33;     // time slices on [0, mp.s0]
    int j_cap = 8;   // product truncation cap
};

struct PicardResult {
    // phi[i][axis]: real gradient-field slice at time s_i
    std::vector<std::vector<Field>> phi;
    // amplitude series over the same time grid
    SymbolSeries a;
    // phase slices S(s_i, .), real up to roundoff
    std::vector<Field> S;
    // ||u^{k+1} - u^k||_1 totals and successive ratios
    std::vector<double> distances;
    std::vector<double> contraction_ratios;
};

// Solve the second-derivative form of the phase/amplitude system by Picard
// iteration from u = 0.  phi0 must be a curl-free (gradient) field with
// zero mean per component; a0 carries the initial amplitude coefficients
// (nt == 1).  Throws RuntimeAbort when the iteration diverges (distance
// ratio > 1 three times in a row).
PicardResult picard_solve(const std::vector<Field>& phi0, const SymbolSeries& a0,
                          const MajorantParams& mp, int p, double omega, double h,
                          const PicardOptions& opt = {});

}  // namespace nlslab
