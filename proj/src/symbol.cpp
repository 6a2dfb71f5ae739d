#include "nlslab/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "nlslab/kernels.hpp"
#include "nlslab/rng.hpp"

namespace nlslab {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

// --- MajorantParams -----------------------------------------------------------

void MajorantParams::validate() const {
    if (!(s0 > 0.0)) throw ConfigError("majorant: s0 must be positive, got " + fmt(s0));
    if (!(l > 0.0 && l < 0.5))
        throw ConfigError("majorant: l must lie in (0, 1/2), got " + fmt(l));
    if (!(B > 0.0)) throw ConfigError("majorant: B must be positive, got " + fmt(B));
    if (!(eps > 0.0 && eps < 1.0 / B))
        throw ConfigError("majorant: eps must lie in (0, 1/B), got " + fmt(eps));
    if (!(theta >= 0.0 && theta <= 1.0))
        throw ConfigError("majorant: theta must lie in [0, 1], got " + fmt(theta));
    if (tau_samples < 2) throw ConfigError("majorant: tau_samples must be >= 2");
    if (strip_samples < 1 || strip_samples % 2 == 0)
        throw ConfigError("majorant: strip_samples must be odd and >= 1");
}

// --- SymbolSeries basics ------------------------------------------------------

SymbolSeries SymbolSeries::zero(const GridSpec& g, int J, int nt, double s0_used) {
    g.validate();
    if (J < 0) throw ConfigError("symbol series: order must be >= 0");
    if (nt < 1) throw ConfigError("symbol series: need at least one time slice");
    if (nt > 1 && !(s0_used > 0.0))
        throw ConfigError("symbol series: positive time radius required for nt > 1");
    SymbolSeries b;
    b.grid = g;
    b.J = J;
    b.nt = nt;
    b.s0_used = nt > 1 ? s0_used : 0.0;
    b.coeff.assign((std::size_t)J + 1,
                   std::vector<cplx>((std::size_t)nt * g.total(), cplx(0.0, 0.0)));
    return b;
}

Field SymbolSeries::slice_field(int j, int i) const {
    Field f(grid);
    const cplx* src = slice(j, i);
    std::copy(src, src + grid.total(), f.v.begin());
    return f;
}

void SymbolSeries::set_slice(int j, int i, const Field& f) {
    if (!(f.grid == grid)) throw ConfigError("symbol series: slice grid mismatch");
    std::copy(f.v.begin(), f.v.end(), slice(j, i));
}

bool SymbolSeries::layout_matches(const SymbolSeries& o) const {
    return grid == o.grid && nt == o.nt && std::abs(s0_used - o.s0_used) < 1e-15;
}

static void require_layout(const SymbolSeries& a, const SymbolSeries& b, const char* who) {
    if (!a.layout_matches(b))
        throw ConfigError(std::string(who) + ": series grid/time layouts differ");
}

// --- weight -------------------------------------------------------------------

cplx weight(const std::vector<cplx>& z) {
    if (z.empty() || z.size() > 3)
        throw ConfigError("weight: argument dimension must be 1..3");
    cplx z2(0.0, 0.0);
    for (const cplx& za : z) {
        if (!(std::abs(za.imag()) < 0.5))
            throw ConfigError("weight: |Im z| must be < 1/2 per component");
        z2 += za * za;
    }
    return std::exp(std::sqrt(cplx(1.0, 0.0) + z2));
}

// |W(x + i y)| over the grid nodes for a fixed imaginary shift y, cached:
// the norm sweep revisits the same handful of shifts for every slice.
static const std::vector<double>& weight_table(const GridSpec& g,
                                               const std::array<double, 3>& y) {
    using Key = std::tuple<int, int, double, double, double, double>;
    static std::map<Key, std::vector<double>> cache;
    static std::mutex mtx;
    const Key key{g.d, g.n, g.L, y[0], y[1], y[2]};
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<double> tab(g.total());
    for (std::size_t i = 0; i < tab.size(); ++i) {
        const auto idx = decode_index(g, i);
        cplx z2(0.0, 0.0);
        for (int a = 0; a < g.d; ++a) {
            const cplx za(g.coord(idx[a]), y[a]);
            z2 += za * za;
        }
        tab[i] = std::exp(std::sqrt(cplx(1.0, 0.0) + z2).real());
    }
    return cache.emplace(key, std::move(tab)).first->second;
}

// --- series arithmetic --------------------------------------------------------

SymbolSeries series_add(const SymbolSeries& a, const SymbolSeries& b) {
    require_layout(a, b, "series_add");
    SymbolSeries out = SymbolSeries::zero(a.grid, std::max(a.J, b.J), a.nt, a.s0_used);
    for (int j = 0; j <= out.J; ++j) {
        if (j <= a.J) out.coeff[j] = a.coeff[j];
        if (j <= b.J)
            kernels::caxpy(out.coeff[j].size(), out.coeff[j].data(), cplx(1.0, 0.0),
                           b.coeff[j].data());
    }
    return out;
}

SymbolSeries series_sub(const SymbolSeries& a, const SymbolSeries& b) {
    return series_add(a, series_scale(b, cplx(-1.0, 0.0)));
}

SymbolSeries series_scale(const SymbolSeries& a, cplx c) {
    SymbolSeries out = a;
    for (auto& cj : out.coeff) kernels::cscale(cj.size(), cj.data(), c);
    return out;
}

SymbolSeries upshift(const SymbolSeries& b, int j_cap) {
    const int J = std::min(b.J + 1, j_cap);
    SymbolSeries out = SymbolSeries::zero(b.grid, J, b.nt, b.s0_used);
    for (int j = 1; j <= J; ++j) out.coeff[j] = b.coeff[j - 1];
    return out;
}

SymbolSeries downshift(const SymbolSeries& b) {
    SymbolSeries out = SymbolSeries::zero(b.grid, std::max(b.J - 1, 0), b.nt, b.s0_used);
    for (int j = 0; j + 1 <= b.J; ++j) out.coeff[j] = b.coeff[j + 1];
    return out;
}

SymbolSeries symbol_conj(const SymbolSeries& b) {
    SymbolSeries out = b;
    for (auto& cj : out.coeff)
        for (cplx& v : cj) v = std::conj(v);
    return out;
}

SymbolSeries symbol_product(const SymbolSeries& a, const SymbolSeries& b, int j_cap) {
    require_layout(a, b, "symbol_product");
    const int J = std::min(a.J + b.J, j_cap);
    SymbolSeries out = SymbolSeries::zero(a.grid, J, a.nt, a.s0_used);
    const std::size_t tot = a.grid.total();
    for (int i = 0; i < a.nt; ++i) {
        for (int j = 0; j <= J; ++j) {
            cplx* acc = out.slice(j, i);
            for (int k = std::max(0, j - b.J); k <= std::min(j, a.J); ++k) {
                const Field prod = multiply(a.slice_field(k, i), b.slice_field(j - k, i));
                kernels::caxpy(tot, acc, cplx(1.0, 0.0), prod.v.data());
            }
        }
    }
    return out;
}

SymbolSeries series_derivative(const SymbolSeries& b, int axis) {
    SymbolSeries out = b;
    for (int j = 0; j <= b.J; ++j)
        for (int i = 0; i < b.nt; ++i)
            out.set_slice(j, i, derivative(b.slice_field(j, i), axis));
    return out;
}

SymbolSeries series_laplacian(const SymbolSeries& b) {
    SymbolSeries out = b;
    for (int j = 0; j <= b.J; ++j)
        for (int i = 0; i < b.nt; ++i)
            out.set_slice(j, i, laplacian(b.slice_field(j, i)));
    return out;
}

SymbolSeries time_antiderivative(const SymbolSeries& b) {
    if (b.nt < 2)
        throw ConfigError("time_antiderivative: need at least two time slices");
    SymbolSeries out = SymbolSeries::zero(b.grid, b.J, b.nt, b.s0_used);
    const std::size_t tot = b.grid.total();
    const double half = 0.5 * b.ds();
    for (int j = 0; j <= b.J; ++j) {
        for (int i = 1; i < b.nt; ++i) {
            const cplx* prev = out.slice(j, i - 1);
            const cplx* fa = b.slice(j, i - 1);
            const cplx* fb = b.slice(j, i);
            cplx* dst = out.slice(j, i);
            for (std::size_t m = 0; m < tot; ++m) dst[m] = prev[m] + half * (fa[m] + fb[m]);
        }
    }
    return out;
}

std::vector<Field> evaluate_series(const SymbolSeries& b, double h) {
    std::vector<Field> out;
    out.reserve(b.nt);
    for (int i = 0; i < b.nt; ++i) {
        Field f = b.slice_field(0, i);
        double hj = 1.0;
        for (int j = 1; j <= b.J; ++j) {
            hj *= h;
            kernels::caxpy(f.size(), f.v.data(), cplx(hj, 0.0), b.slice(j, i));
        }
        out.push_back(std::move(f));
    }
    return out;
}

// --- majorant norm ------------------------------------------------------------

// Imaginary shifts for one tau: per-axis values width * m / (halfM + 1),
// m = -halfM..halfM, tensored over the axes and kept when |y| < width.
static std::vector<std::array<double, 3>> strip_grid(int d, double width, int halfM) {
    std::vector<double> axis;
    for (int m = -halfM; m <= halfM; ++m) axis.push_back(width * m / (halfM + 1));
    std::vector<std::array<double, 3>> out;
    const int count = (int)axis.size();
    int reps = 1;
    for (int a = 0; a < d; ++a) reps *= count;
    for (int r = 0; r < reps; ++r) {
        std::array<double, 3> y{0.0, 0.0, 0.0};
        int q = r;
        double norm2 = 0.0;
        for (int a = 0; a < d; ++a) {
            y[a] = axis[q % count];
            norm2 += y[a] * y[a];
            q /= count;
        }
        if (d == 1 || norm2 < width * width) out.push_back(y);
    }
    return out;
}

double majorant_norm(const SymbolSeries& b, const MajorantParams& mp, double theta) {
    mp.validate();
    if (!(theta >= 0.0 && theta <= 1.0))
        throw ConfigError("majorant_norm: theta must lie in [0, 1]");
    const double coverage = mp.s0 * (1.0 - 1.0 / mp.tau_samples);
    if (b.s0_used + 1e-12 < coverage)
        throw ConfigError("majorant_norm: series covers s <= " + fmt(b.s0_used) +
                          " but the tau grid needs " + fmt(coverage));
    const std::size_t tot = b.grid.total();
    const int halfM = (mp.strip_samples - 1) / 2;
    const int T = mp.tau_samples;

    // per-tau shift grids, built once
    std::vector<std::vector<std::array<double, 3>>> shifts((std::size_t)T);
    for (int t = 0; t < T; ++t) {
        const double tau = (t + 0.5) / T;
        shifts[t] = strip_grid(b.grid.d, mp.l * tau, halfM);
        for (const auto& y : shifts[t])
            for (int a = 0; a < b.grid.d; ++a)
                if (std::abs(y[a]) * b.grid.xi_max() > 700.0)
                    throw RuntimeAbort("majorant_norm: strip shift would overflow");
    }

    std::vector<double> best((std::size_t)b.J + 1, 0.0);
    std::vector<cplx> shifted(tot);
    for (int j = 0; j <= b.J; ++j) {
        for (int i = 0; i < b.nt; ++i) {
            if (kernels::max_abs(tot, b.slice(j, i)) == 0.0) continue;
            const std::vector<cplx> spec = spectrum(b.slice_field(j, i));
            const double s = b.s_at(i);
            for (int t = 0; t < T; ++t) {
                const double tau = (t + 0.5) / T;
                const double bracket = 1.0 - tau - s / mp.s0;
                if (bracket <= 0.0) continue;
                const double wpow = std::pow(bracket, j + theta);
                for (const auto& y : shifts[t]) {
                    // evaluate the interpolant on the shifted line
                    for (std::size_t m = 0; m < tot; ++m) {
                        const auto idx = decode_index(b.grid, m);
                        double dot = 0.0;
                        for (int a = 0; a < b.grid.d; ++a) dot += y[a] * b.grid.xi(idx[a]);
                        shifted[m] = spec[m] * std::exp(-dot);
                    }
                    const Field line = from_spectrum(b.grid, shifted);
                    const std::vector<double>& wt = weight_table(b.grid, y);
                    double sup = 0.0;
                    for (std::size_t m = 0; m < tot; ++m)
                        sup = std::max(sup, std::abs(line[m]) * wt[m]);
                    best[(std::size_t)j] = std::max(best[(std::size_t)j], sup * wpow);
                }
            }
        }
    }

    double out = 0.0, epsj = 1.0, fact = 1.0;
    for (int j = 0; j <= b.J; ++j) {
        if (j > 0) {
            epsj *= mp.eps;
            fact *= j;
        }
        out += epsj / fact * best[(std::size_t)j];
    }
    return out;
}

// --- inequality checks --------------------------------------------------------

static RatioResult make_ratio(double num, double den) {
    RatioResult r;
    if (den < 1e-300) {
        r.vacuous = true;
        return r;
    }
    r.ratio = num / den;
    return r;
}

RatioResult check_product_inequality(const SymbolSeries& b1, const SymbolSeries& b2,
                                     const MajorantParams& mp, double theta) {
    const SymbolSeries prod = symbol_product(b1, b2, b1.J + b2.J);
    const double num = majorant_norm(prod, mp, theta);
    const double den = majorant_norm(b1, mp, 0.0) * majorant_norm(b2, mp, theta);
    return make_ratio(num, den);
}

SmoothingReport check_smoothing_inequalities(const SymbolSeries& b, const MajorantParams& mp) {
    SmoothingReport rep;
    const double nb1 = majorant_norm(b, mp, 1.0);
    const double den = mp.s0 * nb1;

    double grad_num = 0.0;
    for (int a = 0; a < b.grid.d; ++a)
        grad_num = std::max(
            grad_num, majorant_norm(time_antiderivative(series_derivative(b, a)), mp, 1.0));
    rep.anti_grad = make_ratio(grad_num, den);

    // h Lap b and (b - b_0)/h act on the coefficient list as exact shifts
    rep.anti_hlap =
        make_ratio(majorant_norm(time_antiderivative(upshift(series_laplacian(b), b.J + 1)),
                                 mp, 1.0),
                   den);
    rep.anti_hdiff =
        make_ratio(majorant_norm(time_antiderivative(downshift(b)), mp, 1.0), den);

    const SymbolSeries anti = time_antiderivative(b);
    rep.anti_half = make_ratio(majorant_norm(anti, mp, 0.5), den);
    rep.anti_one = make_ratio(majorant_norm(anti, mp, 1.0), den);
    rep.anti_double =
        make_ratio(majorant_norm(time_antiderivative(anti), mp, 0.0), den);
    return rep;
}

RatioResult check_composition_inequality(const SymbolSeries& b1, const SymbolSeries& b2,
                                         const MajorantParams& mp) {
    const SymbolSeries p =
        symbol_product(time_antiderivative(b1), time_antiderivative(b2), b1.J + b2.J);
    const double num = majorant_norm(p, mp, 1.0);
    const double den =
        mp.s0 * mp.s0 * majorant_norm(b1, mp, 1.0) * majorant_norm(b2, mp, 1.0);
    return make_ratio(num, den);
}

// --- corpus -------------------------------------------------------------------

SymbolSeries make_corpus_symbol(const GridSpec& g, RandomStream& rs, int nt, double s0,
                                int kmax, double decay) {
    SymbolSeries b = SymbolSeries::zero(g, 1, nt, s0);
    for (int j = 0; j <= 1; ++j) {
        const Field base = random_band_limited(g, rs, kmax, decay);
        const double q = rs.uniform(-3.0, 3.0);   // time oscillation rate
        const double mu = rs.uniform(0.0, 2.0);   // time damping rate
        for (int i = 0; i < nt; ++i) {
            const cplx env = std::exp(cplx(-mu, q) * b.s_at(i));
            Field f = base;
            kernels::cscale(f.size(), f.v.data(), env);
            b.set_slice(j, i, f);
        }
    }
    return b;
}

void InequalityStats::absorb(const RatioResult& r) {
    if (r.vacuous) return;
    ratio_max = std::max(ratio_max, r.ratio);
    ratio_mean += r.ratio;  // running sum; divided by samples at the end
    ++samples;
}

static void finalize(InequalityStats& s) {
    if (s.samples > 0) s.ratio_mean /= s.samples;
}

CorpusReport run_norm_corpus(std::uint64_t seed, int count, const GridSpec& g,
                             const MajorantParams& mp, double h) {
    mp.validate();
    g.validate();
    if (count < 1) throw ConfigError("norm corpus: count must be >= 1");
    if (!(h > 0.0 && h < mp.eps))
        throw ConfigError("norm corpus: h must lie in (0, eps), got " + fmt(h));

    constexpr int corpus_nt = 9;
    constexpr int corpus_kmax = 6;
    constexpr double corpus_decay = 0.6;

    CorpusReport rep;
    rep.seed = seed;
    rep.count = count;
    rep.h = h;
    rep.mp = mp;

    RandomStream rs(seed);
    std::vector<SymbolSeries> corpus;
    corpus.reserve((std::size_t)count);
    for (int i = 0; i < count; ++i)
        corpus.push_back(make_corpus_symbol(g, rs, corpus_nt, mp.s0, corpus_kmax,
                                            corpus_decay));

    for (const SymbolSeries& b : corpus) {
        const SmoothingReport s = check_smoothing_inequalities(b, mp);
        rep.anti_grad.absorb(s.anti_grad);
        rep.anti_hlap.absorb(s.anti_hlap);
        rep.anti_hdiff.absorb(s.anti_hdiff);
        rep.anti_half.absorb(s.anti_half);
        rep.anti_one.absorb(s.anti_one);
        rep.anti_double.absorb(s.anti_double);
    }
    for (int i = 0; i + 1 < count; i += 2) {
        rep.product.absorb(
            check_product_inequality(corpus[i], corpus[i + 1], mp, mp.theta));
        rep.compose.absorb(check_composition_inequality(corpus[i], corpus[i + 1], mp));
    }

    finalize(rep.product);
    finalize(rep.anti_grad);
    finalize(rep.anti_hlap);
    finalize(rep.anti_hdiff);
    finalize(rep.anti_half);
    finalize(rep.anti_one);
    finalize(rep.anti_double);
    finalize(rep.compose);
    return rep;
}

// --- Picard fixed point -------------------------------------------------------

namespace {

// f(a) = (a conj(a))^{(p-1)/2} as a series product, truncated at `cap`
SymbolSeries f_of(const SymbolSeries& a, int p, int cap) {
    const int m = (p - 1) / 2;
    const SymbolSeries g = symbol_product(a, symbol_conj(a), cap);
    SymbolSeries out = g;
    for (int k = 1; k < m; ++k) out = symbol_product(out, g, cap);
    return out;
}

// d/ds f(a) by the chain rule: m (a conj a)^{m-1} (da conj a + a conj da)
SymbolSeries df_of(const SymbolSeries& a, const SymbolSeries& da, int p, int cap) {
    const int m = (p - 1) / 2;
    SymbolSeries t = series_add(symbol_product(da, symbol_conj(a), cap),
                                symbol_product(a, symbol_conj(da), cap));
    if (m == 1) return t;
    const SymbolSeries g = symbol_product(a, symbol_conj(a), cap);
    SymbolSeries gp = g;
    for (int k = 2; k < m; ++k) gp = symbol_product(gp, g, cap);
    return series_scale(symbol_product(gp, t, cap), cplx((double)m, 0.0));
}

SymbolSeries truncate_order(const SymbolSeries& b, int J) {
    SymbolSeries out = SymbolSeries::zero(b.grid, J, b.nt, b.s0_used);
    for (int j = 0; j <= std::min(J, b.J); ++j) out.coeff[j] = b.coeff[j];
    return out;
}

SymbolSeries constant_in_time(const SymbolSeries& slice0, int nt, double s0) {
    SymbolSeries out = SymbolSeries::zero(slice0.grid, slice0.J, nt, s0);
    for (int j = 0; j <= slice0.J; ++j)
        for (int i = 0; i < nt; ++i)
            std::copy(slice0.slice(j, 0), slice0.slice(j, 0) + slice0.grid.total(),
                      out.slice(j, i));
    return out;
}

// s |-> s * X for a time-independent slice X
SymbolSeries ramp_in_time(const SymbolSeries& slice0, int nt, double s0) {
    SymbolSeries out = constant_in_time(slice0, nt, s0);
    for (int j = 0; j <= out.J; ++j)
        for (int i = 0; i < nt; ++i)
            kernels::cscale(out.grid.total(), out.slice(j, i), cplx(out.s_at(i), 0.0));
    return out;
}

SymbolSeries wrap_field(const Field& f) {
    SymbolSeries b = SymbolSeries::zero(f.grid, 0, 1, 0.0);
    b.set_slice(0, 0, f);
    return b;
}

// zero-mean potential S with grad S = phi (curl-free) via the spectrum
Field potential_of(const std::vector<Field>& phi) {
    const GridSpec& g = phi[0].grid;
    std::vector<std::vector<cplx>> sp;
    sp.reserve(phi.size());
    for (const Field& f : phi) sp.push_back(spectrum(f));
    std::vector<cplx> out(g.total(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto idx = decode_index(g, i);
        double xi2 = 0.0;
        cplx acc(0.0, 0.0);
        for (int a = 0; a < g.d; ++a) {
            const double xia = g.xi(idx[a]);
            xi2 += xia * xia;
            acc += cplx(0.0, -xia) * sp[(std::size_t)a][i];
        }
        if (xi2 > 0.0) out[i] = acc / xi2;
    }
    return from_spectrum(g, out);
}

struct PicardWork {
    std::vector<SymbolSeries> dphi, phi;  // one J=0 series per axis
    SymbolSeries da, a;
};

// reconstruct (phi, dphi, a, da) from u = (u1, u2) and the initial slices
PicardWork reconstruct(const std::vector<SymbolSeries>& u1, const SymbolSeries& u2,
                       const std::vector<SymbolSeries>& phi0,
                       const std::vector<SymbolSeries>& dphi0, const SymbolSeries& a0,
                       const SymbolSeries& da0, int nt, double s0) {
    PicardWork w;
    const std::size_t d = u1.size();
    w.dphi.reserve(d);
    w.phi.reserve(d);
    for (std::size_t k = 0; k < d; ++k) {
        const SymbolSeries anti = time_antiderivative(u1[k]);
        w.dphi.push_back(series_add(anti, constant_in_time(dphi0[k], nt, s0)));
        w.phi.push_back(series_add(
            time_antiderivative(anti),
            series_add(ramp_in_time(dphi0[k], nt, s0), constant_in_time(phi0[k], nt, s0))));
    }
    const SymbolSeries anti2 = time_antiderivative(u2);
    w.da = series_add(anti2, constant_in_time(da0, nt, s0));
    w.a = series_add(time_antiderivative(anti2),
                     series_add(ramp_in_time(da0, nt, s0), constant_in_time(a0, nt, s0)));
    return w;
}

}  // namespace

PicardResult picard_solve(const std::vector<Field>& phi0_f, const SymbolSeries& a0,
                          const MajorantParams& mp, int p, double omega, double h,
                          const PicardOptions& opt) {
    mp.validate();
    if (p < 3 || p % 2 == 0) throw ConfigError("picard: p must be an odd integer >= 3");
    if (!(h > 0.0 && h < mp.eps)) throw ConfigError("picard: h must lie in (0, eps)");
    if (opt.iters < 1 || opt.nt < 3) throw ConfigError("picard: need iters >= 1, nt >= 3");
    if (a0.nt != 1) throw ConfigError("picard: a0 must be a single-slice initial series");
    const GridSpec g = a0.grid;
    if (phi0_f.size() != (std::size_t)g.d)
        throw ConfigError("picard: phi0 needs one component per axis");
    for (const Field& f : phi0_f) {
        if (!(f.grid == g)) throw ConfigError("picard: phi0 grid mismatch");
        double im = 0.0, mean_re = 0.0, mean_im = 0.0, mx = 0.0;
        for (const cplx& v : f.v) {
            im = std::max(im, std::abs(v.imag()));
            mx = std::max(mx, std::abs(v));
            mean_re += v.real();
            mean_im += v.imag();
        }
        if (im > 1e-8 * (1.0 + mx))
            throw ConfigError("picard: phi0 must be real (gradient of a real phase)");
        if (std::hypot(mean_re, mean_im) > 1e-10 * (1.0 + mx) * (double)f.size())
            throw ConfigError("picard: phi0 must have zero mean per component");
    }
    // curl-free check (spectral): d_a phi_b == d_b phi_a
    for (int a = 0; a < g.d; ++a)
        for (int b2 = a + 1; b2 < g.d; ++b2) {
            const Field ra = derivative(phi0_f[(std::size_t)b2], a);
            const Field rb = derivative(phi0_f[(std::size_t)a], b2);
            double diff = 0.0, mx = 0.0;
            for (std::size_t i = 0; i < ra.size(); ++i) {
                diff = std::max(diff, std::abs(ra[i] - rb[i]));
                mx = std::max(mx, std::abs(ra[i]));
            }
            if (diff > 1e-8 * (1.0 + mx))
                throw ConfigError("picard: phi0 is not curl-free");
        }

    const int nt = opt.nt;
    const double s0 = mp.s0;
    const int Ja = a0.J;
    const int cap = std::max(opt.j_cap, Ja + 1);  // keep the j+1 term for downshift

    // initial slices, all at s = 0
    std::vector<SymbolSeries> phi0(g.d, SymbolSeries::zero(g, 0, 1, 0.0));
    for (int a = 0; a < g.d; ++a) phi0[(std::size_t)a] = wrap_field(phi0_f[(std::size_t)a]);

    // d/ds phi(0) = -2 sum_k phi_k d_k phi - omega grad f(a_0), at s = 0
    const SymbolSeries fa0_init =
        f_of(truncate_order(a0, 0), p, 0);  // (a_0 conj a_0)^{(p-1)/2}, one slice
    std::vector<SymbolSeries> dphi0;
    for (int a = 0; a < g.d; ++a) {
        SymbolSeries acc = series_scale(series_derivative(fa0_init, a), cplx(-omega, 0.0));
        for (int k = 0; k < g.d; ++k)
            acc = series_add(acc, series_scale(symbol_product(phi0[(std::size_t)k],
                                                              series_derivative(
                                                                  phi0[(std::size_t)a], k),
                                                              0),
                                               cplx(-2.0, 0.0)));
        dphi0.push_back(acc);
    }

    // d/ds a(0) from the amplitude equation at s = 0
    SymbolSeries da0 = series_scale(upshift(series_laplacian(a0), Ja), cplx(0.0, 1.0));
    for (int k = 0; k < g.d; ++k) {
        da0 = series_add(da0, series_scale(symbol_product(phi0[(std::size_t)k],
                                                          series_derivative(a0, k), Ja),
                                           cplx(-2.0, 0.0)));
        da0 = series_add(
            da0, series_scale(symbol_product(series_derivative(phi0[(std::size_t)k], k), a0,
                                             Ja),
                              cplx(-1.0, 0.0)));
    }
    da0 = series_add(da0, series_scale(symbol_product(a0, downshift(f_of(a0, p, cap)), Ja),
                                       cplx(0.0, -omega)));

    // Picard iteration on u = (d2/ds2 phi, d2/ds2 a), starting from u = 0
    std::vector<SymbolSeries> u1(g.d, SymbolSeries::zero(g, 0, nt, s0));
    SymbolSeries u2 = SymbolSeries::zero(g, Ja, nt, s0);

    PicardResult res;
    int rising = 0;
    for (int it = 0; it < opt.iters; ++it) {
        const PicardWork w = reconstruct(u1, u2, phi0, dphi0, a0, da0, nt, s0);

        const SymbolSeries fa = f_of(w.a, p, cap);
        const SymbolSeries dfa = df_of(w.a, w.da, p, cap);
        const SymbolSeries G = downshift(fa);    // (f(a) - f(a_0)) / h
        const SymbolSeries dG = downshift(dfa);  // d/ds of the same
        const SymbolSeries dfa0 = truncate_order(dfa, 0);

        std::vector<SymbolSeries> nu1;
        nu1.reserve((std::size_t)g.d);
        for (int a = 0; a < g.d; ++a) {
            SymbolSeries acc =
                series_scale(series_derivative(dfa0, a), cplx(-omega, 0.0));
            for (int k = 0; k < g.d; ++k) {
                acc = series_add(
                    acc, series_scale(symbol_product(w.dphi[(std::size_t)k],
                                                     series_derivative(
                                                         w.phi[(std::size_t)a], k),
                                                     0),
                                      cplx(-2.0, 0.0)));
                acc = series_add(
                    acc, series_scale(symbol_product(w.phi[(std::size_t)k],
                                                     series_derivative(
                                                         w.dphi[(std::size_t)a], k),
                                                     0),
                                      cplx(-2.0, 0.0)));
            }
            nu1.push_back(std::move(acc));
        }

        SymbolSeries nu2 =
            series_scale(upshift(series_laplacian(w.da), Ja), cplx(0.0, 1.0));
        for (int k = 0; k < g.d; ++k) {
            nu2 = series_add(
                nu2, series_scale(symbol_product(w.dphi[(std::size_t)k],
                                                 series_derivative(w.a, k), Ja),
                                  cplx(-2.0, 0.0)));
            nu2 = series_add(
                nu2, series_scale(symbol_product(w.phi[(std::size_t)k],
                                                 series_derivative(w.da, k), Ja),
                                  cplx(-2.0, 0.0)));
            nu2 = series_add(
                nu2,
                series_scale(symbol_product(w.a,
                                            series_derivative(w.dphi[(std::size_t)k], k),
                                            Ja),
                             cplx(-1.0, 0.0)));
            nu2 = series_add(
                nu2,
                series_scale(symbol_product(w.da,
                                            series_derivative(w.phi[(std::size_t)k], k),
                                            Ja),
                             cplx(-1.0, 0.0)));
        }
        nu2 = series_add(nu2, series_scale(symbol_product(w.da, G, Ja), cplx(0.0, -omega)));
        nu2 = series_add(nu2, series_scale(symbol_product(w.a, dG, Ja), cplx(0.0, -omega)));

        double dist = majorant_norm(series_sub(nu2, u2), mp, 1.0);
        for (int a = 0; a < g.d; ++a)
            dist += majorant_norm(series_sub(nu1[(std::size_t)a], u1[(std::size_t)a]), mp,
                                  1.0);
        res.distances.push_back(dist);
        if (res.distances.size() >= 2) {
            const double prev = res.distances[res.distances.size() - 2];
            if (prev > 0.0) {
                const double ratio = dist / prev;
                res.contraction_ratios.push_back(ratio);
                rising = ratio > 1.0 ? rising + 1 : 0;
                if (rising >= 3)
                    throw RuntimeAbort("picard: iteration diverges at s0 = " + fmt(s0));
            }
        }
        u1 = std::move(nu1);
        u2 = std::move(nu2);
        if (dist == 0.0) break;  // exact fixed point (zero or homogeneous data)
    }

    // final reconstruction and the phase: S = S0 - ds^{-1}(phi.phi + omega f(a_0))
    const PicardWork w = reconstruct(u1, u2, phi0, dphi0, a0, da0, nt, s0);
    SymbolSeries hj = symbol_product(w.phi[0], w.phi[0], 0);
    for (int k = 1; k < g.d; ++k)
        hj = series_add(hj, symbol_product(w.phi[(std::size_t)k], w.phi[(std::size_t)k], 0));
    hj = series_add(hj, series_scale(f_of(truncate_order(w.a, 0), p, 0), cplx(omega, 0.0)));
    const SymbolSeries Sdrop = time_antiderivative(hj);
    const Field S0 = potential_of(phi0_f);

    res.phi.resize((std::size_t)nt);
    res.S.reserve((std::size_t)nt);
    for (int i = 0; i < nt; ++i) {
        for (int a = 0; a < g.d; ++a)
            res.phi[(std::size_t)i].push_back(w.phi[(std::size_t)a].slice_field(0, i));
        Field Si = S0;
        kernels::caxpy(Si.size(), Si.v.data(), cplx(-1.0, 0.0), Sdrop.slice(0, i));
        res.S.push_back(std::move(Si));
    }
    res.a = w.a;
    return res;
}

}  // namespace nlslab
