#include "nlslab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "nlslab/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "field serialization assumes a little-endian host");

namespace nlslab {

void GridSpec::validate() const {
    if (d < 1 || d > 3) throw ConfigError("grid: d must be 1, 2 or 3");
    if (n < 8) throw ConfigError("grid: n_points must be >= 8");
    if (n % 2 != 0) throw ConfigError("grid: n_points must be even (symmetric spectrum)");
    int m = n;
    for (int f : {2, 3, 5, 7})
        while (m % f == 0) m /= f;
    if (m != 1) throw ConfigError("grid: n_points must factor into 2/3/5/7 (FFT efficiency)");
    if (!(L > 0.0)) throw ConfigError("grid: L must be positive");
}

// --- FFT engine --------------------------------------------------------------
// One in-place c2c plan pair per (d, n), cached per thread.  FFTW's planner
// is not thread-safe, so plan creation/destruction is serialized; execution
// on the plan's own buffer is thread-private.  FFTW_ESTIMATE keeps the plan
// choice (and hence the exact arithmetic) independent of timing noise.
namespace {

std::mutex g_planner_mutex;

struct PlanSet {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::size_t n_total = 0;

    PlanSet(int d, int n) {
        n_total = 1;
        for (int a = 0; a < d; ++a) n_total *= (std::size_t)n;
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        buf = fftw_alloc_complex(n_total);
        int dims[3] = {n, n, n};
        fwd = fftw_plan_dft(d, dims, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft(d, dims, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~PlanSet() {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (buf) fftw_free(buf);
    }
    PlanSet(const PlanSet&) = delete;
    PlanSet& operator=(const PlanSet&) = delete;
};

PlanSet& plans_for(const GridSpec& g) {
    thread_local std::map<std::pair<int, int>, std::unique_ptr<PlanSet>> cache;
    auto key = std::make_pair(g.d, g.n);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<PlanSet>(g.d, g.n)).first;
    return *it->second;
}

// out = DFT(in) (sign FFTW_FORWARD) or unnormalized inverse (FFTW_BACKWARD).
void dft(const GridSpec& g, const cplx* in, cplx* out, int sign) {
    PlanSet& ps = plans_for(g);
    std::memcpy(ps.buf, in, sizeof(cplx) * ps.n_total);
    fftw_execute(sign == FFTW_FORWARD ? ps.fwd : ps.bwd);
    std::memcpy(out, ps.buf, sizeof(cplx) * ps.n_total);
}

}  // namespace

Field sample(const GridSpec& g, const std::function<cplx(const std::array<double, 3>&)>& f) {
    g.validate();
    Field out(g);
    const std::size_t N = g.total();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        std::array<double, 3> z{0.0, 0.0, 0.0};
        for (int a = 0; a < g.d; ++a) z[a] = g.coord(idx[a]);
        out[i] = f(z);
    }
    return out;
}

std::vector<cplx> spectrum(const Field& f) {
    std::vector<cplx> c(f.size());
    dft(f.grid, f.v.data(), c.data(), FFTW_FORWARD);
    const cplx scale(1.0 / (double)f.size(), 0.0);
    kernels::cscale(c.size(), c.data(), scale);
    return c;
}

Field from_spectrum(const GridSpec& g, const std::vector<cplx>& coef) {
    if (coef.size() != g.total()) throw ConfigError("from_spectrum: size mismatch");
    Field out(g);
    dft(g, coef.data(), out.v.data(), FFTW_BACKWARD);
    return out;
}

Field fourier_multiplier(const Field& f,
                         const std::function<cplx(const std::array<double, 3>&)>& m) {
    std::vector<cplx> c = spectrum(f);
    const GridSpec& g = f.grid;
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        std::array<double, 3> xi{0.0, 0.0, 0.0};
        for (int a = 0; a < g.d; ++a) xi[a] = g.xi(idx[a]);
        c[i] *= m(xi);
    }
    return from_spectrum(g, c);
}

Field derivative(const Field& f, int axis) {
    if (axis < 0 || axis >= f.grid.d) throw ConfigError("derivative: bad axis");
    const GridSpec& g = f.grid;
    std::vector<cplx> c = spectrum(f);
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        // the unpaired Nyquist mode has no faithful first derivative; drop it
        if (idx[axis] == g.n / 2)
            c[i] = 0.0;
        else
            c[i] *= cplx(0.0, g.xi(idx[axis]));
    }
    return from_spectrum(g, c);
}

Field laplacian(const Field& f) {
    const GridSpec& g = f.grid;
    std::vector<cplx> c = spectrum(f);
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        double xi2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            const double x = g.xi(idx[a]);
            xi2 += x * x;
        }
        c[i] *= -xi2;
    }
    return from_spectrum(g, c);
}

double sobolev_norm(const Field& f, double s, double mu) {
    const GridSpec& g = f.grid;
    std::vector<cplx> c = spectrum(f);
    const double mu2 = mu * mu;
    const std::size_t N = c.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        double xi2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            const double x = g.xi(idx[a]);
            xi2 += x * x;
        }
        const double w = (s == 0.0) ? 1.0 : std::pow(1.0 + mu2 * xi2, s);
        sum += w * std::norm(c[i]);
    }
    double box = 1.0;
    for (int a = 0; a < g.d; ++a) box *= 2.0 * g.L;
    return std::sqrt(box * sum);
}

double lebesgue_norm(const Field& f, double q) {
    if (!(q >= 1.0)) throw ConfigError("lebesgue_norm: q must be >= 1");
    const double cell = std::pow(f.grid.dx(), f.grid.d);
    const double s = kernels::sum_abspow(f.size(), f.v.data(), q);
    return std::pow(cell * s, 1.0 / q);
}

double sup_norm(const Field& f) { return kernels::max_abs(f.size(), f.v.data()); }

double dirichlet_integral(const Field& f) {
    const GridSpec& g = f.grid;
    std::vector<cplx> c = spectrum(f);
    const std::size_t N = c.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        double xi2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            const double x = g.xi(idx[a]);
            xi2 += x * x;
        }
        sum += xi2 * std::norm(c[i]);
    }
    double box = 1.0;
    for (int a = 0; a < g.d; ++a) box *= 2.0 * g.L;
    return box * sum;
}

Field strip_shift(const Field& f, const std::array<double, 3>& y) {
    const GridSpec& g = f.grid;
    for (int a = 0; a < g.d; ++a)
        if (std::abs(y[a]) * g.xi_max() > 700.0)
            throw ConfigError("strip_shift: |Im z| * xi_max exceeds exp range (700)");
    std::vector<cplx> c = spectrum(f);
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        double yxi = 0.0;
        for (int a = 0; a < g.d; ++a) yxi += y[a] * g.xi(idx[a]);
        c[i] *= std::exp(-yxi);
    }
    return from_spectrum(g, c);
}

double tail_energy_fraction(const Field& f) {
    const GridSpec& g = f.grid;
    std::vector<cplx> c = spectrum(f);
    const int cut = g.n / 3;
    double tail = 0.0, tot = 0.0;
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        bool top = false;
        for (int a = 0; a < g.d; ++a)
            if (std::abs(g.freq(idx[a])) > cut) top = true;
        const double e = std::norm(c[i]);
        tot += e;
        if (top) tail += e;
    }
    return tot > 0.0 ? tail / tot : 0.0;
}

Field dealias(const Field& f) {
    const GridSpec& g = f.grid;
    std::vector<cplx> c = spectrum(f);
    const int cut = g.n / 3;
    const std::size_t N = c.size();
    for (std::size_t i = 0; i < N; ++i) {
        auto idx = decode_index(g, i);
        for (int a = 0; a < g.d; ++a)
            if (std::abs(g.freq(idx[a])) > cut) {
                c[i] = 0.0;
                break;
            }
    }
    return from_spectrum(g, c);
}

Field multiply(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw ConfigError("multiply: grid mismatch");
    const bool da = tail_energy_fraction(a) > dealias_threshold;
    const bool db = tail_energy_fraction(b) > dealias_threshold;
    const Field lhs = da ? dealias(a) : a;
    const Field rhs = db ? dealias(b) : b;
    Field r(a.grid);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = lhs[i] * rhs[i];
    if (da || db) r = dealias(r);
    return r;
}

Field conj_field(const Field& f) {
    Field out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::conj(f[i]);
    return out;
}

Field abs_power(const Field& f, int p) {
    if (p < 1 || p % 2 == 0) throw ConfigError("abs_power: p must be odd");
    Field out(f.grid);
    const int m = (p - 1) / 2;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a2 = std::norm(f[i]);
        double w = 1.0;
        for (int k = 0; k < m; ++k) w *= a2;
        out[i] = w;
    }
    if (tail_energy_fraction(f) > dealias_threshold) out = dealias(out);
    return out;
}

Field abs_power_times(const Field& f, int p) {
    Field w = abs_power(f, p);
    Field out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = w[i] * f[i];
    if (tail_energy_fraction(f) > dealias_threshold) out = dealias(out);
    return out;
}

bool all_finite(const Field& f) {
    for (const cplx& z : f.v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

// --- serialization -----------------------------------------------------------

void write_field(const Field& f, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw RuntimeAbort("write_field: cannot open " + path);
    const std::int64_t d = f.grid.d, n = f.grid.n;
    const double L = f.grid.L;
    std::fwrite(&d, sizeof d, 1, fp);
    std::fwrite(&n, sizeof n, 1, fp);
    std::fwrite(&L, sizeof L, 1, fp);
    std::fwrite(f.v.data(), sizeof(cplx), f.size(), fp);
    if (std::fclose(fp) != 0) throw RuntimeAbort("write_field: close failed for " + path);
}

Field read_field(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw ConfigError("read_field: cannot open " + path);
    std::int64_t d = 0, n = 0;
    double L = 0.0;
    if (std::fread(&d, sizeof d, 1, fp) != 1 || std::fread(&n, sizeof n, 1, fp) != 1 ||
        std::fread(&L, sizeof L, 1, fp) != 1) {
        std::fclose(fp);
        throw ConfigError("read_field: truncated header in " + path);
    }
    GridSpec g{(int)d, (int)n, L};
    try {
        g.validate();
    } catch (const ConfigError&) {
        std::fclose(fp);
        throw;
    }
    Field f(g);
    const std::size_t got = std::fread(f.v.data(), sizeof(cplx), f.size(), fp);
    std::fclose(fp);
    if (got != f.size()) throw ConfigError("read_field: truncated data in " + path);
    return f;
}

void write_field_csv(const Field& f, const std::string& path) {
    if (f.grid.d != 1) throw ConfigError("write_field_csv: d = 1 only");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw RuntimeAbort("write_field_csv: cannot open " + path);
    std::fprintf(fp, "z,re,im\n");
    for (int i = 0; i < f.grid.n; ++i)
        std::fprintf(fp, "%.17g,%.17g,%.17g\n", f.grid.coord(i), f[i].real(), f[i].imag());
    if (std::fclose(fp) != 0) throw RuntimeAbort("write_field_csv: close failed for " + path);
}

}  // namespace nlslab
