#pragma once

// Periodic pseudospectral grid on the box [-L, L)^d, d = 1..3.
//
// Fields are complex double arrays in row-major node order; the spectral
// side uses the FFT with wavenumbers xi_k = (pi/L) * k, k = -n/2+1 .. n/2
// per axis.  Fourier multipliers, scale-aware Sobolev norms, Lebesgue
// norms, analytic strip evaluation (spectral shift z -> z + i y) and a
// fixed binary serialization live here.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlslab/errors.hpp"

namespace nlslab {

using cplx = std::complex<double>;

struct GridSpec {
    int d = 1;        // spatial dimension, 1..3
    int n = 128;      // points per axis: even, >= 8, prime factors in {2,3,5,7}
    double L = 30.0;  // half box width; domain is [-L, L)^d

    void validate() const;  // throws ConfigError on violation

    std::size_t total() const {
        std::size_t t = 1;
        for (int a = 0; a < d; ++a) t *= (std::size_t)n;
        return t;
    }
    double dx() const { return 2.0 * L / n; }
    // node coordinate along one axis
    double coord(int i) const { return -L + i * dx(); }
    // signed integer frequency of FFT index k (Nyquist mapped to +n/2)
    int freq(int k) const { return k <= n / 2 ? k : k - n; }
    // wavenumber of FFT index k along one axis
    double xi(int k) const { return (3.14159265358979323846 / L) * freq(k); }
    double xi_max() const { return (3.14159265358979323846 / L) * (n / 2); }

    bool operator==(const GridSpec&) const = default;
};

struct Field {
    GridSpec grid;
    std::vector<cplx> v;

    Field() = default;
    explicit Field(const GridSpec& g) : grid(g), v(g.total()) {}

    cplx& operator[](std::size_t i) { return v[i]; }
    const cplx& operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

// Decode flat node index into per-axis FFT indices (unused axes -> 0).
inline std::array<int, 3> decode_index(const GridSpec& g, std::size_t flat) {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = g.d - 1; a >= 0; --a) {
        idx[a] = (int)(flat % (std::size_t)g.n);
        flat /= (std::size_t)g.n;
    }
    return idx;
}

// Sample a callable f(z) on the grid nodes.  Unused coordinates are 0.
Field sample(const GridSpec& g, const std::function<cplx(const std::array<double, 3>&)>& f);

// Fourier series coefficients c_xi (forward DFT / n^d), flat FFT index order.
std::vector<cplx> spectrum(const Field& f);
Field from_spectrum(const GridSpec& g, const std::vector<cplx>& coef);

// Apply the Fourier multiplier m(xi): transform, multiply, transform back.
Field fourier_multiplier(const Field& f,
                         const std::function<cplx(const std::array<double, 3>&)>& m);

// Spectral partial derivative along `axis` and Laplacian.
Field derivative(const Field& f, int axis);
Field laplacian(const Field& f);

// || (1 - mu^2 Lap)^{s/2} f ||_{L^2}: spectral sum with weight
// (1 + mu^2 |xi|^2)^s against |c_xi|^2 and the box Plancherel factor (2L)^d.
double sobolev_norm(const Field& f, double s, double mu);
// ( integral |f|^q )^{1/q} by the (exact for periodic trig) node quadrature.
double lebesgue_norm(const Field& f, double q);
double sup_norm(const Field& f);
// integral |grad f|^2 (spectral)
double dirichlet_integral(const Field& f);

// Evaluate the band-limited interpolant on the shifted line z + i y:
// coefficient-wise factor exp(-y . xi).  Guard: |y_a| * xi_max <= 700.
Field strip_shift(const Field& f, const std::array<double, 3>& y);

// Fraction of spectral energy carried by modes with |freq| > n/3 on some axis.
double tail_energy_fraction(const Field& f);
// Zero those modes (2/3-rule truncation).
Field dealias(const Field& f);
// Pointwise product; inputs and result pass through the 2/3-rule truncation
// when their top-third spectral energy fraction exceeds `dealias_threshold`.
Field multiply(const Field& a, const Field& b);
inline constexpr double dealias_threshold = 1e-8;

Field conj_field(const Field& f);
// |f|^{p-1} * f and |f|^{p-1} (p odd), with the dealias policy applied.
Field abs_power_times(const Field& f, int p);
Field abs_power(const Field& f, int p);

bool all_finite(const Field& f);

// --- serialization ----------------------------------------------------------
// Binary: header of three little-endian 64-bit values (d, n_points, L),
// then n^d complex values as interleaved re/im float64, row-major.
void write_field(const Field& f, const std::string& path);
Field read_field(const std::string& path);
// CSV "z,re,im" rows; d = 1 only.
void write_field_csv(const Field& f, const std::string& path);

}  // namespace nlslab
