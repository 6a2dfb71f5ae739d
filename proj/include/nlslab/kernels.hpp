#pragma once

// Hot pointwise loops shared by the spectral grid, the split-step solver and
// the symbol calculus.  Every kernel exists twice: a plain serial reference
// (namespace kernels::serial) and an OpenMP variant.  mode() selects the
// implementation at runtime; with OMP_NUM_THREADS=1 the OpenMP variants run
// the iterations in the same order as the serial ones, so results are
// bitwise identical.  bench/bench_kernels.cpp compares the two.

#include <complex>
#include <cstddef>

namespace nlslab {
using cplx = std::complex<double>;
}

namespace nlslab::kernels {

enum class Mode { Serial, OpenMP };

// Process-global implementation switch (default OpenMP).
Mode& mode();

// y[i] *= x[i]
void cmul(std::size_t n, cplx* y, const cplx* x);
// y[i] *= w[i]  (real weights, e.g. precomputed Fourier multipliers)
void cmul_real(std::size_t n, cplx* y, const double* w);
// y[i] += a * x[i]
void caxpy(std::size_t n, cplx* y, cplx a, const cplx* x);
// y[i] *= a
void cscale(std::size_t n, cplx* y, cplx a);
// v[i] *= exp(i * c * |v[i]|^(p-1)), p odd: the exact nonlinear half-step.
void phase_rotate(std::size_t n, cplx* v, double c, int p);
// sum |x[i]|^2
double sum_abs2(std::size_t n, const cplx* x);
// sum w[i] * |x[i]|^2
double sum_abs2_weighted(std::size_t n, const cplx* x, const double* w);
// sum |x[i]|^q
double sum_abspow(std::size_t n, const cplx* x, double q);
// max |x[i]|
double max_abs(std::size_t n, const cplx* x);

namespace serial {
void cmul(std::size_t n, cplx* y, const cplx* x);
void cmul_real(std::size_t n, cplx* y, const double* w);
void caxpy(std::size_t n, cplx* y, cplx a, const cplx* x);
void cscale(std::size_t n, cplx* y, cplx a);
void phase_rotate(std::size_t n, cplx* v, double c, int p);
double sum_abs2(std::size_t n, const cplx* x);
double sum_abs2_weighted(std::size_t n, const cplx* x, const double* w);
double sum_abspow(std::size_t n, const cplx* x, double q);
double max_abs(std::size_t n, const cplx* x);
}  // namespace serial

}  // namespace nlslab::kernels
