#include "nlslab/kernels.hpp"

#include <cmath>

namespace nlslab::kernels {

Mode& mode() {
    static Mode m = Mode::OpenMP;
    return m;
}

// |v|^(p-1) for odd p without calling pow: (|v|^2)^((p-1)/2).
static inline double abs_pow_pm1(cplx v, int p) {
    const double a2 = std::norm(v);
    double w = 1.0;
    for (int m = 0; m < (p - 1) / 2; ++m) w *= a2;
    return w;
}

namespace serial {

void cmul(std::size_t n, cplx* y, const cplx* x) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

void cmul_real(std::size_t n, cplx* y, const double* w) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= w[i];
}

void caxpy(std::size_t n, cplx* y, cplx a, const cplx* x) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void cscale(std::size_t n, cplx* y, cplx a) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

void phase_rotate(std::size_t n, cplx* v, double c, int p) {
    for (std::size_t i = 0; i < n; ++i) {
        const double th = c * abs_pow_pm1(v[i], p);
        v[i] *= cplx(std::cos(th), std::sin(th));
    }
}

double sum_abs2(std::size_t n, const cplx* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::norm(x[i]);
    return s;
}

double sum_abs2_weighted(std::size_t n, const cplx* x, const double* w) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::norm(x[i]);
    return s;
}

double sum_abspow(std::size_t n, const cplx* x, double q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(std::abs(x[i]), q);
    return s;
}

double max_abs(std::size_t n, const cplx* x) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

}  // namespace serial

void cmul(std::size_t n, cplx* y, const cplx* x) {
    if (mode() == Mode::Serial) return serial::cmul(n, y, x);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) y[i] *= x[i];
}

void cmul_real(std::size_t n, cplx* y, const double* w) {
    if (mode() == Mode::Serial) return serial::cmul_real(n, y, w);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) y[i] *= w[i];
}

void caxpy(std::size_t n, cplx* y, cplx a, const cplx* x) {
    if (mode() == Mode::Serial) return serial::caxpy(n, y, a, x);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) y[i] += a * x[i];
}

void cscale(std::size_t n, cplx* y, cplx a) {
    if (mode() == Mode::Serial) return serial::cscale(n, y, a);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) y[i] *= a;
}

void phase_rotate(std::size_t n, cplx* v, double c, int p) {
    if (mode() == Mode::Serial) return serial::phase_rotate(n, v, c, p);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) {
        const double th = c * abs_pow_pm1(v[i], p);
        v[i] *= cplx(std::cos(th), std::sin(th));
    }
}

double sum_abs2(std::size_t n, const cplx* x) {
    if (mode() == Mode::Serial) return serial::sum_abs2(n, x);
    double s = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : s)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) s += std::norm(x[i]);
    return s;
}

double sum_abs2_weighted(std::size_t n, const cplx* x, const double* w) {
    if (mode() == Mode::Serial) return serial::sum_abs2_weighted(n, x, w);
    double s = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : s)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) s += w[i] * std::norm(x[i]);
    return s;
}

double sum_abspow(std::size_t n, const cplx* x, double q) {
    if (mode() == Mode::Serial) return serial::sum_abspow(n, x, q);
    double s = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : s)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) s += std::pow(std::abs(x[i]), q);
    return s;
}

double max_abs(std::size_t n, const cplx* x) {
    if (mode() == Mode::Serial) return serial::max_abs(n, x);
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m)
    for (std::ptrdiff_t i = 0; i < (std::ptrdiff_t)n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

}  // namespace nlslab::kernels
