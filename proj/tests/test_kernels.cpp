#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <numeric>
#include <vector>

#include "nlslab/kernels.hpp"
#include "nlslab/rng.hpp"

using namespace nlslab;
namespace K = nlslab::kernels;

namespace {
std::vector<cplx> random_vec(std::size_t n, std::uint64_t seed) {
    RandomStream rs(seed);
    std::vector<cplx> v(n);
    for (auto& z : v) z = cplx(rs.uniform(-2.0, 2.0), rs.uniform(-2.0, 2.0));
    return v;
}

bool bitwise_equal(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(cplx)) == 0;
}
}  // namespace

TEST_CASE("openmp kernels match the serial reference bitwise") {
    // the determinism contract is stated for a fixed thread count of 1;
    // that is what this sandbox runs with.
    for (std::size_t n : {1u, 7u, 64u, 1000u, 4097u}) {
        auto x = random_vec(n, 11 + n);
        auto y1 = random_vec(n, 23 + n), y2 = y1;

        K::mode() = K::Mode::OpenMP;
        K::cmul(n, y1.data(), x.data());
        K::mode() = K::Mode::Serial;
        K::cmul(n, y2.data(), x.data());
        CHECK(bitwise_equal(y1, y2));

        auto v1 = x, v2 = x;
        K::mode() = K::Mode::OpenMP;
        K::phase_rotate(n, v1.data(), -0.37, 7);
        K::mode() = K::Mode::Serial;
        K::phase_rotate(n, v2.data(), -0.37, 7);
        CHECK(bitwise_equal(v1, v2));

        K::mode() = K::Mode::OpenMP;
        const double s1 = K::sum_abs2(n, x.data());
        const double m1 = K::max_abs(n, x.data());
        K::mode() = K::Mode::Serial;
        const double s2 = K::sum_abs2(n, x.data());
        const double m2 = K::max_abs(n, x.data());
        CHECK(s1 == s2);
        CHECK(m1 == m2);
    }
    K::mode() = K::Mode::OpenMP;
}

TEST_CASE("phase_rotate preserves modulus exactly up to roundoff") {
    auto v = random_vec(512, 3);
    auto before = v;
    K::phase_rotate(v.size(), v.data(), 1.234, 7);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(std::abs(std::abs(v[i]) - std::abs(before[i])) < 1e-14 * (1.0 + std::abs(before[i])));
}

TEST_CASE("reductions agree with long-double accumulation") {
    auto x = random_vec(2048, 5);
    long double ref2 = 0.0L, refq = 0.0L;
    for (auto z : x) {
        const long double a2 = (long double)z.real() * z.real() + (long double)z.imag() * z.imag();
        ref2 += a2;
        refq += std::pow((long double)std::abs(z), 8.0L);
    }
    CHECK(K::sum_abs2(x.size(), x.data()) == doctest::Approx((double)ref2).epsilon(1e-12));
    CHECK(K::sum_abspow(x.size(), x.data(), 8.0) == doctest::Approx((double)refq).epsilon(1e-11));
}

TEST_CASE("caxpy and cscale match direct evaluation") {
    auto x = random_vec(300, 7);
    auto y = random_vec(300, 9);
    auto ref = y;
    const cplx a(0.3, -1.1);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += a * x[i];
    K::caxpy(y.size(), y.data(), a, x.data());
    CHECK(bitwise_equal(y, ref));
}
