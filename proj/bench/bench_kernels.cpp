// Serial reference vs OpenMP kernels, plus one full split-step-sized
// multiplier application.  Build target: bench_kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/kernels.hpp"
#include "nlslab/rng.hpp"

using namespace nlslab;
namespace K = nlslab::kernels;

namespace {

std::vector<cplx> make_data(std::size_t n) {
    RandomStream rs(42);
    std::vector<cplx> v(n);
    for (auto& z : v) z = cplx(rs.uniform(-1.0, 1.0), rs.uniform(-1.0, 1.0));
    return v;
}

template <K::Mode M>
void BM_phase_rotate(benchmark::State& state) {
    K::mode() = M;
    auto v = make_data((std::size_t)state.range(0));
    for (auto _ : state) {
        K::phase_rotate(v.size(), v.data(), 1e-3, 7);
        benchmark::DoNotOptimize(v.data());
    }
    K::mode() = K::Mode::OpenMP;
}

template <K::Mode M>
void BM_cmul(benchmark::State& state) {
    K::mode() = M;
    auto v = make_data((std::size_t)state.range(0));
    auto w = make_data((std::size_t)state.range(0));
    for (auto _ : state) {
        K::cmul(v.size(), v.data(), w.data());
        benchmark::DoNotOptimize(v.data());
    }
    K::mode() = K::Mode::OpenMP;
}

template <K::Mode M>
void BM_sum_abs2(benchmark::State& state) {
    K::mode() = M;
    auto v = make_data((std::size_t)state.range(0));
    for (auto _ : state) {
        double s = K::sum_abs2(v.size(), v.data());
        benchmark::DoNotOptimize(s);
    }
    K::mode() = K::Mode::OpenMP;
}

template <K::Mode M>
void BM_multiplier_96cube(benchmark::State& state) {
    K::mode() = M;
    GridSpec g{3, 96, 15.0};
    RandomStream rs(7);
    Field f = random_band_limited(g, rs, 5);
    for (auto _ : state) {
        Field r = fourier_multiplier(
            f, [](const std::array<double, 3>& xi) {
                return cplx(std::cos(xi[0] + xi[1] + xi[2]), 0.0);
            });
        benchmark::DoNotOptimize(r.v.data());
    }
    K::mode() = K::Mode::OpenMP;
}

}  // namespace

BENCHMARK(BM_phase_rotate<K::Mode::Serial>)->Arg(1 << 14)->Arg(1 << 18)->Arg(884736);
BENCHMARK(BM_phase_rotate<K::Mode::OpenMP>)->Arg(1 << 14)->Arg(1 << 18)->Arg(884736);
BENCHMARK(BM_cmul<K::Mode::Serial>)->Arg(1 << 14)->Arg(1 << 18)->Arg(884736);
BENCHMARK(BM_cmul<K::Mode::OpenMP>)->Arg(1 << 14)->Arg(1 << 18)->Arg(884736);
BENCHMARK(BM_sum_abs2<K::Mode::Serial>)->Arg(1 << 18)->Arg(884736);
BENCHMARK(BM_sum_abs2<K::Mode::OpenMP>)->Arg(1 << 18)->Arg(884736);
BENCHMARK(BM_multiplier_96cube<K::Mode::Serial>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_multiplier_96cube<K::Mode::OpenMP>)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
