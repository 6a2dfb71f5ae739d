#pragma once

// Deterministic random stream for corpora and tests.  mt19937_64's output
// sequence is fixed by the standard; the uniform mapping below avoids
// std::uniform_real_distribution (whose algorithm is implementation-defined),
// so seeded runs are reproducible across toolchains.

#include <cmath>
#include <cstdint>
#include <random>

#include "nlslab/grid.hpp"

namespace nlslab {

struct RandomStream {
    std::mt19937_64 eng;
    explicit RandomStream(std::uint64_t seed) : eng(seed) {}

    double uniform() { return (double)(eng() >> 11) * 0x1.0p-53; }  // [0,1)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    cplx unit_complex() {
        const double t = uniform(0.0, 6.283185307179586);
        return {std::cos(t), std::sin(t)};
    }
};

// Random trigonometric polynomial: independent complex coefficients on the
// modes with |freq| <= kmax per axis, amplitude envelope decay^{sum |freq|}.
inline Field random_band_limited(const GridSpec& g, RandomStream& rs, int kmax,
                                 double decay = 0.7) {
    std::vector<cplx> coef(g.total(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < coef.size(); ++i) {
        auto idx = decode_index(g, i);
        int sum = 0;
        bool in_band = true;
        for (int a = 0; a < g.d; ++a) {
            const int f = g.freq(idx[a]);
            if (std::abs(f) > kmax) in_band = false;
            sum += std::abs(f);
        }
        if (!in_band) continue;
        coef[i] = rs.uniform(-1.0, 1.0) * std::pow(decay, sum) * rs.unit_complex();
    }
    return from_spectrum(g, coef);
}

}  // namespace nlslab
