#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "nlslab/grid.hpp"
#include "nlslab/rng.hpp"
#include "nlslab/symbol.hpp"

using namespace nlslab;

namespace {

// fill every time slice of coefficient j with the same field
SymbolSeries constant_series(const GridSpec& g, int J, int nt, double s0, int j,
                             const Field& f) {
    SymbolSeries b = SymbolSeries::zero(g, J, nt, s0);
    for (int i = 0; i < nt; ++i) b.set_slice(j, i, f);
    return b;
}

Field fill_const(const GridSpec& g, cplx c) {
    Field f(g);
    for (auto& v : f.v) v = c;
    return f;
}

double sup_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double coeff_sup(const SymbolSeries& b, int j) {
    double m = 0.0;
    for (const cplx& v : b.coeff[(std::size_t)j]) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_CASE("weight on the real axis and at the origin") {
    CHECK(weight({cplx(0.0, 0.0)}).real() == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK(weight({cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0)}).real() ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    // e^{sqrt(1+t^2)}, monotone in |t|
    double prev = 0.0;
    for (double t : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const cplx w = weight({cplx(t, 0.0)});
        CHECK(w.imag() == 0.0);
        CHECK(w.real() == doctest::Approx(std::exp(std::sqrt(1.0 + t * t))).epsilon(1e-15));
        CHECK(w.real() > prev);
        prev = w.real();
    }
}

TEST_CASE("weight at a strip point matches the multiprecision value") {
    const cplx w = weight({cplx(3.0, 0.2)});
    CHECK(w.real() == doctest::Approx(23.18559310014176135825185).epsilon(1e-12));
    CHECK(w.imag() == doctest::Approx(4.453627570860292109237185).epsilon(1e-12));
}

TEST_CASE("weight rejects arguments outside the strip") {
    CHECK_THROWS_AS(weight({cplx(0.0, 0.5)}), ConfigError);
    CHECK_THROWS_AS(weight({cplx(1.0, -0.7)}), ConfigError);
    CHECK_THROWS_AS(weight({}), ConfigError);
}

TEST_CASE("majorant parameter validation") {
    MajorantParams mp;
    CHECK_NOTHROW(mp.validate());
    MajorantParams bad = mp;
    bad.l = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = mp;
    bad.eps = 0.6;  // >= 1/B with B = 2
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = mp;
    bad.s0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = mp;
    bad.strip_samples = 8;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = mp;
    bad.theta = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("index shifts are exact inverses and the product has the unit") {
    const GridSpec g{1, 64, 8.0};
    RandomStream rs(11);
    const int nt = 5;
    const double s0 = 0.05;
    SymbolSeries b = make_corpus_symbol(g, rs, nt, s0, 6, 0.6);

    // (h b - (h b)_0)/h recovers b bitwise
    const SymbolSeries back = downshift(upshift(b, b.J + 1));
    REQUIRE(back.J == b.J);
    for (int j = 0; j <= b.J; ++j) CHECK(back.coeff[j] == b.coeff[j]);

    // multiplying by the unit symbol changes nothing
    SymbolSeries unit = constant_series(g, 0, nt, s0, 0, fill_const(g, cplx(1.0, 0.0)));
    const SymbolSeries prod = symbol_product(b, unit);
    REQUIRE(prod.J == b.J);
    for (int j = 0; j <= b.J; ++j)
        for (std::size_t i = 0; i < prod.coeff[j].size(); ++i)
            CHECK(std::abs(prod.coeff[j][i] - b.coeff[j][i]) < 1e-14);
}

TEST_CASE("product of two pure h-multiples concentrates at h^2") {
    const GridSpec g{1, 16, 5.0};
    const int nt = 3;
    const cplx c(0.7, -0.2);
    SymbolSeries b = constant_series(g, 1, nt, 0.05, 1, fill_const(g, c));
    const SymbolSeries sq = symbol_product(b, b);
    REQUIRE(sq.J == 2);
    CHECK(coeff_sup(sq, 0) == 0.0);
    CHECK(coeff_sup(sq, 1) == 0.0);
    for (const cplx& v : sq.coeff[2]) CHECK(std::abs(v - c * c) < 1e-15);
}

TEST_CASE("evaluation is a homomorphism for untruncated products") {
    const GridSpec g{1, 64, 8.0};
    RandomStream rs(23);
    const int nt = 4;
    SymbolSeries b1 = make_corpus_symbol(g, rs, nt, 0.03, 6, 0.6);
    SymbolSeries b2 = make_corpus_symbol(g, rs, nt, 0.03, 6, 0.6);
    const SymbolSeries prod = symbol_product(b1, b2, b1.J + b2.J);
    const double h = 0.1;
    const auto e1 = evaluate_series(b1, h);
    const auto e2 = evaluate_series(b2, h);
    const auto ep = evaluate_series(prod, h);
    for (int i = 0; i < nt; ++i) {
        double m = 0.0;
        for (std::size_t k = 0; k < ep[i].size(); ++k)
            m = std::max(m, std::abs(ep[i][k] - e1[i][k] * e2[i][k]));
        CHECK(m < 1e-10);
    }
}

TEST_CASE("time antiderivative integrates constants and cosines") {
    const GridSpec g{1, 16, 5.0};
    const int nt = 41;
    const double s0 = 1.0;
    SymbolSeries one = constant_series(g, 0, nt, s0, 0, fill_const(g, cplx(1.0, 0.0)));
    const SymbolSeries s = time_antiderivative(one);
    CHECK(coeff_sup(s, 0) > 0.0);
    // vanishes identically at s = 0
    for (std::size_t m = 0; m < g.total(); ++m) CHECK(s.slice(0, 0)[m] == cplx(0.0, 0.0));
    for (int i = 0; i < nt; ++i)
        CHECK(std::abs(s.slice(0, i)[0] - s.s_at(i)) < 1e-14);

    SymbolSeries cosb = SymbolSeries::zero(g, 0, nt, s0);
    for (int i = 0; i < nt; ++i)
        cosb.set_slice(0, i, fill_const(g, cplx(std::cos(cosb.s_at(i)), 0.0)));
    const SymbolSeries sinb = time_antiderivative(cosb);
    const double ds = s0 / (nt - 1);
    for (int i = 0; i < nt; ++i)
        CHECK(std::abs(sinb.slice(0, i)[0] - std::sin(sinb.s_at(i))) < ds * ds);

    // applying it twice integrates 1 to s^2/2
    const SymbolSeries half = time_antiderivative(s);
    for (int i = 0; i < nt; ++i)
        CHECK(std::abs(half.slice(0, i)[0] - 0.5 * half.s_at(i) * half.s_at(i)) < ds * ds);

    SymbolSeries single = SymbolSeries::zero(g, 0, 1, 0.0);
    CHECK_THROWS_AS(time_antiderivative(single), ConfigError);
}

TEST_CASE("majorant norm of the zero series vanishes") {
    const GridSpec g{1, 32, 6.0};
    MajorantParams mp;
    const SymbolSeries z = SymbolSeries::zero(g, 3, 5, mp.s0);
    CHECK(majorant_norm(z, mp, 0.0) == 0.0);
    CHECK(majorant_norm(z, mp, 1.0) == 0.0);
}

TEST_CASE("majorant norm requires time coverage of the tau grid") {
    const GridSpec g{1, 32, 6.0};
    MajorantParams mp;  // s0 = 0.05
    const SymbolSeries b = SymbolSeries::zero(g, 0, 5, 0.02);
    CHECK_THROWS_AS(majorant_norm(b, mp, 0.0), ConfigError);
}

TEST_CASE("weighted sup of the reciprocal weight is one") {
    // b_0 = 1/W on the grid: W(z) b_0(z) == 1 identically, so the theta = 0
    // norm is 1 up to the band-limited continuation error of the samples.
    const GridSpec g{1, 400, 14.0};
    MajorantParams mp;
    mp.l = 0.05;  // the seam of the periodization meets the weight's growth at
                  // the box edge; a thin strip keeps that error below percent level
    const int nt = 5;
    const Field recip = sample(g, [](const std::array<double, 3>& x) {
        return 1.0 / weight({cplx(x[0], 0.0)});
    });
    const SymbolSeries b = constant_series(g, 0, nt, mp.s0, 0, recip);
    const double n0 = majorant_norm(b, mp, 0.0);
    CHECK(std::abs(n0 - 1.0) < 0.02);
}

TEST_CASE("norm is homogeneous in eps order by order") {
    const GridSpec g{1, 64, 8.0};
    RandomStream rs(31);
    MajorantParams mp;
    mp.B = 1.2;
    mp.eps = 0.4;
    SymbolSeries b = make_corpus_symbol(g, rs, 5, mp.s0, 6, 0.6);
    // zero out the j = 0 coefficient: the norm is then linear in eps
    std::fill(b.coeff[0].begin(), b.coeff[0].end(), cplx(0.0, 0.0));
    MajorantParams mp2 = mp;
    mp2.eps = 0.8;
    const double n1 = majorant_norm(b, mp, 1.0);
    const double n2 = majorant_norm(b, mp2, 1.0);
    REQUIRE(n1 > 0.0);
    CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("norm axioms and theta monotonicity on random pairs") {
    const GridSpec g{1, 64, 8.0};
    RandomStream rs(43);
    MajorantParams mp;
    for (int rep = 0; rep < 3; ++rep) {
        const SymbolSeries a = make_corpus_symbol(g, rs, 5, mp.s0, 6, 0.6);
        const SymbolSeries b = make_corpus_symbol(g, rs, 5, mp.s0, 6, 0.6);
        const double na = majorant_norm(a, mp, 1.0);
        const double nb = majorant_norm(b, mp, 1.0);
        const double nsum = majorant_norm(series_add(a, b), mp, 1.0);
        CHECK(nsum <= na + nb + 1e-10 * (na + nb));

        const cplx lam(-1.7, 0.4);
        const double nl = majorant_norm(series_scale(a, lam), mp, 1.0);
        CHECK(nl == doctest::Approx(std::abs(lam) * na).epsilon(1e-10));

        const double t0 = majorant_norm(a, mp, 0.0);
        const double t05 = majorant_norm(a, mp, 0.5);
        const double t1 = majorant_norm(a, mp, 1.0);
        CHECK(t05 <= t0 * (1.0 + 1e-12));
        CHECK(t1 <= t05 * (1.0 + 1e-12));
    }
}

TEST_CASE("product bound: unit factor reduces to an exact identity") {
    const GridSpec g{1, 64, 8.0};
    RandomStream rs(57);
    MajorantParams mp;
    const int nt = 5;
    const SymbolSeries unit =
        constant_series(g, 0, nt, mp.s0, 0, fill_const(g, cplx(1.0, 0.0)));
    const SymbolSeries b = make_corpus_symbol(g, rs, nt, mp.s0, 6, 0.6);
    const RatioResult r = check_product_inequality(unit, b, mp, 1.0);
    REQUIRE(!r.vacuous);
    const double unit0 = majorant_norm(unit, mp, 0.0);
    CHECK(r.ratio * unit0 == doctest::Approx(1.0).epsilon(1e-12));

    const SymbolSeries z = SymbolSeries::zero(g, 1, nt, mp.s0);
    CHECK(check_product_inequality(b, z, mp, 1.0).vacuous);
    CHECK(check_smoothing_inequalities(z, mp).anti_one.vacuous);
}

TEST_CASE("smoothing report echoes directly computed norms") {
    const GridSpec g{1, 400, 14.0};
    MajorantParams mp;
    mp.l = 0.05;
    const Field recip = sample(g, [](const std::array<double, 3>& x) {
        return 1.0 / weight({cplx(x[0], 0.0)});
    });
    const SymbolSeries b = constant_series(g, 0, 5, mp.s0, 0, recip);
    const SmoothingReport rep = check_smoothing_inequalities(b, mp);
    REQUIRE(!rep.anti_one.vacuous);
    const double direct = majorant_norm(time_antiderivative(b), mp, 1.0) /
                          (mp.s0 * majorant_norm(b, mp, 1.0));
    CHECK(rep.anti_one.ratio == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("norm corpus: bounded ratios, stable under sampling and time halving") {
    const GridSpec g{1, 64, 8.0};
    MajorantParams base;
    base.tau_samples = 16;
    base.strip_samples = 5;
    const std::uint64_t seed = 2026;
    const int count = 100;
    const double h = 0.1;

    const CorpusReport rep = run_norm_corpus(seed, count, g, base, h);

    // every inequality produced data and a finite constant
    for (const InequalityStats* s :
         {&rep.product, &rep.anti_grad, &rep.anti_hlap, &rep.anti_hdiff, &rep.anti_half,
          &rep.anti_one, &rep.anti_double, &rep.compose}) {
        CHECK(s->samples > 0);
        CHECK(std::isfinite(s->ratio_max));
        CHECK(s->ratio_max > 0.0);
        CHECK(s->ratio_mean <= s->ratio_max);
    }

    // the measured constants are insensitive to refining the sup sampling
    MajorantParams fine = base;
    fine.tau_samples = 32;
    fine.strip_samples = 9;
    const CorpusReport rep2 = run_norm_corpus(seed, count, g, fine, h);
    CHECK(std::abs(rep2.product.ratio_max - rep.product.ratio_max) <=
          0.10 * rep.product.ratio_max);
    CHECK(std::abs(rep2.compose.ratio_max - rep.compose.ratio_max) <=
          0.10 * rep.compose.ratio_max);
    CHECK(std::abs(rep2.anti_one.ratio_max - rep.anti_one.ratio_max) <=
          0.10 * rep.anti_one.ratio_max);

    // halving the time radius keeps every measured constant essentially flat
    MajorantParams halfs0 = base;
    halfs0.s0 = base.s0 / 2.0;
    const CorpusReport reph = run_norm_corpus(seed, count, g, halfs0, h);
    CHECK(reph.anti_grad.ratio_max <= 1.2 * rep.anti_grad.ratio_max);
    CHECK(reph.anti_hlap.ratio_max <= 1.2 * rep.anti_hlap.ratio_max);
    CHECK(reph.anti_hdiff.ratio_max <= 1.2 * rep.anti_hdiff.ratio_max);
    CHECK(reph.anti_half.ratio_max <= 1.2 * rep.anti_half.ratio_max);
    CHECK(reph.anti_one.ratio_max <= 1.2 * rep.anti_one.ratio_max);
    CHECK(reph.anti_double.ratio_max <= 1.2 * rep.anti_double.ratio_max);
    CHECK(reph.compose.ratio_max <= 1.2 * rep.compose.ratio_max);

    // seeded reruns are bit-identical
    const CorpusReport rep3 = run_norm_corpus(seed, count, g, base, h);
    CHECK(rep3.product.ratio_max == rep.product.ratio_max);
    CHECK(rep3.anti_one.ratio_mean == rep.anti_one.ratio_mean);
    CHECK(rep3.compose.ratio_max == rep.compose.ratio_max);
}

TEST_CASE("corpus rejects out-of-range h") {
    const GridSpec g{1, 64, 8.0};
    MajorantParams mp;
    CHECK_THROWS_AS(run_norm_corpus(1, 2, g, mp, 0.5), ConfigError);  // h >= eps
    CHECK_THROWS_AS(run_norm_corpus(1, 0, g, mp, 0.1), ConfigError);
}

TEST_CASE("picard: zero data stays at the zero fixed point") {
    const GridSpec g{1, 32, 6.0};
    MajorantParams mp;
    mp.s0 = 0.02;
    const SymbolSeries a0 = SymbolSeries::zero(g, 1, 1, 0.0);
    const std::vector<Field> phi0{Field(g)};
    PicardOptions opt;
    opt.nt = 9;
    const PicardResult res = picard_solve(phi0, a0, mp, 3, 1.0, 0.05, opt);
    REQUIRE(!res.distances.empty());
    CHECK(res.distances[0] == 0.0);
    for (const auto& slice : res.phi)
        for (const Field& f : slice) CHECK(sup_norm(f) == 0.0);
    for (const Field& s : res.S) CHECK(sup_norm(s) == 0.0);
    for (int j = 0; j <= res.a.J; ++j) CHECK(coeff_sup(res.a, j) == 0.0);
}

TEST_CASE("picard: spatially constant data gives the exact linear phase") {
    const GridSpec g{1, 32, 6.0};
    MajorantParams mp;
    mp.s0 = 0.02;
    const double c = 0.8;
    const int p = 5;
    const double omega = -1.0;
    SymbolSeries a0 = SymbolSeries::zero(g, 0, 1, 0.0);
    a0.set_slice(0, 0, fill_const(g, cplx(c, 0.0)));
    const std::vector<Field> phi0{Field(g)};
    PicardOptions opt;
    opt.nt = 17;
    const PicardResult res = picard_solve(phi0, a0, mp, p, omega, 0.05, opt);
    CHECK(res.distances[0] == 0.0);
    const double rate = -omega * std::pow(c, p - 1);
    for (int i = 0; i < opt.nt; ++i) {
        const double s = mp.s0 * i / (opt.nt - 1);
        CHECK(sup_diff(res.S[i], fill_const(g, cplx(rate * s, 0.0))) < 1e-12);
        CHECK(sup_diff(res.a.slice_field(0, i), fill_const(g, cplx(c, 0.0))) < 1e-14);
        CHECK(sup_norm(res.phi[i][0]) < 1e-14);
    }
}

TEST_CASE("picard: gaussian data contracts and satisfies the first-order system") {
    const GridSpec g{1, 128, 10.0};
    MajorantParams mp;
    mp.s0 = 0.02;
    const int p = 3;
    const double omega = 1.0;
    const double h = 0.05;

    SymbolSeries a0 = SymbolSeries::zero(g, 1, 1, 0.0);
    a0.set_slice(0, 0, sample(g, [](const std::array<double, 3>& x) {
                     return cplx(std::exp(-x[0] * x[0]), 0.0);
                 }));
    a0.set_slice(1, 0, sample(g, [](const std::array<double, 3>& x) {
                     return cplx(0.3 * std::exp(-x[0] * x[0] / 2.0), 0.0);
                 }));
    const Field S0 = sample(g, [](const std::array<double, 3>& x) {
        return cplx(0.25 * std::exp(-x[0] * x[0] / 2.0), 0.0);
    });
    const std::vector<Field> phi0{derivative(S0, 0)};

    PicardOptions opt;
    opt.nt = 65;
    opt.iters = 10;
    const PicardResult res = picard_solve(phi0, a0, mp, p, omega, h, opt);

    // contraction from the second distance on
    REQUIRE(res.contraction_ratios.size() >= 3);
    for (std::size_t k = 1; k < res.contraction_ratios.size(); ++k)
        CHECK(res.contraction_ratios[k] < 1.0);

    // the phase stays real
    double imax = 0.0, smax = 0.0;
    for (const Field& s : res.S) {
        for (const cplx& v : s.v) {
            imax = std::max(imax, std::abs(v.imag()));
            smax = std::max(smax, std::abs(v));
        }
    }
    CHECK(imax < 1e-8 * (1.0 + smax));

    // centered differences in s reproduce the first-order system
    const int nt = opt.nt;
    const double ds = mp.s0 / (nt - 1);  // centered-difference floor ~ ds^2
    const int Ja = res.a.J;

    // nonlinear convolution coefficients from the returned amplitude
    const SymbolSeries conj_a = symbol_conj(res.a);
    const SymbolSeries fa = symbol_product(res.a, conj_a, Ja + 1);  // p = 3
    const SymbolSeries G = downshift(fa);
    const SymbolSeries NL = symbol_product(res.a, G, Ja);

    double resid_phi = 0.0, resid_a = 0.0;
    for (int i = 1; i + 1 < nt; ++i) {
        const Field& phim = res.phi[i - 1][0];
        const Field& phip = res.phi[i + 1][0];
        const Field& phic = res.phi[i][0];
        const Field dphi_dx = derivative(phic, 0);
        const Field f0 = abs_power(res.a.slice_field(0, i), p);
        const Field gradf = derivative(f0, 0);
        for (std::size_t m = 0; m < g.total(); ++m) {
            const cplx fd = (phip[m] - phim[m]) / (2.0 * ds);
            const cplx rhs = -2.0 * phic[m] * dphi_dx[m] - omega * gradf[m];
            resid_phi = std::max(resid_phi, std::abs(fd - rhs));
        }
        for (int j = 0; j <= Ja; ++j) {
            const Field aj = res.a.slice_field(j, i);
            const Field daj = derivative(aj, 0);
            const Field lap_prev =
                j > 0 ? laplacian(res.a.slice_field(j - 1, i)) : Field(g);
            for (std::size_t m = 0; m < g.total(); ++m) {
                const cplx fd =
                    (res.a.slice(j, i + 1)[m] - res.a.slice(j, i - 1)[m]) / (2.0 * ds);
                const cplx rhs = -2.0 * phic[m] * daj[m] - aj[m] * dphi_dx[m] +
                                 cplx(0.0, 1.0) * lap_prev[m] -
                                 cplx(0.0, omega) * NL.slice(j, i)[m];
                resid_a = std::max(resid_a, std::abs(fd - rhs));
            }
        }
    }
    CHECK(resid_phi < 1e-5);
    CHECK(resid_a < 1e-5);
}

TEST_CASE("picard input validation") {
    const GridSpec g{1, 32, 6.0};
    MajorantParams mp;
    mp.s0 = 0.02;
    SymbolSeries a0 = SymbolSeries::zero(g, 0, 1, 0.0);
    a0.set_slice(0, 0, fill_const(g, cplx(0.5, 0.0)));
    const std::vector<Field> phi0{Field(g)};

    CHECK_THROWS_AS(picard_solve(phi0, a0, mp, 4, 1.0, 0.05), ConfigError);   // even p
    CHECK_THROWS_AS(picard_solve(phi0, a0, mp, 3, 1.0, 0.5), ConfigError);    // h >= eps
    CHECK_THROWS_AS(picard_solve({}, a0, mp, 3, 1.0, 0.05), ConfigError);     // no phi0
    SymbolSeries wide = SymbolSeries::zero(g, 0, 3, 0.01);
    CHECK_THROWS_AS(picard_solve(phi0, wide, mp, 3, 1.0, 0.05), ConfigError);

    // constant (nonzero-mean) slope is not a periodic gradient
    CHECK_THROWS_AS(picard_solve({fill_const(g, cplx(0.5, 0.0))}, a0, mp, 3, 1.0, 0.05),
                    ConfigError);
    // complex-valued phi0 is rejected
    CHECK_THROWS_AS(picard_solve({sample(g, [](const std::array<double, 3>& x) {
                                     return cplx(0.0, std::sin(3.14159265358979 * x[0] / 6.0));
                                 })},
                                 a0, mp, 3, 1.0, 0.05),
                    ConfigError);

    // a rotational field in d = 2 fails the gradient check
    const GridSpec g2{2, 24, 6.0};
    const SymbolSeries a02 = SymbolSeries::zero(g2, 0, 1, 0.0);
    const Field psi = sample(g2, [](const std::array<double, 3>& x) {
        return cplx(std::exp(-(x[0] * x[0] + x[1] * x[1]) / 2.0), 0.0);
    });
    Field neg_dx = derivative(psi, 0);
    for (auto& v : neg_dx.v) v = -v;
    const std::vector<Field> rot{derivative(psi, 1), neg_dx};
    CHECK_THROWS_AS(picard_solve(rot, a02, mp, 3, 1.0, 0.05), ConfigError);
}
