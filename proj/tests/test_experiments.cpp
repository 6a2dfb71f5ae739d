#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlslab/experiments.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/rescale.hpp"
#include "nlslab/wkb.hpp"

using namespace nlslab;

namespace {

Field fill_const(const GridSpec& g, cplx c) {
    Field f(g);
    for (auto& x : f.v) x = c;
    return f;
}

Field gaussian_profile(const GridSpec& g) {
    return sample(g, [&](const std::array<double, 3>& z) {
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
        return cplx(std::exp(-r2), 0.0);
    });
}

double sup_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// absolute-tolerance comparison (doctest's Approx is relative)
bool near(double x, double want, double tol) { return std::fabs(x - want) <= tol; }

const NormSeries& find_series(const ExperimentReport& rep, const std::string& label) {
    for (const NormSeries& s : rep.series)
        if (s.label == label) return s;
    REQUIRE_MESSAGE(false, "series not found: ", label);
    return rep.series.front();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("hbar sequences are strictly decreasing in (0,1)") {
    HbarSequence ok{{0.45, 0.4, 0.35, 0.3}};
    CHECK_NOTHROW(ok.validate());

    CHECK_THROWS_AS((HbarSequence{{0.4, 0.3, 0.2}}.validate()), ConfigError);
    CHECK_THROWS_AS((HbarSequence{{0.4, 0.4, 0.3, 0.2}}.validate()), ConfigError);
    CHECK_THROWS_AS((HbarSequence{{0.4, 0.3, 0.35, 0.2}}.validate()), ConfigError);
    CHECK_THROWS_AS((HbarSequence{{1.0, 0.4, 0.3, 0.2}}.validate()), ConfigError);
    CHECK_THROWS_AS((HbarSequence{{0.4, 0.3, 0.2, 0.0}}.validate()), ConfigError);

    const auto h = ok.h_values(2.0);
    REQUIRE(h.size() == 4);
    CHECK(near(h[0], 0.45 * 0.45, 1e-15));
    CHECK(near(h[3], 0.09, 1e-15));
    CHECK_THROWS_AS(ok.h_values(0.0), ConfigError);
    CHECK_THROWS_AS(ok.h_values(-1.0), ConfigError);
}

TEST_CASE("fit_exponent recovers exact, flat and noisy power laws") {
    const std::vector<double> hb{0.5, 0.4, 0.3, 0.2, 0.1, 0.05};

    std::vector<std::pair<double, double>> sq, flat, noisy;
    const std::vector<double> pert{0.01, -0.008, 0.006, -0.01, 0.004, -0.002};
    for (std::size_t i = 0; i < hb.size(); ++i) {
        sq.push_back({hb[i], hb[i] * hb[i]});
        flat.push_back({hb[i], 3.7});
        noisy.push_back({hb[i], 2.0 * std::pow(hb[i], 0.3) * (1.0 + pert[i])});
    }

    const auto [s1, e1] = fit_exponent(sq);
    CHECK(near(s1, 2.0, 1e-12));
    CHECK(e1 < 1e-12);

    const auto [s2, e2] = fit_exponent(flat);
    CHECK(near(s2, 0.0, 1e-12));
    CHECK(e2 < 1e-12);

    const auto [s3, e3] = fit_exponent(noisy);
    CHECK(near(s3, 0.3, 0.02));
    CHECK(e3 > 0.0);
    CHECK(e3 < 0.02);

    using pts = std::vector<std::pair<double, double>>;
    CHECK_THROWS_AS(fit_exponent(pts{{0.4, 1.0}, {0.3, 1.0}, {0.2, 1.0}}),
                    ConfigError);
    CHECK_THROWS_AS(
        fit_exponent(pts{{0.4, 1.0}, {0.3, -1.0}, {0.2, 1.0}, {0.1, 1.0}}),
        ConfigError);
    CHECK_THROWS_AS(
        fit_exponent(pts{{0.4, 1.0}, {-0.3, 1.0}, {0.2, 1.0}, {0.1, 1.0}}),
        ConfigError);
    CHECK_THROWS_AS(
        fit_exponent(pts{{0.3, 1.0}, {0.3, 2.0}, {0.3, 3.0}, {0.3, 4.0}}),
        ConfigError);
}

TEST_CASE("initial_datum applies the concentration cutoff") {
    GridSpec g{1, 256, 6.0};
    const Field a0 = gaussian_profile(g);
    const SemiclassicalParams pr = make_params(1, 5, 1.0, 0.5, 0.3);

    // no cutoff: the datum is the profile itself
    const Field plain = initial_datum(a0, pr, 0.5, false);
    CHECK(sup_diff(plain, a0) == 0.0);

    // plateau covering the whole grid: chi is identically one
    std::vector<std::string> warn;
    const Field covered = initial_datum(a0, pr, 0.5, true, 10.0, &warn);
    CHECK(sup_diff(covered, a0) < 1e-12);
    CHECK(warn.empty());

    // a biting cutoff warns and removes mass, monotonically less so as
    // hbar decreases (the cutoff radius hbar^{eta-1} r widens)
    const double uncut = lebesgue_norm(a0, 2.0);
    const std::vector<double> hbars{0.45, 0.3, 0.2, 0.1, 0.05};
    std::vector<double> masses;
    for (double hb : hbars) {
        std::vector<std::string> w;
        const Field cut = initial_datum(a0, pr.with_hbar(hb), 0.5, true, 1.0, &w);
        CHECK(w.size() == 1);
        masses.push_back(lebesgue_norm(cut, 2.0));
    }
    for (std::size_t i = 1; i < masses.size(); ++i) CHECK(masses[i] > masses[i - 1]);
    CHECK(masses.back() < uncut);
    CHECK(uncut - masses.back() < 1e-3 * uncut);

    CHECK_THROWS_AS(initial_datum(a0, pr, 0.0, true), ConfigError);
    CHECK_THROWS_AS(initial_datum(a0, pr, 1.0, true), ConfigError);
    CHECK_THROWS_AS(initial_datum(a0, pr, 0.5, true, 0.0), ConfigError);
    GridSpec g3{3, 16, 5.0};
    CHECK_THROWS_AS(initial_datum(gaussian_profile(g3), pr, 0.5, true), ConfigError);
}

TEST_CASE("inflation window algebra: predictions and rejections") {
    CHECK_NOTHROW(thm2_validate_window(3, 7, 0.5, 0.3, 0.05));

    // the t=0 exponent equals eps identically
    CHECK(near(thm2_slope_at_zero(3, 7, 0.5, 0.05), 0.05, 1e-12));
    CHECK(near(thm2_slope_at_zero(1, 7, 0.05, 0.005), 0.005, 1e-12));
    CHECK(near(thm2_slope_at_zero(3, 5, 0.5, 0.1), 0.1, 1e-12));

    // observation-time exponents by direct substitution
    CHECK(near(thm2_slope_at_obs(3, 7, 0.5, 0.3, 0.05), -0.305, 1e-12));
    CHECK(near(thm2_slope_at_obs(1, 7, 0.05, 0.05, 0.005), -0.01175, 1e-12));
    CHECK(near(thm2_slope_at_obs(1, 11, 0.05, 0.05, 0.01, 0.22), -0.039, 1e-12));

    // sigma must stay strictly below the critical index, minus eps
    CHECK_THROWS_AS(thm2_validate_window(3, 7, 7.0 / 6.0, 0.3, 0.05), ConfigError);
    CHECK_THROWS_AS(thm2_validate_window(3, 7, 1.1, 0.3, 0.1), ConfigError);
    // rho may not exceed sigma, and its lower bound is strict
    CHECK_THROWS_AS(thm2_validate_window(3, 7, 0.5, 0.6, 0.05), ConfigError);
    CHECK_THROWS_AS(thm2_validate_window(3, 7, 0.5, 0.5 / 3.0, 0.05), ConfigError);
    CHECK_THROWS_AS(thm2_validate_window(3, 4, 0.5, 0.3, 0.05), ConfigError);
    CHECK_THROWS_AS(thm2_validate_window(3, 7, -0.1, 0.3, 0.05), ConfigError);
    CHECK_THROWS_AS(thm2_validate_window(3, 7, 0.5, 0.3, 0.0), ConfigError);
}

TEST_CASE("homogeneous data give the phase gap in closed form") {
    GridSpec g{1, 32, 5.0};
    const int p = 7;
    const double c = 0.8, delta = 0.25, s = 0.05;

    WkbState st;
    st.S = Field(g);
    st.amps = {fill_const(g, cplx(c, 0.0))};
    st.p = p;
    st.omega = 1.0;
    WkbState stt = st;
    stt.amps = {fill_const(g, cplx((1.0 + delta) * c, 0.0))};

    HierarchyConfig hc;
    hc.dt = 1e-3;
    hc.closure_order = 0;
    hc.s_max = 0.2;

    const Field S = integrate_wkb(st, s, hc).back().S;
    const Field St = integrate_wkb(stt, s, hc).back().S;

    // flat data keep a flat phase: S(s) = -omega c^{p-1} s exactly (the
    // time derivative is constant, which one RK4 step integrates exactly)
    const double c6 = std::pow(c, p - 1);
    const double gap_ref = -s * (std::pow(1.0 + delta, p - 1) - 1.0) * c6;
    for (std::size_t i = 0; i < S.size(); ++i) {
        CHECK(std::abs(S[i] - cplx(-s * c6, 0.0)) < 1e-13);
        CHECK(std::abs((St[i] - S[i]) - cplx(gap_ref, 0.0)) < 1e-12);
    }

    // delta = 0: the two integrations coincide bitwise
    const Field S0 = integrate_wkb(st, s, hc).back().S;
    CHECK(sup_diff(S0, S) == 0.0);
}

TEST_CASE("phase divergence: prediction accuracy and pi/2 gap") {
    HbarSequence seq{{0.76, 0.755, 0.75, 0.745, 0.74}};
    PhaseDivergenceConfig cfg;
    cfg.d = 1;
    cfg.grid = GridSpec{1, 128, 8.0};

    const ExperimentReport rep = phase_divergence_check(seq, cfg);
    REQUIRE(rep.verdicts.size() == 2);
    CHECK(rep.verdicts[0].pass);
    CHECK(rep.verdicts[1].pass);
    CHECK(rep.passed());

    const auto& gap = find_series(rep, "phase_gap_over_h").values;
    const auto& err = find_series(rep, "taylor_rel_err_core").values;
    const auto& delta = find_series(rep, "delta").values;
    const auto& s_h = find_series(rep, "s_h").values;
    REQUIRE(gap.size() == 5);

    // the gap grows with (p-1) log(1/hbar) past pi/2; the leading-order
    // prediction stays accurate to a few percent on the profile core
    CHECK(near(gap.front(), 1.74475, 2e-4));
    CHECK(near(gap.back(), 1.89942, 2e-4));
    for (std::size_t i = 1; i < gap.size(); ++i) CHECK(gap[i] > gap[i - 1]);
    for (double e : err) {
        CHECK(e > 0.0);
        CHECK(e < 0.07);
    }

    // delta s_h / h = log(1/hbar), independently of eps
    for (std::size_t i = 0; i < seq.values.size(); ++i) {
        const double h = std::pow(seq.values[i], cfg.beta);
        CHECK(near(delta[i] * s_h[i] / h, std::log(1.0 / seq.values[i]), 1e-12));
    }

    // reports are reproducible run to run
    const ExperimentReport rep2 = phase_divergence_check(seq, cfg);
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "nlslab-test-phase";
    fs::create_directories(dir);
    write_report_json(rep, (dir / "a.json").string());
    write_report_json(rep2, (dir / "b.json").string());
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    fs::remove_all(dir);
}

TEST_CASE("norm inflation, fast variant: signs and exponents") {
    // deep-hbar window so the nonlinear phase gradients outrun the datum's
    // own frequencies; predictions are +0.005 at t=0 and -0.01175 at s*
    HbarSequence seq{{0.008, 0.006, 0.0045, 0.0034, 0.0025, 0.0019}};
    Thm2Config cfg;
    cfg.d = 1;
    cfg.grid = GridSpec{1, 256, 10.0};
    cfg.dt = 2e-3;
    cfg.s_star = 0.7;
    cfg.slope_tol = 0.02;

    const ExperimentReport rep = thm2_run(seq, 0.05, 0.05, 0.005, cfg);
    REQUIRE(rep.fits.size() == 2);
    CHECK(near(rep.fits[0].predicted, 0.005, 1e-12));
    CHECK(near(rep.fits[1].predicted, -0.01175, 1e-12));
    CHECK(near(rep.fits[0].slope, 0.00890, 5e-4));
    CHECK(near(rep.fits[1].slope, -0.00868, 1e-3));
    CHECK(rep.fits[0].pass);
    CHECK(rep.fits[1].pass);
    CHECK(rep.verdicts[0].pass);  // positive at t=0
    CHECK(rep.verdicts[1].pass);  // negative at s*
    CHECK(rep.passed());
    CHECK(rep.notes.empty());
}

TEST_CASE("norm inflation, shifted observation time") {
    // observation at s = hbar^kappa s* weakens the inflation exponent to
    // gamma - (beta+1-kappa) rho + d/2 = -0.039
    HbarSequence seq{{0.20, 0.17, 0.145, 0.125, 0.105, 0.09}};
    Thm2Config cfg;
    cfg.d = 1;
    cfg.p = 11;
    cfg.grid = GridSpec{1, 256, 10.0};
    cfg.dt = 2e-3;
    cfg.s_star = 0.5;
    cfg.kappa = 0.22;
    cfg.slope_tol = 0.02;

    const ExperimentReport rep = thm2_run(seq, 0.05, 0.05, 0.01, cfg);
    REQUIRE(rep.fits.size() == 2);
    CHECK(near(rep.fits[1].predicted, -0.039, 1e-12));
    CHECK(near(rep.fits[0].slope, 0.01796, 1e-3));
    CHECK(near(rep.fits[1].slope, -0.03879, 1.5e-3));
    CHECK(rep.passed());

    // the observation time itself shrinks with hbar
    const auto& s_obs = find_series(rep, "s_obs").values;
    CHECK(near(s_obs.front(), std::pow(0.20, 0.22) * 0.5, 1e-12));
    for (std::size_t i = 1; i < s_obs.size(); ++i) CHECK(s_obs[i] < s_obs[i - 1]);
}

TEST_CASE("energy-space separation sweep at d = 3") {
    HbarSequence seq{{0.45, 0.40, 0.35, 0.30, 0.25, 0.20}};
    Thm1Config cfg;  // d=3, p=7, eps=0.3, N=48, L=8 defaults

    const ExperimentReport rep = thm1_run(seq, cfg);
    REQUIRE(rep.fits.size() == 2);
    REQUIRE(rep.verdicts.size() == 4);

    // difference exponents at t=0 (log-compensated): the L^{p+1} one is a
    // pure power law because the datum difference is exactly delta * u0
    CHECK(near(rep.fits[0].predicted, 0.14375, 1e-12));
    CHECK(near(rep.fits[1].predicted, 0.0375, 1e-12));
    CHECK(near(rep.fits[0].slope, 0.17561, 3e-3));
    CHECK(near(rep.fits[1].slope, 0.0375, 1e-9));
    CHECK(rep.fits[1].stderr_ < 1e-9);
    CHECK(rep.fits[0].pass);
    CHECK(rep.fits[1].pass);

    CHECK(rep.verdicts[0].pass);  // H+ bounded across the sweep
    CHECK(rep.verdicts[1].pass);  // compensated differences decreasing
    CHECK(rep.verdicts[3].pass);  // separation carried by phase, not modulus

    const auto& hplus = find_series(rep, "hplus_u0").values;
    CHECK(near(hplus.front(), 2.44942, 2e-3));
    CHECK(near(hplus.back(), 2.00559, 2e-3));

    // the perturbed data stay H+-bounded only pre-perturbation: the factor
    // (1+delta)^{p+1} in the potential grows as hbar shrinks
    const auto& hplus_t = find_series(rep, "hplus_u0_perturbed").values;
    CHECK(hplus_t.back() > 10.0 * hplus.back());

    // delta s_h / h = log(1/hbar) here as well
    const double beta = beta_thm1(3, 7);
    const auto& delta = find_series(rep, "delta").values;
    const auto& s_h = find_series(rep, "s_h").values;
    for (std::size_t i = 0; i < seq.values.size(); ++i) {
        const double h = std::pow(seq.values[i], beta);
        CHECK(near(delta[i] * s_h[i] / h, std::log(1.0 / seq.values[i]), 1e-12));
    }
    CHECK(near(delta.front(), 0.774952, 1e-5));

    // separation at s_h grows toward its hbar -> 0 constant but, at these
    // moderate hbar, dispersion over s_h ~ 0.9 still dilutes the large end
    // of the window below the 0.25 mark; the verdict reports that honestly
    const auto& sep = find_series(rep, "separation_lp1_sh").values;
    const auto& datum = find_series(rep, "datum_lp1").values;
    CHECK(near(datum.front(), 0.83925, 1e-4));
    CHECK(near(sep.front(), 0.130021, 2e-3));
    CHECK(near(sep.back(), 0.232024, 2e-3));
    for (std::size_t i = 1; i < sep.size(); ++i) CHECK(sep[i] > sep[i - 1]);
    CHECK(sep.back() > 0.25 * datum.back());
    CHECK(sep.front() < 0.25 * datum.front());
    CHECK_FALSE(rep.verdicts[2].pass);

    // the decreasing-difference window in Lebesgue scale ends before q = 9
    bool noted = false;
    for (const std::string& n : rep.notes)
        if (n.find("q = 8.5") != std::string::npos) noted = true;
    CHECK(noted);
}

TEST_CASE("report writers: json, csv, svg round trips") {
    ExperimentReport rep;
    rep.experiment = "demo";
    rep.hbars = {0.4, 0.3, 0.2, 0.1};
    rep.series.push_back({"alpha", {1.0, 2.0, 3.0, 4.0}});
    rep.series.push_back({"beta", {0.16, 0.09, 0.04, 0.01}});
    SlopeFit fit;
    fit.label = "beta exponent";
    fit.series = "beta";
    fit.slope = 2.0;
    fit.predicted = 2.0;
    fit.tolerance = 0.1;
    fit.pass = true;
    rep.fits.push_back(fit);
    rep.verdicts.push_back({"demo verdict", true});
    rep.notes.push_back("a note");

    CHECK(rep.passed());

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "nlslab-test-writers";
    fs::create_directories(dir);

    write_report_json(rep, (dir / "r.json").string());
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(j["experiment"] == "demo");
    CHECK(j["passed"] == true);
    CHECK(j["hbars"].size() == 4);
    CHECK(j["series"].size() == 2);
    CHECK(j["series"][1]["label"] == "beta");
    CHECK(near(j["fits"][0]["slope"].get<double>(), 2.0, 1e-15));
    CHECK(near(j["fits"][0]["predicted"].get<double>(), 2.0, 1e-15));
    CHECK(near(j["fits"][0]["tolerance"].get<double>(), 0.1, 1e-15));
    CHECK(j["verdicts"][0]["pass"] == true);
    CHECK(j["notes"].size() == 1);

    write_report_csv(rep, (dir / "r.csv").string());
    const std::string csv = slurp(dir / "r.csv");
    CHECK(csv.rfind("hbar,alpha,beta\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    write_report_svg(rep, (dir / "r.svg").string());
    const std::string svg = slurp(dir / "r.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    // shape errors and unwritable paths are rejected
    ExperimentReport bad = rep;
    bad.series[0].values.pop_back();
    CHECK_THROWS_AS(write_report_json(bad, (dir / "x.json").string()), ConfigError);
    CHECK_THROWS_AS(write_report_csv(bad, (dir / "x.csv").string()), ConfigError);
    CHECK_THROWS_AS(write_report_svg(bad, (dir / "x.svg").string()), ConfigError);
    CHECK_THROWS_AS(write_report_json(ExperimentReport{}, (dir / "x.json").string()),
                    ConfigError);
    CHECK_THROWS_AS(write_report_json(rep, "/nonexistent-dir/r.json"), RuntimeAbort);

    ExperimentReport failing = rep;
    failing.verdicts.push_back({"failing verdict", false});
    CHECK_FALSE(failing.passed());
    ExperimentReport failing2 = rep;
    failing2.fits[0].pass = false;
    CHECK_FALSE(failing2.passed());

    fs::remove_all(dir);
}

TEST_CASE("experiment configs reject bad parameters") {
    Thm1Config c1;
    CHECK_NOTHROW(c1.validate());
    c1.eps = 0.0;
    CHECK_THROWS_AS(c1.validate(), ConfigError);
    c1 = Thm1Config{};
    c1.p = 6;
    CHECK_THROWS_AS(c1.validate(), ConfigError);
    c1 = Thm1Config{};
    c1.d = 1;
    c1.grid = GridSpec{1, 64, 8.0};
    CHECK_THROWS_AS(c1.validate(), ConfigError);  // d(p-1) too small for beta > 0
    c1 = Thm1Config{};
    c1.grid = GridSpec{1, 64, 8.0};
    CHECK_THROWS_AS(c1.validate(), ConfigError);  // grid dimension mismatch
    c1 = Thm1Config{};
    c1.nu_fraction = 1.0;
    CHECK_THROWS_AS(c1.validate(), ConfigError);
    c1 = Thm1Config{};
    c1.q_list = {0.5};
    CHECK_THROWS_AS(c1.validate(), ConfigError);

    Thm2Config c2;
    CHECK_NOTHROW(c2.validate());
    c2.omega = 0.0;
    CHECK_THROWS_AS(c2.validate(), ConfigError);
    c2 = Thm2Config{};
    c2.kappa = -0.1;
    CHECK_THROWS_AS(c2.validate(), ConfigError);
    c2 = Thm2Config{};
    c2.s_star = 0.0;
    CHECK_THROWS_AS(c2.validate(), ConfigError);

    PhaseDivergenceConfig c3;
    CHECK_NOTHROW(c3.validate());
    c3.beta = 0.0;
    CHECK_THROWS_AS(c3.validate(), ConfigError);
    c3 = PhaseDivergenceConfig{};
    c3.core_level = 1.0;
    CHECK_THROWS_AS(c3.validate(), ConfigError);
    c3 = PhaseDivergenceConfig{};
    c3.rel_tol = 0.0;
    CHECK_THROWS_AS(c3.validate(), ConfigError);
}
