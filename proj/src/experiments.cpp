#include "nlslab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "json.hpp"
#include "nlslab/kernels.hpp"

namespace nlslab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt2(const char* f, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// the default concentration profile a0(z) = e^{-z^2}
Field gaussian_profile(const GridSpec& g) {
    return sample(g, [&](const std::array<double, 3>& z) {
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
        return cplx(std::exp(-r2), 0.0);
    });
}

Field scaled(const Field& f, double c) {
    Field out = f;
    kernels::cscale(out.size(), out.v.data(), cplx(c, 0.0));
    return out;
}

Field difference(const Field& a, const Field& b) {
    Field out = a;
    kernels::caxpy(out.size(), out.v.data(), cplx(-1.0, 0.0), b.v.data());
    return out;
}

double delta_of(double hbar, double eps, double beta) {
    return std::pow(hbar, eps * beta) * std::log(1.0 / hbar);
}

// step small enough for the solver's own acceptance gates, with headroom
double budgeted_dt(double dt, const GridSpec& g, double h, int p, double omega,
                   double sup0) {
    if (omega != 0.0 && sup0 > 0.0)
        dt = std::min(dt, 0.45 * h / (std::abs(omega) * std::pow(sup0, p - 1)));
    const double xi2 = g.d * g.xi_max() * g.xi_max();
    dt = std::min(dt, 0.45 * kPi / (h * xi2));
    return dt;
}

// focusing runs must stay below half the amplitude-doubling proxy time
void enforce_focusing_proxy(const Field& v0, int p, double omega, double s_end,
                            double dt) {
    if (omega >= 0.0 || s_end <= 0.0) return;
    WkbState st;
    st.S = Field(v0.grid);
    st.amps = {v0};
    st.p = p;
    st.omega = omega;
    HierarchyConfig hc;
    hc.dt = std::max(dt, 1e-3);
    hc.closure_order = 0;
    hc.s_max = 2.0 * s_end * (1.0 + 1e-12);
    const double proxy = blowup_proxy_time(st, hc);
    if (s_end > 0.5 * proxy)
        throw ConfigError("experiments: focusing run to s = " + fmt("%.6g", s_end) +
                          " exceeds half the amplitude-doubling proxy " +
                          fmt("%.6g", proxy));
}

SlopeFit make_fit(const std::string& label, const std::string& series_label,
                  const std::vector<double>& hbars, const std::vector<double>& values,
                  double predicted, double tol, std::vector<std::string>& notes) {
    SlopeFit fit;
    fit.label = label;
    fit.series = series_label;
    fit.predicted = predicted;
    fit.tolerance = tol;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < hbars.size(); ++i)
        if (std::isfinite(values[i]) && values[i] > 0.0)
            pts.push_back({hbars[i], values[i]});
    if (pts.size() < 4) {
        notes.push_back("fit '" + label + "': fewer than 4 usable points, marked failed");
        return fit;
    }
    const auto [slope, err] = fit_exponent(pts);
    fit.slope = slope;
    fit.stderr_ = err;
    fit.pass = std::abs(slope - predicted) <= tol;
    return fit;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(std::isfinite(v[i - 1]) && std::isfinite(v[i]) && v[i] < v[i - 1]))
            return false;
    return true;
}

}  // namespace

// --- sequence / report plumbing ----------------------------------------------

void HbarSequence::validate() const {
    if (values.size() < 4)
        throw ConfigError("hbar sequence: need at least 4 entries for slope fits");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0 && values[i] < 1.0))
            throw ConfigError("hbar sequence: entries must lie in (0,1)");
        if (i > 0 && !(values[i] < values[i - 1]))
            throw ConfigError("hbar sequence: entries must decrease strictly");
    }
}

std::vector<double> HbarSequence::h_values(double beta) const {
    validate();
    if (!(beta > 0.0)) throw ConfigError("hbar sequence: beta must be positive");
    std::vector<double> out;
    out.reserve(values.size());
    for (double hb : values) out.push_back(std::pow(hb, beta));
    return out;
}

bool ExperimentReport::passed() const {
    for (const SlopeFit& f : fits)
        if (!f.pass) return false;
    for (const Verdict& v : verdicts)
        if (!v.pass) return false;
    return true;
}

std::pair<double, double> fit_exponent(
    const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4)
        throw ConfigError("fit_exponent: need at least 4 points");
    const std::size_t n = points.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(points[i].first > 0.0) || !(points[i].second > 0.0))
            throw ConfigError("fit_exponent: points must be positive");
        x[i] = std::log(points[i].first);
        y[i] = std::log(points[i].second);
    }
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= (double)n;
    ym /= (double)n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw ConfigError("fit_exponent: hbar values must differ");
    const double slope = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - ym - slope * (x[i] - xm);
        ssr += r * r;
    }
    const double stderr_ = std::sqrt(ssr / ((double)n - 2.0) / sxx);
    return {slope, stderr_};
}

// --- initial data --------------------------------------------------------------

Field initial_datum(const Field& a0, const SemiclassicalParams& pr, double eta,
                    bool use_cutoff, double r, std::vector<std::string>* warnings) {
    a0.grid.validate();
    pr.validate();
    if (a0.grid.d != pr.d) throw ConfigError("initial_datum: dimension mismatch");
    if (!use_cutoff) return a0;
    if (!(eta > 0.0 && eta < 1.0))
        throw ConfigError("initial_datum: eta must lie in (0,1)");
    if (!(r > 0.0)) throw ConfigError("initial_datum: cutoff radius must be positive");

    const double scale = std::pow(pr.hbar, 1.0 - eta);
    const GridSpec& g = a0.grid;
    Field out(g);
    for (std::size_t i = 0; i < g.total(); ++i) {
        const auto idx = decode_index(g, i);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            const double z = g.coord(idx[a]);
            r2 += z * z;
        }
        const double xi = scale * std::sqrt(r2);
        double chi;
        if (xi <= 0.5 * r) {
            chi = 1.0;
        } else if (xi >= r) {
            chi = 0.0;
        } else {
            const double q = 2.0 * xi / r - 1.0;
            chi = std::exp(1.0 - 1.0 / (1.0 - q * q));
        }
        out.v[i] = chi * a0.v[i];
    }

    const double m_full = lebesgue_norm(a0, 2.0);
    const double m_cut = lebesgue_norm(out, 2.0);
    if (m_full > 0.0) {
        const double lost = (m_full * m_full - m_cut * m_cut) / (m_full * m_full);
        if (lost > 1e-8 && warnings != nullptr)
            warnings->push_back(
                fmt2("initial_datum: cutoff removed fraction %.3e of the squared mass "
                     "(hbar = %.6g)",
                     lost, pr.hbar));
    }
    return out;
}

// --- energy-space separation ---------------------------------------------------

void Thm1Config::validate() const {
    if (d < 1) throw ConfigError("thm1: d must be >= 1");
    if (p < 3 || p % 2 == 0) throw ConfigError("thm1: p must be odd and >= 3");
    if (omega != 1.0 && omega != -1.0) throw ConfigError("thm1: omega must be +1 or -1");
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("thm1: eps must lie in (0,1)");
    if (!(nu_fraction > 0.0 && nu_fraction < 1.0))
        throw ConfigError("thm1: nu_fraction must lie in (0,1)");
    if (use_cutoff && !(eta > 0.0 && eta < 1.0))
        throw ConfigError("thm1: eta must lie in (0,1)");
    if (!(dt > 0.0)) throw ConfigError("thm1: dt must be positive");
    if (!(sep_threshold > 0.0)) throw ConfigError("thm1: sep_threshold must be positive");
    if (!(slope_tol_h > 0.0 && slope_tol_l > 0.0))
        throw ConfigError("thm1: slope tolerances must be positive");
    if (!beta_thm1_positive(d, p))
        throw ConfigError("thm1: (d,p) not supercritical, p (d-2) must exceed d + 2");
    grid.validate();
    if (grid.d != d) throw ConfigError("thm1: grid dimension mismatch");
    for (double q : q_list)
        if (!(q >= 1.0)) throw ConfigError("thm1: Lebesgue exponents must be >= 1");
}

ExperimentReport thm1_run(const HbarSequence& seq, const Thm1Config& cfg) {
    seq.validate();
    cfg.validate();

    const int n = (int)seq.values.size();
    const Field a0 = gaussian_profile(cfg.grid);
    std::vector<double> qs = cfg.q_list;
    if (qs.empty()) qs = {(double)(cfg.p + 1), cfg.p + 1.5, (double)(cfg.p + 2)};

    const double beta = beta_thm1(cfg.d, cfg.p);
    const double gamma = -(double)cfg.d / (double)(cfg.p + 1);
    const double nu = cfg.nu_fraction * cfg.eps * beta;

    // per-hbar slots; NaN marks an aborted or rejected run
    std::vector<double> hplus0(n, kNaN), hplus0t(n, kNaN), diff_h(n, kNaN);
    std::vector<std::vector<double>> diff_q((std::size_t)qs.size(),
                                            std::vector<double>(n, kNaN));
    std::vector<double> sep(n, kNaN), datum_norm(n, kNaN);
    std::vector<double> mod_gap(n, kNaN), mod_bound(n, kNaN);
    std::vector<double> deltas(n, kNaN), s_hs(n, kNaN), dts(n, kNaN);
    std::vector<std::vector<std::string>> note_slots(n);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const double hbar = seq.values[i];
            const SemiclassicalParams pr =
                make_params_thm1(cfg.d, cfg.p, cfg.omega, hbar);
            const double h = pr.h();
            const double delta = delta_of(hbar, cfg.eps, beta);
            const double s_h = std::pow(h, 1.0 - cfg.eps);
            deltas[i] = delta;
            s_hs[i] = s_h;

            const Field v0 = initial_datum(a0, pr, cfg.eta, cfg.use_cutoff,
                                           cfg.cutoff_r, &note_slots[i]);
            const Field v0t = scaled(v0, 1.0 + delta);

            hplus0[i] = hplus_energy(v0, pr, true);
            hplus0t[i] = hplus_energy(v0t, pr, true);
            const Field d0 = difference(v0t, v0);
            diff_h[i] = physical_sobolev_norm(d0, pr, 1.0 + nu);
            for (std::size_t k = 0; k < qs.size(); ++k)
                diff_q[k][i] = physical_lebesgue_norm(d0, pr, qs[k]);
            datum_norm[i] = physical_lebesgue_norm(v0, pr, (double)(cfg.p + 1));

            enforce_focusing_proxy(v0t, cfg.p, cfg.omega, s_h, cfg.dt);

            SolveConfig sc;
            sc.h = h;
            sc.p = cfg.p;
            sc.omega = cfg.omega;
            sc.s_end = s_h;
            sc.record_every = 1 << 30;
            sc.dt = budgeted_dt(cfg.dt, cfg.grid, h, cfg.p, cfg.omega,
                                sup_norm(v0t));
            dts[i] = sc.dt;

            const PdeTrajectory tr = split_step_solve(v0, sc);
            const PdeTrajectory trt = split_step_solve(v0t, sc);
            if (tr.aborted || trt.aborted) {
                note_slots[i].push_back(
                    fmt2("thm1: solver aborted (hbar = %.6g, s = %.6g)", hbar,
                         tr.aborted ? tr.abort_s : trt.abort_s));
                continue;
            }

            const Field& vf = tr.slices.back();
            const Field& vft = trt.slices.back();
            sep[i] = physical_lebesgue_norm(difference(vft, vf), pr,
                                            (double)(cfg.p + 1));
            double gap = 0.0, supv = 0.0;
            for (std::size_t m = 0; m < vf.size(); ++m) {
                gap = std::max(gap, std::abs(std::abs(vft.v[m]) - std::abs(vf.v[m])));
                supv = std::max(supv, std::abs(vf.v[m]));
            }
            mod_gap[i] = gap;
            mod_bound[i] = 3.0 * delta * supv;
        } catch (const std::exception& e) {
            note_slots[i].push_back("thm1: hbar = " + fmt("%.6g", seq.values[i]) +
                                    " rejected: " + e.what());
        }
    }

    ExperimentReport rep;
    rep.experiment = "thm1";
    rep.hbars = seq.values;
    for (const auto& slot : note_slots)
        rep.notes.insert(rep.notes.end(), slot.begin(), slot.end());

    // the perturbation carries a log(1/hbar) factor; dividing it out leaves
    // the pure powers that the fits are checked against
    std::vector<double> comp_h(n, kNaN), comp_l(n, kNaN);
    std::vector<std::vector<double>> comp_q((std::size_t)qs.size(),
                                            std::vector<double>(n, kNaN));
    for (int i = 0; i < n; ++i) {
        const double logf = std::log(1.0 / seq.values[i]);
        comp_h[i] = diff_h[i] / logf;
        comp_l[i] = diff_q[0][i] / logf;
        for (std::size_t k = 0; k < qs.size(); ++k)
            comp_q[k][i] = diff_q[k][i] / logf;
    }

    rep.series.push_back({"hplus_u0", hplus0});
    rep.series.push_back({"hplus_u0_perturbed", hplus0t});
    rep.series.push_back({"diff_h1nu_t0", diff_h});
    rep.series.push_back({"diff_h1nu_t0_compensated", comp_h});
    for (std::size_t k = 0; k < qs.size(); ++k) {
        rep.series.push_back({"diff_l" + fmt("%g", qs[k]) + "_t0", diff_q[k]});
        rep.series.push_back(
            {"diff_l" + fmt("%g", qs[k]) + "_t0_compensated", comp_q[k]});
    }
    rep.series.push_back({"separation_lp1_sh", sep});
    rep.series.push_back({"datum_lp1", datum_norm});
    rep.series.push_back({"modulus_gap_sh", mod_gap});
    rep.series.push_back({"modulus_bound_sh", mod_bound});
    rep.series.push_back({"delta", deltas});
    rep.series.push_back({"s_h", s_hs});
    rep.series.push_back({"dt_used", dts});

    rep.fits.push_back(make_fit(
        "compensated difference exponent in H^(1+nu) at t = 0",
        "diff_h1nu_t0_compensated", seq.values, comp_h,
        gamma + 0.5 * cfg.d - (1.0 + nu) + cfg.eps * beta, cfg.slope_tol_h, rep.notes));
    rep.fits.push_back(make_fit(
        "compensated difference exponent in L^(p+1) at t = 0",
        "diff_l" + fmt("%g", qs[0]) + "_t0_compensated", seq.values, comp_l,
        gamma + (double)cfg.d / qs[0] + cfg.eps * beta, cfg.slope_tol_l, rep.notes));

    double hp_max = 0.0, hp_min = std::numeric_limits<double>::infinity();
    bool hp_ok = true;
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(hplus0[i])) {
            hp_ok = false;
            break;
        }
        hp_max = std::max(hp_max, hplus0[i]);
        hp_min = std::min(hp_min, hplus0[i]);
    }
    rep.verdicts.push_back(
        {"hplus energy bounded across the sweep (max/min < 4)",
         hp_ok && hp_min > 0.0 && hp_max / hp_min < 4.0});
    rep.verdicts.push_back({"compensated difference norms decrease with hbar",
                            strictly_decreasing(comp_h) && strictly_decreasing(comp_l)});
    bool sep_ok = true, mod_ok = true;
    for (int i = 0; i < n; ++i) {
        sep_ok = sep_ok && std::isfinite(sep[i]) &&
                 sep[i] >= cfg.sep_threshold * datum_norm[i];
        mod_ok = mod_ok && std::isfinite(mod_gap[i]) && mod_gap[i] < mod_bound[i];
    }
    rep.verdicts.push_back(
        {"separation at s_h exceeds " + fmt("%g", cfg.sep_threshold) +
             " of the datum L^(p+1) norm at every hbar",
         sep_ok});
    rep.verdicts.push_back(
        {"pointwise moduli differ by less than 3 delta max|v| at s_h", mod_ok});

    // decreasing Lebesgue window: report the largest exponent that still
    // shows decay of the compensated difference
    double best_q = 0.0;
    for (std::size_t k = 0; k < qs.size(); ++k)
        if (strictly_decreasing(comp_q[k])) best_q = std::max(best_q, qs[k]);
    rep.notes.push_back(
        best_q > 0.0
            ? "largest tested Lebesgue exponent with decreasing compensated "
              "differences at t = 0: q = " +
                  fmt("%g", best_q)
            : "no tested Lebesgue exponent shows decreasing compensated differences");
    return rep;
}

// --- Sobolev norm inflation ------------------------------------------------------

void Thm2Config::validate() const {
    if (d < 1) throw ConfigError("thm2: d must be >= 1");
    if (p < 3 || p % 2 == 0) throw ConfigError("thm2: p must be odd and >= 3");
    if (omega != 1.0 && omega != -1.0) throw ConfigError("thm2: omega must be +1 or -1");
    if (!(dt > 0.0)) throw ConfigError("thm2: dt must be positive");
    if (!(s_star > 0.0)) throw ConfigError("thm2: s_star must be positive");
    if (!(kappa >= 0.0)) throw ConfigError("thm2: kappa must be >= 0");
    if (!(slope_tol > 0.0)) throw ConfigError("thm2: slope_tol must be positive");
    grid.validate();
    if (grid.d != d) throw ConfigError("thm2: grid dimension mismatch");
}

void thm2_validate_window(int d, int p, double sigma, double rho, double eps) {
    if (p < 3 || p % 2 == 0)
        throw ConfigError("thm2 window: p must be odd and >= 3");
    const double half_d = 0.5 * (double)d;
    const double sigma_c = half_d - 2.0 / (double)(p - 1);
    if (!(eps > 0.0)) throw ConfigError("thm2 window: eps must be positive");
    if (!(sigma > 0.0)) throw ConfigError("thm2 window: sigma must be positive");
    if (!(sigma < sigma_c))
        throw ConfigError("thm2 window: sigma must lie below d/2 - 2/(p-1) = " +
                          fmt("%.6g", sigma_c));
    if (!(sigma < sigma_c - eps))
        throw ConfigError(
            "thm2 window: eps too large, sigma + eps must stay below d/2 - 2/(p-1)");
    if (!(rho <= sigma)) throw ConfigError("thm2 window: rho must not exceed sigma");
    const double lower = sigma / (0.5 * (double)(p - 1) * (half_d - sigma));
    if (!(rho > lower))
        throw ConfigError(
            "thm2 window: rho must strictly exceed sigma / (((p-1)/2)(d/2-sigma)) = " +
            fmt("%.6g", lower));
    const double lower_eps =
        (sigma + eps) / (0.5 * (double)(p - 1) * (half_d - sigma - eps));
    if (!(rho > lower_eps))
        throw ConfigError(
            "thm2 window: rho must strictly exceed (sigma+eps) / "
            "(((p-1)/2)(d/2-sigma-eps)) = " +
            fmt("%.6g", lower_eps));
}

double thm2_slope_at_zero(int d, int p, double sigma, double eps) {
    thm2_validate_window(d, p, sigma, sigma, eps);  // rho = sigma is always admissible
    const double gamma = sigma - 0.5 * (double)d + eps;
    return gamma - sigma + 0.5 * (double)d;
}

double thm2_slope_at_obs(int d, int p, double sigma, double rho, double eps,
                         double kappa) {
    thm2_validate_window(d, p, sigma, rho, eps);
    const double gamma = sigma - 0.5 * (double)d + eps;
    const double beta = -0.5 * (double)(p - 1) * gamma - 1.0;
    return gamma - (beta + 1.0 - kappa) * rho + 0.5 * (double)d;
}

ExperimentReport thm2_run(const HbarSequence& seq, double sigma, double rho, double eps,
                          const Thm2Config& cfg) {
    seq.validate();
    cfg.validate();
    thm2_validate_window(cfg.d, cfg.p, sigma, rho, eps);

    const int n = (int)seq.values.size();
    const Field a0 = gaussian_profile(cfg.grid);

    std::vector<double> norm0(n, kNaN), norm1(n, kNaN), s_obs(n, kNaN), dts(n, kNaN);
    std::vector<std::vector<std::string>> note_slots(n);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const double hbar = seq.values[i];
            const SemiclassicalParams pr =
                make_params_thm2(cfg.d, cfg.p, cfg.omega, sigma, eps, hbar);
            const double h = pr.h();
            const double s_end = std::pow(hbar, cfg.kappa) * cfg.s_star;
            s_obs[i] = s_end;

            norm0[i] = physical_sobolev_norm(a0, pr, sigma);
            enforce_focusing_proxy(a0, cfg.p, cfg.omega, s_end, cfg.dt);

            SolveConfig sc;
            sc.h = h;
            sc.p = cfg.p;
            sc.omega = cfg.omega;
            sc.s_end = s_end;
            sc.record_every = 1 << 30;
            sc.dt = budgeted_dt(cfg.dt, cfg.grid, h, cfg.p, cfg.omega, sup_norm(a0));
            dts[i] = sc.dt;

            const PdeTrajectory tr = split_step_solve(a0, sc);
            if (tr.aborted) {
                note_slots[i].push_back(
                    fmt2("thm2: solver aborted (hbar = %.6g, s = %.6g)", hbar,
                         tr.abort_s));
                continue;
            }
            norm1[i] = physical_sobolev_norm(tr.slices.back(), pr, rho);
        } catch (const std::exception& e) {
            note_slots[i].push_back("thm2: hbar = " + fmt("%.6g", seq.values[i]) +
                                    " rejected: " + e.what());
        }
    }

    ExperimentReport rep;
    rep.experiment = "thm2";
    rep.hbars = seq.values;
    for (const auto& slot : note_slots)
        rep.notes.insert(rep.notes.end(), slot.begin(), slot.end());
    rep.series.push_back({"hsigma_t0", norm0});
    rep.series.push_back({"hrho_obs", norm1});
    rep.series.push_back({"s_obs", s_obs});
    rep.series.push_back({"dt_used", dts});

    rep.fits.push_back(make_fit("initial H^sigma exponent", "hsigma_t0", seq.values,
                                norm0, thm2_slope_at_zero(cfg.d, cfg.p, sigma, eps),
                                cfg.slope_tol, rep.notes));
    rep.fits.push_back(
        make_fit("observation-time H^rho exponent", "hrho_obs", seq.values, norm1,
                 thm2_slope_at_obs(cfg.d, cfg.p, sigma, rho, eps, cfg.kappa),
                 cfg.slope_tol, rep.notes));

    rep.verdicts.push_back(
        {"initial exponent positive (norm vanishes)", rep.fits[0].slope > 0.0});
    rep.verdicts.push_back(
        {"observation exponent negative (norm inflates)", rep.fits[1].slope < 0.0});
    return rep;
}

// --- phase divergence -------------------------------------------------------------

void PhaseDivergenceConfig::validate() const {
    if (d < 1) throw ConfigError("phase check: d must be >= 1");
    if (p < 3 || p % 2 == 0) throw ConfigError("phase check: p must be odd and >= 3");
    if (omega != 1.0 && omega != -1.0)
        throw ConfigError("phase check: omega must be +1 or -1");
    if (!(beta > 0.0)) throw ConfigError("phase check: beta must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("phase check: eps must lie in (0,1)");
    if (!(dt > 0.0)) throw ConfigError("phase check: dt must be positive");
    if (!(rel_tol > 0.0)) throw ConfigError("phase check: rel_tol must be positive");
    if (!(core_level > 0.0 && core_level < 1.0))
        throw ConfigError("phase check: core_level must lie in (0,1)");
    grid.validate();
    if (grid.d != d) throw ConfigError("phase check: grid dimension mismatch");
}

ExperimentReport phase_divergence_check(const HbarSequence& seq,
                                        const PhaseDivergenceConfig& cfg) {
    seq.validate();
    cfg.validate();

    const int n = (int)seq.values.size();
    const Field a0 = gaussian_profile(cfg.grid);

    // core mask and leading prediction shape: a0^{p-1}, real by construction
    std::vector<double> shape(a0.size());
    double shape_max = 0.0;
    for (std::size_t m = 0; m < a0.size(); ++m) {
        shape[m] = std::pow(std::abs(a0.v[m]), cfg.p - 1);
        shape_max = std::max(shape_max, shape[m]);
    }

    std::vector<double> gap(n, kNaN), rel_err(n, kNaN), deltas(n, kNaN), s_hs(n, kNaN);
    std::vector<std::vector<std::string>> note_slots(n);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const double hbar = seq.values[i];
            const double h = std::pow(hbar, cfg.beta);
            const double delta = delta_of(hbar, cfg.eps, cfg.beta);
            const double s_h = std::pow(h, 1.0 - cfg.eps);
            deltas[i] = delta;
            s_hs[i] = s_h;

            WkbState st;
            st.S = Field(cfg.grid);
            st.amps = {a0};
            st.p = cfg.p;
            st.omega = cfg.omega;
            WkbState stt = st;
            stt.amps = {scaled(a0, 1.0 + delta)};

            HierarchyConfig hc;
            hc.dt = cfg.dt;
            hc.closure_order = 0;
            hc.s_max = std::max(0.2, 2.0 * s_h);
            if (cfg.omega < 0.0) {
                const double proxy = blowup_proxy_time(stt, hc);
                if (s_h > 0.5 * proxy)
                    throw ConfigError(
                        "phase check: focusing run exceeds half the "
                        "amplitude-doubling proxy " +
                        fmt("%.6g", proxy));
            }

            const Field S = integrate_wkb(st, s_h, hc).back().S;
            const Field St = integrate_wkb(stt, s_h, hc).back().S;

            const double lead = -cfg.omega * (double)(cfg.p - 1) * delta * s_h;
            double g = 0.0, re = 0.0;
            for (std::size_t m = 0; m < S.size(); ++m) {
                const double dS = St.v[m].real() - S.v[m].real();
                g = std::max(g, std::abs(dS) / h);
                if (shape[m] > cfg.core_level * shape_max) {
                    const double pred = lead * shape[m];
                    re = std::max(re, std::abs(dS - pred) / std::abs(pred));
                }
            }
            gap[i] = g;
            rel_err[i] = re;
        } catch (const std::exception& e) {
            note_slots[i].push_back("phase check: hbar = " +
                                    fmt("%.6g", seq.values[i]) + " rejected: " +
                                    e.what());
        }
    }

    ExperimentReport rep;
    rep.experiment = "phase_divergence";
    rep.hbars = seq.values;
    for (const auto& slot : note_slots)
        rep.notes.insert(rep.notes.end(), slot.begin(), slot.end());
    rep.series.push_back({"phase_gap_over_h", gap});
    rep.series.push_back({"taylor_rel_err_core", rel_err});
    rep.series.push_back({"delta", deltas});
    rep.series.push_back({"s_h", s_hs});

    bool pred_ok = true;
    for (int i = 0; i < n; ++i)
        pred_ok = pred_ok && std::isfinite(rel_err[i]) && rel_err[i] <= cfg.rel_tol;
    rep.verdicts.push_back(
        {"leading phase prediction within " + fmt("%g", cfg.rel_tol) +
             " on the profile core at every hbar",
         pred_ok});
    rep.verdicts.push_back(
        {"phase gap reaches pi/2 at the smallest hbar",
         std::isfinite(gap[n - 1]) && gap[n - 1] >= 0.5 * kPi});
    return rep;
}

// --- artifact writers ---------------------------------------------------------------

namespace {

void check_report_shape(const ExperimentReport& rep) {
    if (rep.hbars.empty()) throw ConfigError("report: empty hbar list");
    for (const NormSeries& s : rep.series)
        if (s.values.size() != rep.hbars.size())
            throw ConfigError("report: series '" + s.label +
                              "' length does not match the hbar list");
}

nlohmann::json report_json(const ExperimentReport& rep) {
    nlohmann::json j;
    j["experiment"] = rep.experiment;
    j["hbars"] = rep.hbars;
    j["passed"] = rep.passed();
    j["series"] = nlohmann::json::array();
    for (const NormSeries& s : rep.series)
        j["series"].push_back({{"label", s.label}, {"values", s.values}});
    j["fits"] = nlohmann::json::array();
    for (const SlopeFit& f : rep.fits)
        j["fits"].push_back({{"label", f.label},
                             {"series", f.series},
                             {"slope", f.slope},
                             {"stderr", f.stderr_},
                             {"predicted", f.predicted},
                             {"tolerance", f.tolerance},
                             {"pass", f.pass}});
    j["verdicts"] = nlohmann::json::array();
    for (const Verdict& v : rep.verdicts)
        j["verdicts"].push_back({{"label", v.label}, {"pass", v.pass}});
    j["notes"] = rep.notes;
    return j;
}

}  // namespace

void write_report_json(const ExperimentReport& rep, const std::string& path) {
    check_report_shape(rep);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw RuntimeAbort("report: cannot open " + path);
    const std::string text = report_json(rep).dump(2) + "\n";
    const std::size_t put = std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    if (put != text.size()) throw RuntimeAbort("report: short write to " + path);
}

void write_report_csv(const ExperimentReport& rep, const std::string& path) {
    check_report_shape(rep);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw RuntimeAbort("report: cannot open " + path);
    std::fprintf(f, "hbar");
    for (const NormSeries& s : rep.series) std::fprintf(f, ",%s", s.label.c_str());
    std::fprintf(f, "\n");
    for (std::size_t i = 0; i < rep.hbars.size(); ++i) {
        std::fprintf(f, "%.17g", rep.hbars[i]);
        for (const NormSeries& s : rep.series) std::fprintf(f, ",%.17g", s.values[i]);
        std::fprintf(f, "\n");
    }
    if (std::ferror(f)) {
        std::fclose(f);
        throw RuntimeAbort("report: write failure on " + path);
    }
    std::fclose(f);
}

void write_report_svg(const ExperimentReport& rep, const std::string& path) {
    check_report_shape(rep);
    const double W = 720.0, H = 540.0, M = 70.0;

    // plotted points: log10 of every positive finite entry
    struct Pt {
        double x, y;
    };
    std::vector<std::vector<Pt>> lines;
    std::vector<std::string> labels;
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    bool any = false;
    for (const NormSeries& s : rep.series) {
        std::vector<Pt> pts;
        for (std::size_t i = 0; i < rep.hbars.size(); ++i) {
            if (!(std::isfinite(s.values[i]) && s.values[i] > 0.0)) continue;
            const Pt p{std::log10(rep.hbars[i]), std::log10(s.values[i])};
            if (!any) {
                x0 = x1 = p.x;
                y0 = y1 = p.y;
                any = true;
            }
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
            pts.push_back(p);
        }
        if (pts.size() >= 2) {
            lines.push_back(pts);
            labels.push_back(s.label);
        }
    }
    if (!any) throw ConfigError("report: no positive data to plot");
    if (x1 - x0 < 1e-12) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double padx = 0.05 * (x1 - x0), pady = 0.05 * (y1 - y0);
    x0 -= padx;
    x1 += padx;
    y0 -= pady;
    y1 += pady;
    const auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2.0 * M); };
    const auto py = [&](double y) {
        return H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const std::size_t ncol = sizeof(palette) / sizeof(palette[0]);

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw RuntimeAbort("report: cannot open " + path);
    std::fprintf(f,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                 "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                 W, H, W, H);
    std::fprintf(f, "<rect width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", W, H);
    std::fprintf(f,
                 "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                 "fill=\"none\" stroke=\"black\"/>\n",
                 M, M, W - 2.0 * M, H - 2.0 * M);
    std::fprintf(f,
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                 "text-anchor=\"middle\">log10 hbar</text>\n",
                 W / 2.0, H - M / 3.0);
    std::fprintf(f,
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
                 "transform=\"rotate(-90 %.1f %.1f)\">log10 value</text>\n",
                 M / 3.0, H / 2.0, M / 3.0, H / 2.0);
    std::fprintf(f, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\">%.3g</text>\n", M,
                 H - M + 14.0, x0);
    std::fprintf(f,
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" "
                 "text-anchor=\"end\">%.3g</text>\n",
                 W - M, H - M + 14.0, x1);
    std::fprintf(f, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\">%.3g</text>\n", 6.0,
                 H - M, y0);
    std::fprintf(f, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\">%.3g</text>\n", 6.0,
                 M + 4.0, y1);

    for (std::size_t k = 0; k < lines.size(); ++k) {
        const char* col = palette[k % ncol];
        std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" points=\"", col);
        for (const Pt& p : lines[k]) std::fprintf(f, "%.2f,%.2f ", px(p.x), py(p.y));
        std::fprintf(f, "\"/>\n");
        for (const Pt& p : lines[k])
            std::fprintf(f, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n",
                         px(p.x), py(p.y), col);
        std::fprintf(f,
                     "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" "
                     "fill=\"%s\">%s</text>\n",
                     W - M + 4.0, M + 14.0 * (double)(k + 1), col, labels[k].c_str());
    }

    // fitted (solid) and predicted (dashed) lines through each fit's centroid
    for (const SlopeFit& fit : rep.fits) {
        const NormSeries* src = nullptr;
        for (const NormSeries& s : rep.series)
            if (s.label == fit.series) src = &s;
        if (!src) continue;
        double cx = 0.0, cy = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i < rep.hbars.size(); ++i) {
            if (!(std::isfinite(src->values[i]) && src->values[i] > 0.0)) continue;
            cx += std::log10(rep.hbars[i]);
            cy += std::log10(src->values[i]);
            ++cnt;
        }
        if (cnt < 2) continue;
        cx /= cnt;
        cy /= cnt;
        const auto draw = [&](double slope, const char* dash) {
            const double ya = cy + slope * (x0 - cx), yb = cy + slope * (x1 - cx);
            std::fprintf(f,
                         "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                         "stroke=\"black\" stroke-width=\"0.8\"%s/>\n",
                         px(x0), py(ya), px(x1), py(yb), dash);
        };
        draw(fit.slope, "");
        draw(fit.predicted, " stroke-dasharray=\"6 4\"");
    }
    std::fprintf(f, "</svg>\n");
    if (std::ferror(f)) {
        std::fclose(f);
        throw RuntimeAbort("report: write failure on " + path);
    }
    std::fclose(f);
}

}  // namespace nlslab
