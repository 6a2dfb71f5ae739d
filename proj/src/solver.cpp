#include "nlslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "nlslab/kernels.hpp"

namespace nlslab {

void SolveConfig::validate() const {
    if (!std::isfinite(h) || h <= 0.0 || h > 1.0)
        throw ConfigError("solver: h must lie in (0, 1], got " + std::to_string(h));
    if (p < 3 || p % 2 == 0)
        throw ConfigError("solver: p must be an odd integer >= 3, got " + std::to_string(p));
    if (omega != 1.0 && omega != -1.0 && omega != 0.0)
        throw ConfigError("solver: omega must be +1, -1 or 0, got " + std::to_string(omega));
    if (!std::isfinite(dt) || dt <= 0.0)
        throw ConfigError("solver: dt must be positive, got " + std::to_string(dt));
    if (!std::isfinite(s_end) || s_end < 0.0)
        throw ConfigError("solver: s_end must be >= 0, got " + std::to_string(s_end));
    if (record_every < 1)
        throw ConfigError("solver: record_every must be >= 1, got " +
                          std::to_string(record_every));
}

namespace {

// A linear blend (1-th) a + th b of two fields, used to resample the ansatz
// trajectory onto the solver's time grid.
Field lerp_field(const Field& a, const Field& b, double th) {
    Field out = a;
    kernels::cscale(out.v.size(), out.v.data(), cplx(1.0 - th, 0.0));
    kernels::caxpy(out.v.size(), out.v.data(), cplx(th, 0.0), b.v.data());
    return out;
}

}  // namespace

PdeTrajectory split_step_solve(const Field& v0, const SolveConfig& cfg) {
    cfg.validate();
    const GridSpec& g = v0.grid;
    g.validate();
    if (v0.v.size() != g.total())
        throw ConfigError("solver: initial data length does not match its grid");

    PdeTrajectory out;
    if (!all_finite(v0)) {
        // no valid slice exists at all
        out.aborted = true;
        out.abort_s = 0.0;
        return out;
    }

    const double tail = tail_energy_fraction(v0);
    if (tail >= 1e-6)
        throw ConfigError(
            "solver: initial data unresolved (top-third spectral energy fraction " +
            std::to_string(tail) + ")");

    // accuracy budgets: bounded nonlinear phase per step, kinetic rotation of
    // the fastest mode below half a turn per step
    const double sup0 = sup_norm(v0);
    if (cfg.omega != 0.0 && sup0 > 0.0) {
        const double budget = 0.5 * cfg.h / (std::abs(cfg.omega) * std::pow(sup0, cfg.p - 1));
        if (cfg.dt > budget)
            throw ConfigError("solver: dt = " + std::to_string(cfg.dt) +
                              " exceeds the nonlinear budget " + std::to_string(budget));
    }
    const double xi2max = g.d * g.xi_max() * g.xi_max();
    const double budget_k = 3.14159265358979323846 / (cfg.h * xi2max);
    if (cfg.dt > budget_k)
        throw ConfigError("solver: dt = " + std::to_string(cfg.dt) +
                          " exceeds the kinetic budget " + std::to_string(budget_k));

    out.times.push_back(0.0);
    out.slices.push_back(v0);
    if (cfg.s_end == 0.0) return out;

    const int nsteps = std::max(1, (int)std::ceil(cfg.s_end / cfg.dt - 1e-9));
    const double dt = cfg.s_end / nsteps;
    const std::size_t total = g.total();

    std::vector<cplx> kin(total);
    for (std::size_t m = 0; m < total; ++m) {
        const std::array<int, 3> idx = decode_index(g, m);
        double xi2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            const double x = g.xi(idx[a]);
            xi2 += x * x;
        }
        kin[m] = std::polar(1.0, -cfg.h * xi2 * dt);
    }

    Field v = v0;
    const double c_half = -cfg.omega * dt / (2.0 * cfg.h);
    for (int i = 0; i < nsteps; ++i) {
        if (cfg.omega != 0.0) kernels::phase_rotate(total, v.v.data(), c_half, cfg.p);
        std::vector<cplx> spec = spectrum(v);
        kernels::cmul(total, spec.data(), kin.data());
        v = from_spectrum(g, spec);
        if (cfg.omega != 0.0) kernels::phase_rotate(total, v.v.data(), c_half, cfg.p);

        const double s = dt * (i + 1);
        if (!all_finite(v)) {
            out.aborted = true;
            out.abort_s = s;
            return out;
        }
        if ((i + 1) % cfg.record_every == 0 || i + 1 == nsteps) {
            out.times.push_back(s);
            out.slices.push_back(v);
        }
    }
    return out;
}

std::pair<double, double> conserved_quantities(const Field& v, const SolveConfig& cfg) {
    cfg.validate();
    const double mass = lebesgue_norm(v, 2.0);
    const double lp = lebesgue_norm(v, (double)(cfg.p + 1));
    const double energy = 0.5 * cfg.h * cfg.h * dirichlet_integral(v) +
                          cfg.omega / (cfg.p + 1) * std::pow(lp, cfg.p + 1);
    return {mass, energy};
}

std::vector<double> compare_to_ansatz(const PdeTrajectory& pde,
                                      const std::vector<WkbState>& wkb, double h, int n,
                                      int k) {
    if (pde.slices.empty()) throw ConfigError("solver: empty solver trajectory");
    if (pde.times.size() != pde.slices.size())
        throw ConfigError("solver: times and slices disagree in length");
    if (wkb.empty()) throw ConfigError("solver: empty ansatz trajectory");
    if (!std::isfinite(h) || h <= 0.0)
        throw ConfigError("solver: h must be positive, got " + std::to_string(h));
    if (n < 0) throw ConfigError("solver: truncation order must be >= 0");
    if (k < 0) throw ConfigError("solver: Sobolev order must be >= 0");
    wkb.front().validate();
    const GridSpec& g = wkb.front().S.grid;
    for (const Field& f : pde.slices)
        if (f.grid != g) throw ConfigError("solver: trajectory grids disagree");

    std::vector<double> ts;
    ts.reserve(wkb.size());
    for (const WkbState& st : wkb) ts.push_back(st.s);
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i] > ts[i - 1]))
            throw ConfigError("solver: ansatz times must increase strictly");

    const int ncomp = std::min(wkb.front().order(), n);

    // estimate the linear-interpolation error of the ansatz grid by dropping
    // interior slices and reconstructing them from their neighbours (the true
    // half-spacing error is ~4x smaller, so this is conservative)
    double est = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, wkb.size() / 9);
    for (std::size_t i = 1; i + 1 < wkb.size(); i += stride) {
        const double th = (ts[i] - ts[i - 1]) / (ts[i + 1] - ts[i - 1]);
        const auto probe = [&](const Field& a, const Field& b, const Field& mid) {
            double m = 0.0;
            for (std::size_t q = 0; q < a.v.size(); ++q)
                m = std::max(m, std::abs((1.0 - th) * a.v[q] + th * b.v[q] - mid.v[q]));
            return m;
        };
        est = std::max(est, probe(wkb[i - 1].S, wkb[i + 1].S, wkb[i].S));
        for (int j = 0; j <= ncomp; ++j)
            est = std::max(est, probe(wkb[i - 1].amps[j], wkb[i + 1].amps[j], wkb[i].amps[j]));
    }
    if (est > 1e-7) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", est);
        throw ConfigError(
            std::string("solver: ansatz time grid too coarse for interpolation (probe error ") +
            buf + ")");
    }

    const double tol = 1e-9 * (1.0 + std::abs(ts.back()));
    std::vector<double> curve;
    curve.reserve(pde.slices.size());
    for (std::size_t i = 0; i < pde.slices.size(); ++i) {
        const double s = pde.times[i];
        if (s < ts.front() - tol || s > ts.back() + tol)
            throw ConfigError("solver: time " + std::to_string(s) +
                              " lies outside the ansatz trajectory");

        WkbState st;
        st.s = s;
        st.p = wkb.front().p;
        st.omega = wkb.front().omega;
        if (wkb.size() == 1) {
            if (std::abs(s - ts.front()) > tol)
                throw ConfigError("solver: single-slice ansatz cannot be resampled");
            st.S = wkb.front().S;
            for (int j = 0; j <= ncomp; ++j) st.amps.push_back(wkb.front().amps[j]);
        } else {
            std::size_t hi = std::lower_bound(ts.begin(), ts.end(), s) - ts.begin();
            hi = std::clamp<std::size_t>(hi, 1, ts.size() - 1);
            const std::size_t lo = hi - 1;
            const double th = std::clamp((s - ts[lo]) / (ts[hi] - ts[lo]), 0.0, 1.0);
            st.S = lerp_field(wkb[lo].S, wkb[hi].S, th);
            for (int j = 0; j <= ncomp; ++j)
                st.amps.push_back(lerp_field(wkb[lo].amps[j], wkb[hi].amps[j], th));
        }

        Field diff = assemble_vapp(st, h, n);
        kernels::caxpy(diff.v.size(), diff.v.data(), cplx(-1.0, 0.0), pde.slices[i].v.data());
        curve.push_back(sobolev_norm(diff, (double)k, h));
    }
    return curve;
}

GronwallReport gronwall_bound_check(const PdeTrajectory& pde,
                                    const std::vector<WkbState>& wkb,
                                    const SemiclassicalParams& pr, int k) {
    pr.validate();
    if (2 * k <= pr.d)
        throw ConfigError("solver: gronwall check needs k > d/2, got k = " + std::to_string(k) +
                          ", d = " + std::to_string(pr.d));
    if (wkb.empty()) throw ConfigError("solver: empty ansatz trajectory");

    const double h = pr.h();
    const std::vector<double> e = compare_to_ansatz(pde, wkb, h, wkb.front().order(), k);
    const double amp = std::pow(pr.hbar, pr.gamma + 0.5 * pr.d);

    GronwallReport rep;
    rep.rate = std::pow(pr.hbar, pr.gamma * (pr.p - 1));
    rep.threshold = std::pow(pr.hbar, pr.gamma + (pr.beta + 1.0) * k);

    std::vector<double> m(e.size()), t(e.size());
    const double tscale = std::pow(pr.hbar, pr.alpha);
    for (std::size_t i = 0; i < e.size(); ++i) {
        t[i] = tscale * pde.times[i];
        m[i] = amp * e[i];
        rep.max_norm = std::max(rep.max_norm, m[i]);
    }

    // least-squares fit of log m against (rate * t) over the positive
    // samples, then lift the amplitude so the envelope covers every sample
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!(m[i] > 0.0)) continue;
        const double x = rep.rate * t[i];
        const double y = std::log(m[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    const double var = cnt > 0 ? sxx - sx * sx / cnt : 0.0;
    rep.C_star = (cnt >= 2 && var > 0.0) ? (sxy - sx * sy / cnt) / var : 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        rep.c_star = std::max(rep.c_star, m[i] * std::exp(-rep.C_star * rep.rate * t[i]));

    rep.valid_until = t.empty() ? 0.0 : t.back();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] > rep.threshold) {
            rep.crossed = true;
            rep.crossing_t = t[i];
            rep.valid_until = i > 0 ? t[i - 1] : 0.0;
            break;
        }
    }
    return rep;
}

void write_error_curve(const std::vector<double>& s, const std::vector<double>& e,
                       const std::string& path) {
    if (s.size() != e.size())
        throw ConfigError("solver: curve columns disagree in length");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw RuntimeAbort("solver: cannot open " + path);
    std::fprintf(fp, "s,error\n");
    for (std::size_t i = 0; i < s.size(); ++i)
        std::fprintf(fp, "%.17g,%.17g\n", s[i], e[i]);
    if (std::fclose(fp) != 0) throw RuntimeAbort("solver: close failed for " + path);
}

void write_trajectory(const PdeTrajectory& traj, const SolveConfig& cfg,
                      const std::string& dir) {
    if (traj.slices.empty()) throw ConfigError("solver: cannot export an empty trajectory");
    if (traj.times.size() != traj.slices.size())
        throw ConfigError("solver: times and slices disagree in length");
    cfg.validate();
    const GridSpec& g = traj.slices.front().grid;
    for (const Field& f : traj.slices)
        if (f.grid != g) throw ConfigError("solver: trajectory slices disagree on grid");

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw RuntimeAbort("solver: cannot create " + dir + ": " + ec.message());

    nlohmann::json manifest;
    manifest["format"] = "nlslab-pde-trajectory";
    manifest["params"] = {{"d", g.d}, {"n", g.n},         {"L", g.L},
                          {"p", cfg.p}, {"omega", cfg.omega}, {"h", cfg.h}};
    manifest["dt"] = cfg.dt;
    manifest["aborted"] = traj.aborted;
    if (traj.aborted) manifest["abort_s"] = traj.abort_s;

    nlohmann::json slices = nlohmann::json::array();
    char name[48];
    for (std::size_t i = 0; i < traj.slices.size(); ++i) {
        std::snprintf(name, sizeof name, "v_%05zu.bin", i);
        write_field(traj.slices[i], dir + "/" + name);
        slices.push_back({{"s", traj.times[i]}, {"field", name}});
    }
    manifest["times"] = traj.times;
    manifest["slices"] = slices;

    const std::string manifest_path = dir + "/manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw RuntimeAbort("solver: cannot open " + manifest_path);
    out << manifest.dump(2) << "\n";
    if (!out) throw RuntimeAbort("solver: short write to " + manifest_path);
}

}  // namespace nlslab
