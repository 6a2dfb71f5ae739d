#include "nlslab/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "nlslab/kernels.hpp"
#include "nlslab/symbol.hpp"

namespace nlslab {

void WkbState::validate() const {
    if (amps.empty()) throw ConfigError("wkb: state needs at least a_0");
    S.grid.validate();
    if (S.v.size() != S.grid.total()) throw ConfigError("wkb: phase length does not match its grid");
    for (const Field& a : amps)
        if (a.grid != S.grid || a.v.size() != S.grid.total())
            throw ConfigError("wkb: amplitude grid mismatch");
    if (p < 3 || p % 2 == 0) throw ConfigError("wkb: p must be an odd integer >= 3");
    if (!std::isfinite(omega)) throw ConfigError("wkb: omega must be finite");
    double sup = 0.0, im = 0.0;
    for (const cplx& z : S.v) {
        sup = std::max(sup, std::abs(z));
        im = std::max(im, std::abs(z.imag()));
    }
    if (im > 1e-10 * sup + 1e-14)
        throw ConfigError("wkb: phase has a non-negligible imaginary part");
}

void HierarchyConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("wkb: dt must be positive");
    if (closure_order < 0) throw ConfigError("wkb: closure_order must be >= 0");
    if (!(s_max > 0.0) || !std::isfinite(s_max)) throw ConfigError("wkb: s_max must be positive");
}

WkbDeriv hierarchy_rhs(const WkbState& state) {
    state.validate();
    const GridSpec& g = state.S.grid;
    const int J = state.order();
    const std::size_t nn = g.total();

    std::vector<Field> grad_s;
    grad_s.reserve(g.d);
    for (int ax = 0; ax < g.d; ++ax) grad_s.push_back(derivative(state.S, ax));

    // eikonal: dS/ds = -(grad S)^2 - omega |a_0|^{p-1}
    Field ds(g);
    for (int ax = 0; ax < g.d; ++ax) {
        const Field sq = multiply(grad_s[ax], grad_s[ax]);
        kernels::caxpy(nn, ds.v.data(), cplx(-1.0, 0.0), sq.v.data());
    }
    if (state.omega != 0.0) {
        const Field f0 = abs_power(state.amps[0], state.p);
        kernels::caxpy(nn, ds.v.data(), cplx(-state.omega, 0.0), f0.v.data());
    }

    // N_j = i omega [a . downshift(f(a))]_j with f(a) = (a conj a)^{(p-1)/2}
    // capped at order J+1; the missing a_{J+1} is the closure.  For J = 0 the
    // downshifted factor is identically zero (f_1 = a_0 conj(a_1) + c.c. = 0),
    // as it is when omega = 0.
    SymbolSeries nl;
    const bool with_nl = state.omega != 0.0 && J > 0;
    if (with_nl) {
        SymbolSeries aser = SymbolSeries::zero(g, J, 1, 0.0);
        for (int j = 0; j <= J; ++j) aser.set_slice(j, 0, state.amps[j]);
        const SymbolSeries base = symbol_product(aser, symbol_conj(aser), J + 1);
        SymbolSeries f = base;
        for (int m = (state.p - 1) / 2; m > 1; --m) f = symbol_product(f, base, J + 1);
        nl = symbol_product(aser, downshift(f), J);
    }

    const Field lap_s = laplacian(state.S);
    WkbDeriv out;
    out.dS = std::move(ds);
    out.damps.reserve(J + 1);
    for (int j = 0; j <= J; ++j) {
        Field da(g);
        for (int ax = 0; ax < g.d; ++ax) {
            const Field adv = multiply(grad_s[ax], derivative(state.amps[j], ax));
            kernels::caxpy(nn, da.v.data(), cplx(-2.0, 0.0), adv.v.data());
        }
        const Field div_term = multiply(state.amps[j], lap_s);
        kernels::caxpy(nn, da.v.data(), cplx(-1.0, 0.0), div_term.v.data());
        if (j > 0) {
            const Field lap_prev = laplacian(state.amps[j - 1]);
            kernels::caxpy(nn, da.v.data(), cplx(0.0, 1.0), lap_prev.v.data());
        }
        if (with_nl) {
            const Field nj = nl.slice_field(j, 0);
            kernels::caxpy(nn, da.v.data(), cplx(0.0, -state.omega), nj.v.data());
        }
        out.damps.push_back(std::move(da));
    }
    return out;
}

namespace {

void add_scaled(WkbState& y, double c, const WkbDeriv& k) {
    const std::size_t nn = y.S.v.size();
    kernels::caxpy(nn, y.S.v.data(), cplx(c, 0.0), k.dS.v.data());
    for (std::size_t j = 0; j < y.amps.size(); ++j)
        kernels::caxpy(nn, y.amps[j].v.data(), cplx(c, 0.0), k.damps[j].v.data());
}

WkbState step_rk4(const WkbState& y, double dt) {
    const WkbDeriv k1 = hierarchy_rhs(y);
    WkbState y2 = y;
    add_scaled(y2, 0.5 * dt, k1);
    const WkbDeriv k2 = hierarchy_rhs(y2);
    WkbState y3 = y;
    add_scaled(y3, 0.5 * dt, k2);
    const WkbDeriv k3 = hierarchy_rhs(y3);
    WkbState y4 = y;
    add_scaled(y4, dt, k3);
    const WkbDeriv k4 = hierarchy_rhs(y4);
    WkbState out = y;
    add_scaled(out, dt / 6.0, k1);
    add_scaled(out, dt / 3.0, k2);
    add_scaled(out, dt / 3.0, k3);
    add_scaled(out, dt / 6.0, k4);
    out.s = y.s + dt;
    return out;
}

bool state_finite(const WkbState& y) {
    if (!all_finite(y.S)) return false;
    for (const Field& a : y.amps)
        if (!all_finite(a)) return false;
    return true;
}

void check_integration_inputs(const WkbState& state0, const HierarchyConfig& cfg) {
    state0.validate();
    cfg.validate();
    if (cfg.closure_order != state0.order())
        throw ConfigError("wkb: closure_order " + std::to_string(cfg.closure_order) +
                          " does not match the state order " + std::to_string(state0.order()));
}

}  // namespace

std::vector<WkbState> integrate_wkb(const WkbState& state0, double s_end,
                                    const HierarchyConfig& cfg) {
    check_integration_inputs(state0, cfg);
    if (!(s_end >= state0.s))
        throw ConfigError("wkb: s_end lies before the initial time");
    if (s_end > cfg.s_max * (1.0 + 1e-12))
        throw ConfigError("wkb: s_end " + std::to_string(s_end) + " exceeds s_max " +
                          std::to_string(cfg.s_max));

    std::vector<WkbState> traj;
    const double span = s_end - state0.s;
    if (span == 0.0) {
        traj.push_back(state0);
        return traj;
    }
    const int nsteps = std::max(1, (int)std::ceil(span / cfg.dt - 1e-9));
    const double dt = span / nsteps;
    const double a0_init = sup_norm(state0.amps[0]);
    const double blow_cap = 1e3 * a0_init;

    traj.reserve(nsteps + 1);
    traj.push_back(state0);
    for (int i = 0; i < nsteps; ++i) {
        WkbState next = step_rk4(traj.back(), dt);
        next.s = state0.s + (i + 1) * dt;  // keep the grid drift-free
        if (!state_finite(next))
            throw RuntimeAbort("wkb: non-finite state at s = " + std::to_string(next.s) +
                               ": focusing collapse or s beyond the analyticity time");
        if (a0_init > 0.0) {
            const double cur = sup_norm(next.amps[0]);
            if (cur > blow_cap)
                throw RuntimeAbort("wkb: amplitude blow-up at s = " + std::to_string(next.s) +
                                   " (sup|a0| = " + std::to_string(cur) + ", initial " +
                                   std::to_string(a0_init) +
                                   "): focusing collapse or s beyond the analyticity time");
        }
        traj.push_back(std::move(next));
    }
    return traj;
}

double blowup_proxy_time(const WkbState& state0, const HierarchyConfig& cfg) {
    check_integration_inputs(state0, cfg);
    const double a0_init = sup_norm(state0.amps[0]);
    const double span = cfg.s_max - state0.s;
    if (a0_init == 0.0 || !(span > 0.0)) return cfg.s_max;

    const int nsteps = std::max(1, (int)std::ceil(span / cfg.dt - 1e-9));
    const double dt = span / nsteps;
    WkbState y = state0;
    for (int i = 0; i < nsteps; ++i) {
        WkbState next = step_rk4(y, dt);
        next.s = state0.s + (i + 1) * dt;
        // a step into non-finite territory means doubling happened somewhere
        // inside it; report the last resolved time
        if (!state_finite(next)) return y.s;
        if (sup_norm(next.amps[0]) >= 2.0 * a0_init) return next.s;
        y = std::move(next);
    }
    return cfg.s_max;
}

Field assemble_vapp(const WkbState& state, double h, std::optional<int> n_override) {
    state.validate();
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("wkb: assemble_vapp needs h > 0");
    int n = state.order();
    if (n_override) {
        if (*n_override < 0) throw ConfigError("wkb: n_override must be >= 0");
        n = std::min(n, *n_override);
    }

    Field out(state.S.grid);
    for (int j = n; j >= 0; --j) {  // Horner in h
        kernels::cscale(out.size(), out.v.data(), cplx(h, 0.0));
        kernels::caxpy(out.size(), out.v.data(), cplx(1.0, 0.0), state.amps[j].v.data());
    }
    for (std::size_t m = 0; m < out.size(); ++m)
        out.v[m] *= std::polar(1.0, state.S.v[m].real() / h);
    return out;
}

std::vector<double> wkb_residual(const std::vector<WkbState>& traj, double h, int n) {
    if (traj.size() < 5)
        throw ConfigError("wkb: residual needs >= 5 time slices, got " +
                          std::to_string(traj.size()));
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("wkb: residual needs h > 0");
    if (n < 0) throw ConfigError("wkb: residual order must be >= 0");
    const double dt = traj[1].s - traj[0].s;
    if (!(dt > 0.0)) throw ConfigError("wkb: trajectory times must increase");
    for (std::size_t i = 1; i < traj.size(); ++i)
        if (std::abs(traj[i].s - traj[i - 1].s - dt) > 1e-10 * (1.0 + dt))
            throw ConfigError("wkb: residual needs a uniform time grid");

    std::vector<Field> v;
    v.reserve(traj.size());
    for (const WkbState& st : traj) v.push_back(assemble_vapp(st, h, n));

    const int p = traj.front().p;
    const double omega = traj.front().omega;
    const std::size_t nn = v.front().size();
    std::vector<double> out;
    out.reserve(traj.size() - 4);
    for (std::size_t i = 2; i + 2 < traj.size(); ++i) {
        Field r(v[i].grid);
        for (std::size_t m = 0; m < nn; ++m) {
            const cplx dv = (-v[i + 2].v[m] + 8.0 * v[i + 1].v[m] - 8.0 * v[i - 1].v[m] +
                             v[i - 2].v[m]) /
                            (12.0 * dt);
            r.v[m] = cplx(0.0, h) * dv;
        }
        const Field lap = laplacian(v[i]);
        kernels::caxpy(nn, r.v.data(), cplx(h * h, 0.0), lap.v.data());
        if (omega != 0.0) {
            const Field nlf = abs_power_times(v[i], p);
            kernels::caxpy(nn, r.v.data(), cplx(-omega, 0.0), nlf.v.data());
        }
        out.push_back(lebesgue_norm(r, 2.0));
    }
    return out;
}

void write_trajectory(const std::vector<WkbState>& traj, const std::string& dir) {
    if (traj.empty()) throw ConfigError("wkb: cannot export an empty trajectory");
    traj.front().validate();
    const GridSpec& g = traj.front().S.grid;
    const int J = traj.front().order();
    for (const WkbState& st : traj)
        if (st.order() != J || st.S.grid != g)
            throw ConfigError("wkb: trajectory slices disagree on grid or order");

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw RuntimeAbort("wkb: cannot create " + dir + ": " + ec.message());

    nlohmann::json manifest;
    manifest["format"] = "nlslab-wkb-trajectory";
    manifest["J"] = J;
    manifest["params"] = {{"d", g.d},
                          {"n", g.n},
                          {"L", g.L},
                          {"p", traj.front().p},
                          {"omega", traj.front().omega}};
    manifest["dt"] = traj.size() > 1 ? traj[1].s - traj[0].s : 0.0;

    std::vector<double> times;
    times.reserve(traj.size());
    nlohmann::json slices = nlohmann::json::array();
    char name[48];
    for (std::size_t i = 0; i < traj.size(); ++i) {
        times.push_back(traj[i].s);
        std::snprintf(name, sizeof name, "S_%05zu.bin", i);
        const std::string phase_name = name;
        write_field(traj[i].S, dir + "/" + phase_name);
        nlohmann::json amp_names = nlohmann::json::array();
        for (int j = 0; j <= J; ++j) {
            std::snprintf(name, sizeof name, "a%d_%05zu.bin", j, i);
            write_field(traj[i].amps[j], dir + "/" + name);
            amp_names.push_back(name);
        }
        slices.push_back({{"s", traj[i].s}, {"phase", phase_name}, {"amps", amp_names}});
    }
    manifest["times"] = times;
    manifest["slices"] = slices;

    const std::string manifest_path = dir + "/manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw RuntimeAbort("wkb: cannot open " + manifest_path);
    out << manifest.dump(2) << "\n";
    if (!out) throw RuntimeAbort("wkb: short write to " + manifest_path);
}

}  // namespace nlslab
