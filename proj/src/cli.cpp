// nlslab command line driver.
//
// One binary, five subcommands, declarative configuration:
//
//   nlslab wkb    --config run.cfg --out dir   hierarchy trajectory + residuals
//   nlslab solve  --config run.cfg --out dir   split-step run, conserved trace
//   nlslab thm1   --config run.cfg --out dir   energy-space separation sweep
//   nlslab thm2   --config run.cfg --out dir   norm inflation sweep
//   nlslab norms  --config run.cfg --out dir   majorant-norm corpus sweep
//   nlslab schema                              machine-readable key schema
//
// Configs are flat "key = value" files (lists comma- or space-separated,
// '#' starts a comment).  Every output file carries the 64-bit FNV-1a hash
// of the canonicalized config, so artifacts can be traced back to their
// parameters; reruns with the same config are byte-identical because the
// wall-clock timestamps live only in manifest.json.
//
// Exit codes: 0 clean, 1 a reported check failed, 2 configuration rejected,
// 3 runtime failure.  Every non-zero exit prints a single machine-readable
// line "nlslab: error: <token>: <detail>" on stderr.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "nlslab/errors.hpp"
#include "nlslab/experiments.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/solver.hpp"
#include "nlslab/symbol.hpp"
#include "nlslab/wkb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kTool = "nlslab";
constexpr const char* kVersion = "0.1.0";

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// ---- flat key = value configuration -----------------------------------------

// Parsed config file.  Getters record which keys were consulted so that
// reject_unknown() can flag typos; every code path must therefore consult
// all of its keys before rejecting.
class KvConfig {
  public:
    static KvConfig parse_file(const std::string& path) {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw nlslab::ConfigError("cannot open config file: " + path);
        std::string text;
        char buf[4096];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
        std::fclose(f);

        KvConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw nlslab::ConfigError("config line " + std::to_string(lineno) +
                                          ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty())
                throw nlslab::ConfigError("config line " + std::to_string(lineno) +
                                          ": empty key");
            if (!cfg.kv_.emplace(key, val).second)
                throw nlslab::ConfigError("duplicate config key: " + key);
        }
        return cfg;
    }

    std::string get_string(const std::string& key, const std::string& def) const {
        used_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    double get_double(const std::string& key, double def) const {
        used_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? def : parse_double(key, it->second);
    }

    double require_double(const std::string& key) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) throw nlslab::ConfigError("missing config key: " + key);
        return parse_double(key, it->second);
    }

    int get_int(const std::string& key, int def) const {
        used_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? def : parse_int(key, it->second);
    }

    int require_int(const std::string& key) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) throw nlslab::ConfigError("missing config key: " + key);
        return parse_int(key, it->second);
    }

    bool get_bool(const std::string& key, bool def) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        const std::string& v = it->second;
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw nlslab::ConfigError("config key " + key + ": expected true/false, got '" + v +
                                  "'");
    }

    std::uint64_t require_u64(const std::string& key) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) throw nlslab::ConfigError("missing config key: " + key);
        errno = 0;
        char* end = nullptr;
        unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
        if (errno != 0 || end == it->second.c_str() || *end != '\0')
            throw nlslab::ConfigError("config key " + key + ": cannot parse '" + it->second +
                                      "' as an unsigned integer");
        return (std::uint64_t)v;
    }

    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> def) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<double> out;
        for (const std::string& tok : split(it->second)) out.push_back(parse_double(key, tok));
        return out;
    }

    std::vector<double> require_double_list(const std::string& key) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) throw nlslab::ConfigError("missing config key: " + key);
        std::vector<double> out;
        for (const std::string& tok : split(it->second)) out.push_back(parse_double(key, tok));
        if (out.empty()) throw nlslab::ConfigError("config key " + key + ": empty list");
        return out;
    }

    std::vector<int> get_int_list(const std::string& key, std::vector<int> def) const {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<int> out;
        for (const std::string& tok : split(it->second)) out.push_back(parse_int(key, tok));
        if (out.empty()) throw nlslab::ConfigError("config key " + key + ": empty list");
        return out;
    }

    // Unknown keys are rejected rather than ignored: a misspelled key that
    // silently falls back to a default would corrupt a sweep.
    void reject_unknown() const {
        std::vector<std::string> unknown;
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) unknown.push_back(k);
        if (!unknown.empty()) {
            std::string msg = "unknown config key";
            if (unknown.size() > 1) msg += "s";
            msg += ":";
            for (const auto& k : unknown) msg += " " + k;
            throw nlslab::ConfigError(msg);
        }
    }

    // Canonical serialization: command name plus sorted key=value lines.
    // Hashing this (rather than the raw bytes) keeps the hash stable under
    // comments and whitespace shuffles.
    std::string canonical(const std::string& command) const {
        std::string s = "command=" + command + "\n";
        for (const auto& [k, v] : kv_) s += k + "=" + v + "\n";
        return s;
    }

  private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace((unsigned char)s[b])) ++b;
        while (e > b && std::isspace((unsigned char)s[e - 1])) --e;
        return s.substr(b, e - b);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::string tmp = s;
        std::replace(tmp.begin(), tmp.end(), ',', ' ');
        std::istringstream in(tmp);
        std::vector<std::string> out;
        std::string tok;
        while (in >> tok) out.push_back(tok);
        return out;
    }

    static double parse_double(const std::string& key, const std::string& v) {
        errno = 0;
        char* end = nullptr;
        double x = std::strtod(v.c_str(), &end);
        if (errno != 0 || end == v.c_str() || *end != '\0')
            throw nlslab::ConfigError("config key " + key + ": cannot parse '" + v +
                                      "' as a number");
        return x;
    }

    static int parse_int(const std::string& key, const std::string& v) {
        errno = 0;
        char* end = nullptr;
        long long x = std::strtoll(v.c_str(), &end, 10);
        if (errno != 0 || end == v.c_str() || *end != '\0' || x < -2147483647LL ||
            x > 2147483647LL)
            throw nlslab::ConfigError("config key " + key + ": cannot parse '" + v +
                                      "' as an integer");
        return (int)x;
    }

    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
};

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

// ---- config key schema -------------------------------------------------------

struct KeyDoc {
    const char* key;
    const char* type;
    const char* def;  // "(required)" when there is no default
    const char* doc;
};

const std::vector<KeyDoc> kCommonKeys = {
    {"workers", "int", "0",
     "worker threads for sweeps; 0 keeps the OpenMP default; the NLSLAB_WORKERS "
     "environment variable overrides this key"},
};

const std::vector<KeyDoc> kWkbKeys = {
    {"d", "int", "1", "spatial dimension, 1..3"},
    {"n_points", "int", "128", "grid points per axis (even, prime factors 2/3/5/7)"},
    {"box", "double", "30.0", "half box width; the domain is [-box, box)^d"},
    {"p", "int", "7", "odd nonlinearity exponent >= 3"},
    {"omega", "double", "1.0", "coupling: +1 defocusing, -1 focusing"},
    {"profile", "string", "gaussian", "initial amplitude a0: gaussian or constant"},
    {"amplitude", "double", "1.0", "scale factor applied to the profile"},
    {"h_list", "double list", "(required)", "semiclassical parameters for the residuals"},
    {"n_list", "int list", "0", "assembly truncation orders, each <= closure_order"},
    {"closure_order", "int", "max of n_list", "hierarchy closure order J"},
    {"dt", "double", "1e-3", "hierarchy RK4 step"},
    {"s_end", "double", "0.1", "integration end time"},
};

const std::vector<KeyDoc> kSolveKeys = {
    {"d", "int", "1", "spatial dimension, 1..3"},
    {"n_points", "int", "128", "grid points per axis (even, prime factors 2/3/5/7)"},
    {"box", "double", "30.0", "half box width; the domain is [-box, box)^d"},
    {"p", "int", "7", "odd nonlinearity exponent >= 3"},
    {"omega", "double", "1.0", "coupling: +1 defocusing, -1 focusing"},
    {"profile", "string", "gaussian", "initial datum: gaussian or constant"},
    {"amplitude", "double", "1.0", "scale factor applied to the profile"},
    {"h", "double", "(required)", "semiclassical parameter"},
    {"dt", "double", "1e-3", "split step (capped further by the stability budgets)"},
    {"s_end", "double", "0.1", "integration end time"},
    {"record_every", "int", "1", "slice recording stride, in steps"},
};

const std::vector<KeyDoc> kThm1Keys = {
    {"hbar_list", "double list", "(required)", "sweep values, strictly decreasing in (0,1)"},
    {"d", "int", "3", "spatial dimension"},
    {"p", "int", "7", "odd nonlinearity exponent, supercritical for d"},
    {"omega", "double", "1.0", "coupling"},
    {"eps", "double", "0.3", "perturbation exponent in delta"},
    {"nu_fraction", "double", "0.5", "nu = nu_fraction * eps * beta"},
    {"eta", "double", "0.3", "cutoff sharpening exponent"},
    {"cutoff_r", "double", "8.0", "cutoff support radius"},
    {"use_cutoff", "bool", "true", "apply the concentration cutoff to the datum"},
    {"n_points", "int", "48", "grid points per axis"},
    {"box", "double", "8.0", "half box width"},
    {"dt", "double", "5e-3", "split step (capped further by the stability budgets)"},
    {"q_list", "double list", "p+1, p+2, p+3", "Lebesgue exponents tracked at t = 0"},
    {"sep_threshold", "double", "0.25", "required separation fraction of the datum norm"},
    {"slope_tol_h", "double", "0.08", "tolerance on the H^(1+nu) difference exponent"},
    {"slope_tol_l", "double", "0.04", "tolerance on the L^(p+1) difference exponent"},
};

const std::vector<KeyDoc> kThm2Keys = {
    {"hbar_list", "double list", "(required)", "sweep values, strictly decreasing in (0,1)"},
    {"sigma", "double", "(required)", "Sobolev index of the vanishing initial norm"},
    {"rho", "double", "(required)", "Sobolev index observed at the later time"},
    {"eps", "double", "(required)", "vanishing rate of the initial norm"},
    {"d", "int", "3", "spatial dimension"},
    {"p", "int", "7", "odd nonlinearity exponent >= 3"},
    {"omega", "double", "1.0", "coupling"},
    {"n_points", "int", "64", "grid points per axis"},
    {"box", "double", "10.0", "half box width"},
    {"dt", "double", "1e-3", "split step (capped further by the stability budgets)"},
    {"s_star", "double", "0.1", "observation time scale"},
    {"kappa", "double", "0.0", "observation time shift: s_obs = hbar^kappa * s_star"},
    {"slope_tol", "double", "0.05", "tolerance on the fitted exponents"},
};

const std::vector<KeyDoc> kNormsKeys = {
    {"seed", "uint64", "(required)", "corpus RNG seed"},
    {"count", "int", "100", "number of random symbols"},
    {"d", "int", "1", "spatial dimension"},
    {"n_points", "int", "(required)", "grid points per axis"},
    {"box", "double", "(required)", "half box width"},
    {"h", "double", "(required)", "semiclassical parameter, 0 < h < eps"},
    {"s0", "double", "0.05", "time radius of the majorant norm"},
    {"l", "double", "0.3", "strip half-width, in (0, 1/2)"},
    {"B", "double", "2.0", "coefficient growth base"},
    {"eps", "double", "0.4", "formal parameter, in (0, 1/B)"},
    {"theta", "double", "1.0", "norm exponent used for the product inequality"},
    {"tau_samples", "int", "32", "time quadrature samples"},
    {"strip_samples", "int", "9", "imaginary shifts per axis (odd)"},
};

std::string footer_for(const std::vector<KeyDoc>& keys) {
    std::string out = "Config keys (flat key = value file; '#' comments):\n";
    auto add = [&out](const KeyDoc& k) {
        out += "  ";
        out += k.key;
        out += " (";
        out += k.type;
        out += ", default ";
        out += k.def;
        out += ")\n      ";
        out += k.doc;
        out += "\n";
    };
    for (const auto& k : keys) add(k);
    for (const auto& k : kCommonKeys) add(k);
    return out;
}

json schema_json() {
    json cmds = json::object();
    auto table = [](const std::vector<KeyDoc>& keys) {
        json arr = json::array();
        auto add = [&arr](const KeyDoc& k) {
            arr.push_back({{"key", k.key},
                           {"type", k.type},
                           {"default", k.def},
                           {"required", std::string(k.def) == "(required)"},
                           {"doc", k.doc}});
        };
        for (const auto& k : keys) add(k);
        for (const auto& k : kCommonKeys) add(k);
        return arr;
    };
    cmds["wkb"] = table(kWkbKeys);
    cmds["solve"] = table(kSolveKeys);
    cmds["thm1"] = table(kThm1Keys);
    cmds["thm2"] = table(kThm2Keys);
    cmds["norms"] = table(kNormsKeys);
    return json{{"tool", kTool}, {"version", kVersion}, {"commands", cmds}};
}

// ---- run manifest ------------------------------------------------------------

// The manifest is the only artifact holding wall-clock timestamps; all other
// outputs are pure functions of the config, so a rerun reproduces them byte
// for byte.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_hash;
    std::string started;
    std::string finished;
    std::string status = "ok";
    std::vector<std::string> outputs;                     // paths relative to out dir
    std::vector<std::pair<std::string, std::string>> tasks;  // (name, status)
};

std::string now_iso_utc() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string slurp(const fs::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw nlslab::RuntimeAbort("cannot open " + path.string());
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    return text;
}

void write_text(const fs::path& path, const std::string& body) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw nlslab::RuntimeAbort("cannot open " + path.string() + " for writing");
    std::size_t put = std::fwrite(body.data(), 1, body.size(), f);
    bool bad = put != body.size() || std::ferror(f);
    std::fclose(f);
    if (bad) throw nlslab::RuntimeAbort("short write on " + path.string());
}

void write_manifest(const RunManifest& man, const fs::path& out_dir) {
    json outs = json::array();
    for (const auto& p : man.outputs) outs.push_back({{"path", p}, {"status", "written"}});
    json tasks = json::array();
    for (const auto& [name, status] : man.tasks)
        tasks.push_back({{"name", name}, {"status", status}});
    json j{{"tool", kTool},          {"version", kVersion},
           {"command", man.command}, {"config_path", man.config_path},
           {"config_hash", man.config_hash}, {"started", man.started},
           {"finished", man.finished},       {"status", man.status},
           {"outputs", outs},        {"tasks", tasks}};
    write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

// Stamp the config hash into an already-written artifact.
void stamp_json(const fs::path& path, const std::string& hash) {
    json j = json::parse(slurp(path));
    j["config"] = hash;
    write_text(path, j.dump(2) + "\n");
}

void stamp_prefix(const fs::path& path, const std::string& line) {
    write_text(path, line + "\n" + slurp(path));
}

// ---- shared pieces -----------------------------------------------------------

void apply_workers(const KvConfig& cfg) {
    int w = cfg.get_int("workers", 0);
    if (const char* env = std::getenv("NLSLAB_WORKERS")) {
        errno = 0;
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (errno != 0 || end == env || *end != '\0' || v < 0)
            throw nlslab::ConfigError(
                "NLSLAB_WORKERS must be a non-negative integer, got '" + std::string(env) +
                "'");
        w = (int)v;
    }
#ifdef _OPENMP
    if (w > 0) omp_set_num_threads(w);
#else
    (void)w;
#endif
}

nlslab::Field make_profile(const nlslab::GridSpec& g, const std::string& name, double amp) {
    if (amp <= 0.0) throw nlslab::ConfigError("amplitude must be positive");
    if (name == "constant") {
        nlslab::Field f(g);
        for (auto& z : f.v) z = amp;
        return f;
    }
    if (name == "gaussian")
        return nlslab::sample(g, [amp](const std::array<double, 3>& z) {
            return nlslab::cplx(amp * std::exp(-(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])),
                                0.0);
        });
    throw nlslab::ConfigError("profile must be gaussian or constant, got '" + name + "'");
}

nlslab::GridSpec read_grid(const KvConfig& cfg, int def_d, int def_n, double def_box) {
    nlslab::GridSpec g{cfg.get_int("d", def_d), cfg.get_int("n_points", def_n),
                       cfg.get_double("box", def_box)};
    g.validate();
    return g;
}

// Print PASS/FAIL lines for a sweep report; returns the number of failures.
int print_report_lines(const nlslab::ExperimentReport& rep) {
    int failed = 0;
    for (const auto& f : rep.fits) {
        if (!f.pass) ++failed;
        std::printf("%s fit: %s (slope %.6g, predicted %.6g, tolerance %.3g)\n",
                    f.pass ? "PASS" : "FAIL", f.label.c_str(), f.slope, f.predicted,
                    f.tolerance);
    }
    for (const auto& v : rep.verdicts) {
        if (!v.pass) ++failed;
        std::printf("%s verdict: %s\n", v.pass ? "PASS" : "FAIL", v.label.c_str());
    }
    for (const auto& n : rep.notes) std::printf("note: %s\n", n.c_str());
    return failed;
}

// Shared tail for the two sweep subcommands: artifacts, stamps, verdict
// lines, manifest status, exit code.
int finish_sweep(const nlslab::ExperimentReport& rep, const std::string& stem,
                 const fs::path& out, const std::string& hash, RunManifest& man) {
    nlslab::write_report_json(rep, (out / (stem + ".json")).string());
    nlslab::write_report_csv(rep, (out / (stem + ".csv")).string());
    nlslab::write_report_svg(rep, (out / (stem + ".svg")).string());
    stamp_json(out / (stem + ".json"), hash);
    stamp_prefix(out / (stem + ".csv"), "# config " + hash);
    stamp_prefix(out / (stem + ".svg"), "<!-- config " + hash + " -->");
    man.outputs = {stem + ".json", stem + ".csv", stem + ".svg"};

    int failed = print_report_lines(rep);
    int total = (int)(rep.fits.size() + rep.verdicts.size());
    std::printf("%s %s: %d/%d checks passed\n", kTool, stem.c_str(), total - failed, total);
    man.tasks.emplace_back(stem + "_run", failed == 0 ? "ok" : "failed-checks");
    if (failed > 0) {
        man.status = "failed-checks";
        std::fprintf(stderr, "%s: error: verdict-fail: %d of %d checks failed\n", kTool,
                     failed, total);
        return 1;
    }
    return 0;
}

// ---- subcommands -------------------------------------------------------------

int run_wkb(const KvConfig& cfg, const fs::path& out, const std::string& hash,
            RunManifest& man) {
    const nlslab::GridSpec g = read_grid(cfg, 1, 128, 30.0);
    const int p = cfg.get_int("p", 7);
    const double omega = cfg.get_double("omega", 1.0);
    const std::string profile = cfg.get_string("profile", "gaussian");
    const double amplitude = cfg.get_double("amplitude", 1.0);
    const std::vector<double> h_list = cfg.require_double_list("h_list");
    const std::vector<int> n_list = cfg.get_int_list("n_list", {0});
    int max_n = 0;
    for (int n : n_list) max_n = std::max(max_n, n);
    const int closure = cfg.get_int("closure_order", max_n);
    const double dt = cfg.get_double("dt", 1e-3);
    const double s_end = cfg.get_double("s_end", 0.1);
    cfg.reject_unknown();

    for (double h : h_list)
        if (!(h > 0.0 && h <= 1.0))
            throw nlslab::ConfigError("h_list entries must lie in (0, 1], got " +
                                      fmt("%g", h));
    for (int n : n_list)
        if (n < 0 || n > closure)
            throw nlslab::ConfigError("n_list entries must lie in [0, closure_order]");
    if (!(s_end > 0.0)) throw nlslab::ConfigError("s_end must be positive");

    nlslab::WkbState st;
    st.s = 0.0;
    st.S = nlslab::Field(g);
    st.amps.assign(1, make_profile(g, profile, amplitude));
    for (int j = 0; j < closure; ++j) st.amps.emplace_back(g);
    st.p = p;
    st.omega = omega;

    nlslab::HierarchyConfig hc;
    hc.dt = dt;
    hc.closure_order = closure;
    hc.s_max = s_end * (1.0 + 1e-12);

    // The hierarchy itself is h-independent; one trajectory serves every h.
    const std::vector<nlslab::WkbState> traj = nlslab::integrate_wkb(st, s_end, hc);
    man.tasks.emplace_back("integrate_wkb", "ok");

    std::string tcsv = "# config " + hash + "\ns,sup_a0,sup_S\n";
    for (const auto& state : traj)
        tcsv += fmt("%.17g", state.s) + "," + fmt("%.17g", nlslab::sup_norm(state.amps[0])) +
                "," + fmt("%.17g", nlslab::sup_norm(state.S)) + "\n";
    write_text(out / "trajectory.csv", tcsv);

    std::string rcsv = "# config " + hash + "\nh,n,s,residual\n";
    for (double h : h_list)
        for (int n : n_list) {
            const std::vector<double> res = nlslab::wkb_residual(traj, h, n);
            for (std::size_t k = 0; k < res.size(); ++k)
                rcsv += fmt("%.17g", h) + "," + std::to_string(n) + "," +
                        fmt("%.17g", traj[k + 2].s) + "," + fmt("%.17g", res[k]) + "\n";
        }
    write_text(out / "residual.csv", rcsv);
    man.tasks.emplace_back("wkb_residual", "ok");
    man.outputs = {"trajectory.csv", "residual.csv"};
    return 0;
}

int run_solve(const KvConfig& cfg, const fs::path& out, const std::string& hash,
              RunManifest& man) {
    const nlslab::GridSpec g = read_grid(cfg, 1, 128, 30.0);
    nlslab::SolveConfig sc;
    sc.p = cfg.get_int("p", 7);
    sc.omega = cfg.get_double("omega", 1.0);
    sc.h = cfg.require_double("h");
    sc.dt = cfg.get_double("dt", 1e-3);
    sc.s_end = cfg.get_double("s_end", 0.1);
    sc.record_every = cfg.get_int("record_every", 1);
    const std::string profile = cfg.get_string("profile", "gaussian");
    const double amplitude = cfg.get_double("amplitude", 1.0);
    cfg.reject_unknown();

    const nlslab::Field v0 = make_profile(g, profile, amplitude);
    const nlslab::PdeTrajectory traj = nlslab::split_step_solve(v0, sc);

    std::string csv = "# config " + hash + "\ns,mass,energy,sup_v\n";
    for (std::size_t i = 0; i < traj.slices.size(); ++i) {
        const auto [mass, energy] = nlslab::conserved_quantities(traj.slices[i], sc);
        csv += fmt("%.17g", traj.times[i]) + "," + fmt("%.17g", mass) + "," +
               fmt("%.17g", energy) + "," + fmt("%.17g", nlslab::sup_norm(traj.slices[i])) +
               "\n";
    }
    write_text(out / "solve.csv", csv);
    man.outputs = {"solve.csv"};
    man.tasks.emplace_back("split_step_solve", traj.aborted ? "aborted" : "ok");
    if (traj.aborted) {
        man.status = "aborted";
        std::fprintf(stderr, "%s: error: runtime-abort: solver aborted at s = %.6g\n", kTool,
                     traj.abort_s);
        return 3;
    }
    return 0;
}

int run_thm1(const KvConfig& cfg, const fs::path& out, const std::string& hash,
             RunManifest& man) {
    nlslab::Thm1Config tc;
    tc.d = cfg.get_int("d", tc.d);
    tc.p = cfg.get_int("p", tc.p);
    tc.omega = cfg.get_double("omega", tc.omega);
    tc.eps = cfg.get_double("eps", tc.eps);
    tc.nu_fraction = cfg.get_double("nu_fraction", tc.nu_fraction);
    tc.eta = cfg.get_double("eta", tc.eta);
    tc.cutoff_r = cfg.get_double("cutoff_r", tc.cutoff_r);
    tc.use_cutoff = cfg.get_bool("use_cutoff", tc.use_cutoff);
    tc.grid = nlslab::GridSpec{tc.d, cfg.get_int("n_points", 48), cfg.get_double("box", 8.0)};
    tc.dt = cfg.get_double("dt", tc.dt);
    tc.q_list = cfg.get_double_list("q_list", tc.q_list);
    tc.sep_threshold = cfg.get_double("sep_threshold", tc.sep_threshold);
    tc.slope_tol_h = cfg.get_double("slope_tol_h", tc.slope_tol_h);
    tc.slope_tol_l = cfg.get_double("slope_tol_l", tc.slope_tol_l);
    nlslab::HbarSequence seq{cfg.require_double_list("hbar_list")};
    cfg.reject_unknown();

    const nlslab::ExperimentReport rep = nlslab::thm1_run(seq, tc);
    return finish_sweep(rep, "thm1", out, hash, man);
}

int run_thm2(const KvConfig& cfg, const fs::path& out, const std::string& hash,
             RunManifest& man) {
    nlslab::Thm2Config tc;
    tc.d = cfg.get_int("d", tc.d);
    tc.p = cfg.get_int("p", tc.p);
    tc.omega = cfg.get_double("omega", tc.omega);
    tc.grid = nlslab::GridSpec{tc.d, cfg.get_int("n_points", 64), cfg.get_double("box", 10.0)};
    tc.dt = cfg.get_double("dt", tc.dt);
    tc.s_star = cfg.get_double("s_star", tc.s_star);
    tc.kappa = cfg.get_double("kappa", tc.kappa);
    tc.slope_tol = cfg.get_double("slope_tol", tc.slope_tol);
    const double sigma = cfg.require_double("sigma");
    const double rho = cfg.require_double("rho");
    const double eps = cfg.require_double("eps");
    nlslab::HbarSequence seq{cfg.require_double_list("hbar_list")};
    cfg.reject_unknown();

    // Reject an inadmissible index window up front, before any integration.
    nlslab::thm2_validate_window(tc.d, tc.p, sigma, rho, eps);

    const nlslab::ExperimentReport rep = nlslab::thm2_run(seq, sigma, rho, eps, tc);
    return finish_sweep(rep, "thm2", out, hash, man);
}

json stats_json(const nlslab::InequalityStats& st) {
    return json{{"ratio_max", st.ratio_max},
                {"ratio_mean", st.ratio_mean},
                {"samples", st.samples}};
}

int run_norms(const KvConfig& cfg, const fs::path& out, const std::string& hash,
              RunManifest& man) {
    const std::uint64_t seed = cfg.require_u64("seed");
    const int count = cfg.get_int("count", 100);
    nlslab::GridSpec g{cfg.get_int("d", 1), cfg.require_int("n_points"),
                       cfg.require_double("box")};
    g.validate();
    const double h = cfg.require_double("h");
    nlslab::MajorantParams mp;
    mp.s0 = cfg.get_double("s0", mp.s0);
    mp.l = cfg.get_double("l", mp.l);
    mp.B = cfg.get_double("B", mp.B);
    mp.eps = cfg.get_double("eps", mp.eps);
    mp.theta = cfg.get_double("theta", mp.theta);
    mp.tau_samples = cfg.get_int("tau_samples", mp.tau_samples);
    mp.strip_samples = cfg.get_int("strip_samples", mp.strip_samples);
    cfg.reject_unknown();

    const nlslab::CorpusReport rep = nlslab::run_norm_corpus(seed, count, g, mp, h);
    man.tasks.emplace_back("run_norm_corpus", "ok");

    const std::vector<std::pair<std::string, const nlslab::InequalityStats*>> rows = {
        {"product", &rep.product},       {"anti_grad", &rep.anti_grad},
        {"anti_hlap", &rep.anti_hlap},   {"anti_hdiff", &rep.anti_hdiff},
        {"anti_half", &rep.anti_half},   {"anti_one", &rep.anti_one},
        {"anti_double", &rep.anti_double}, {"compose", &rep.compose}};

    json ineq = json::object();
    for (const auto& [name, st] : rows) ineq[name] = stats_json(*st);
    json j{{"config", hash},
           {"corpus", json{{"seed", rep.seed}, {"count", rep.count}, {"h", rep.h}}},
           {"majorant", json{{"s0", mp.s0},
                             {"l", mp.l},
                             {"B", mp.B},
                             {"eps", mp.eps},
                             {"theta", mp.theta},
                             {"tau_samples", mp.tau_samples},
                             {"strip_samples", mp.strip_samples}}},
           {"inequalities", ineq}};
    write_text(out / "norms.json", j.dump(2) + "\n");

    std::string csv = "# config " + hash + "\ninequality,ratio_max,ratio_mean,samples\n";
    for (const auto& [name, st] : rows)
        csv += name + "," + fmt("%.17g", st->ratio_max) + "," + fmt("%.17g", st->ratio_mean) +
               "," + std::to_string(st->samples) + "\n";
    write_text(out / "norms.csv", csv);
    man.outputs = {"norms.json", "norms.csv"};
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semiclassical nonlinear Schrodinger laboratory"};
    app.set_version_flag("--version", std::string(kTool) + " " + kVersion);
    app.require_subcommand(1);
    app.footer("Run 'nlslab schema' for a machine-readable listing of every config key.");

    std::string cfg_path, out_dir;
    auto add_io = [&](CLI::App* sub, const std::vector<KeyDoc>& keys) {
        sub->add_option("--config", cfg_path, "flat key = value config file")->required();
        sub->add_option("--out", out_dir, "output directory (created if missing)")
            ->required();
        sub->footer(footer_for(keys));
    };

    CLI::App* wkb = app.add_subcommand("wkb", "hierarchy trajectory and ansatz residuals");
    add_io(wkb, kWkbKeys);
    CLI::App* solve = app.add_subcommand("solve", "split-step run with conserved trace");
    add_io(solve, kSolveKeys);
    CLI::App* thm1 = app.add_subcommand("thm1", "energy-space separation sweep");
    add_io(thm1, kThm1Keys);
    CLI::App* thm2 = app.add_subcommand("thm2", "Sobolev norm inflation sweep");
    add_io(thm2, kThm2Keys);
    CLI::App* norms = app.add_subcommand("norms", "majorant-norm corpus sweep");
    add_io(norms, kNormsKeys);
    CLI::App* schema = app.add_subcommand("schema", "print the config key schema as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::fprintf(stderr, "%s: error: usage: %s\n", kTool, e.what());
        return 2;
    }

    if (schema->parsed()) {
        std::printf("%s\n", schema_json().dump(2).c_str());
        return 0;
    }

    RunManifest man;
    man.command = app.get_subcommands().front()->get_name();
    man.config_path = cfg_path;
    man.started = now_iso_utc();

    if (!fs::exists(cfg_path)) {
        std::fprintf(stderr, "%s: error: config-not-found: %s\n", kTool, cfg_path.c_str());
        return 2;
    }

    try {
        const KvConfig cfg = KvConfig::parse_file(cfg_path);
        apply_workers(cfg);
        man.config_hash = fnv1a_hex(cfg.canonical(man.command));
        fs::create_directories(out_dir);
        const fs::path out(out_dir);

        int rc = 0;
        if (wkb->parsed()) rc = run_wkb(cfg, out, man.config_hash, man);
        else if (solve->parsed()) rc = run_solve(cfg, out, man.config_hash, man);
        else if (thm1->parsed()) rc = run_thm1(cfg, out, man.config_hash, man);
        else if (thm2->parsed()) rc = run_thm2(cfg, out, man.config_hash, man);
        else rc = run_norms(cfg, out, man.config_hash, man);

        man.finished = now_iso_utc();
        write_manifest(man, out);
        return rc;
    } catch (const nlslab::ConfigError& e) {
        std::fprintf(stderr, "%s: error: config-invalid: %s\n", kTool, e.what());
        return 2;
    } catch (const nlslab::RuntimeAbort& e) {
        std::fprintf(stderr, "%s: error: runtime-abort: %s\n", kTool, e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: error: runtime-abort: %s\n", kTool, e.what());
        return 3;
    }
}
