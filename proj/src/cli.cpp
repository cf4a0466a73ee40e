#include "vsl/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vsl/error.hpp"
#include "vsl/gap.hpp"
#include "vsl/harness.hpp"
#include "vsl/io.hpp"
#include "vsl/lagrangian.hpp"
#include "vsl/verify.hpp"

#ifndef VSL_VERSION
#define VSL_VERSION "unknown"
#endif

namespace vsl {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const std::set<std::string> kKeys{
    "n",      "delta",   "a0_bar", "kappa",  "c_small", "N",    "dt",   "cfl",          "max_N", "cells_per_ell_tilde",
    "sample_every", "out_dir", "t_end", "nu", "nus", "samples", "threads", "rho", "nu_prefactor", "c0",
    "C",      "C1",      "C2",     "C3",     "c_ball", "C_IL", "C_IS", "C_IIL",        "C_IIS", "C_delta"};

/// Merged configuration: config file first, then flag overrides.
class Settings {
public:
    explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {
        for (const auto& [k, v] : values_)
            if (!kKeys.count(k)) throw Error(ErrorKind::Usage, "unknown configuration key '" + k + "'");
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string text(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double real(const std::string& key, double fallback) const {
        return has(key) ? parse_real(key, values_.at(key)) : fallback;
    }
    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const double v = parse_real(key, values_.at(key));
        if (v != std::floor(v) || std::abs(v) > 1e9) throw Error(ErrorKind::Usage, key + " must be an integer");
        return static_cast<int>(v);
    }
    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(values_.at(key));
        for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_real(key, item));
        if (out.empty()) throw Error(ErrorKind::Usage, key + " is empty");
        return out;
    }
    /// "auto" or a number.
    std::optional<double> real_or_auto(const std::string& key) const {
        const std::string v = text(key, "auto");
        if (v == "auto") return std::nullopt;
        return parse_real(key, v);
    }

    /// Canonical dump used for the configuration hash.
    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
        return s;
    }
    nlohmann::json json() const { return nlohmann::json(values_); }

    LadderConstants ladder_constants() const {
        LadderConstants c;
        c.nu_prefactor = real("nu_prefactor", c.nu_prefactor);
        c.c0 = real("c0", c.c0);
        c.C = real("C", c.C);
        c.C1 = real("C1", c.C1);
        c.C2 = real("C2", c.C2);
        c.C3 = real("C3", c.C3);
        c.c_ball = real("c_ball", c.c_ball);
        return c;
    }
    EnvelopeConstants envelope_constants() const {
        EnvelopeConstants c;
        c.C_delta = real("C_delta", c.C_delta);
        c.C_IL = real("C_IL", c.C_IL);
        c.C_IS = real("C_IS", c.C_IS);
        c.C_IIL = real("C_IIL", c.C_IIL);
        c.C_IIS = real("C_IIS", c.C_IIS);
        return c;
    }
    SweepConfig sweep_config() const {
        SweepConfig c;
        c.delta = real("delta", c.delta);
        c.a0_bar = real("a0_bar", c.a0_bar);
        c.kappa = real("kappa", c.kappa);
        c.c_small = real("c_small", c.c_small);
        c.constants = ladder_constants();
        c.grid.cells_per_ell_tilde = real("cells_per_ell_tilde", c.grid.cells_per_ell_tilde);
        c.grid.max_N = integer("max_N", c.grid.max_N);
        c.grid.fixed_N = integer("N", 0);
        c.dt.cfl = real("cfl", c.dt.cfl);
        c.dt.max_dt = real("dt", c.dt.max_dt);
        c.dt.sample_every = integer("sample_every", c.dt.sample_every);
        c.rho = real("rho", c.rho);
        c.C_delta = real("C_delta", c.C_delta);
        c.threads = integer("threads", 0);
        return c;
    }
    ParameterLadder ladder() const {
        const auto c = sweep_config();
        return build_ladder(integer("n", 4), c.delta, c.a0_bar, c.kappa, c.c_small, std::nullopt, c.constants);
    }
    TorusGrid grid(const ParameterLadder& lad) const { return TorusGrid(lad.L, resolution_for(lad, sweep_config().grid)); }
    fs::path out_dir() const { return text("out_dir", "out"); }

private:
    static double parse_real(const std::string& key, const std::string& v) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v.size() || !std::isfinite(x))
            throw Error(ErrorKind::Usage, "value '" + v + "' for " + key + " is not a number");
        return x;
    }

    std::map<std::string, std::string> values_;
};

/// Options shared by every subcommand; each maps onto a configuration key.
struct CommonOptions {
    std::string config;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;
    bool quiet = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "flat key = value configuration file");
        app->add_option("--set", sets, "KEY=VALUE override of any configuration key");
        app->add_flag("--quiet", quiet, "suppress the summary on standard output");
        for (const auto& [flag, key, help] : std::vector<std::array<std::string, 3>>{
                 {"--n", "n", "refinement level (comma list for sweep)"},
                 {"--delta", "delta", "delta"},
                 {"--a0", "a0_bar", "a0_bar"},
                 {"--kappa", "kappa", "mollification fraction"},
                 {"--c-small", "c_small", "small-scale exponent constant"},
                 {"--N", "N", "grid resolution (default from the grid policy)"},
                 {"--dt", "dt", "time step (default from the dt policy)"},
                 {"--out-dir", "out_dir", "output directory"},
                 {"--threads", "threads", "sweep pool size"}})
            app->add_option_function<std::string>(flag, [this, key](const std::string& v) { flags[key] = v; }, help);
    }

    Settings settings() const {
        std::map<std::string, std::string> merged;
        if (!config.empty()) merged = parse_config(read_text(config));
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Usage, "--set expects KEY=VALUE");
            merged[s.substr(0, eq)] = s.substr(eq + 1);
        }
        for (const auto& [k, v] : flags) merged[k] = v;
        return Settings(std::move(merged));
    }
};

nlohmann::json manifest(const std::string& command, const Settings& s, const ParameterLadder* lad) {
    nlohmann::json m;
    m["command"] = command;
    m["code_version"] = VSL_VERSION;
    m["config_hash"] = content_hash(s.canonical());
    m["settings"] = s.json();
    if (lad) m["ladder"] = ladder_json(*lad);
    const auto e = s.envelope_constants();
    m["frozen_constants"] = {{"C_delta", e.C_delta}, {"C_IL", e.C_IL},   {"C_IS", e.C_IS},
                             {"C_IIL", e.C_IIL},     {"C_IIS", e.C_IIS}, {"rho", s.real("rho", 0.5)}};
    const auto c = s.sweep_config();
    m["dt_policy"] = {{"cfl", c.dt.cfl},
                      {"max_dt", c.dt.max_dt > 0.0 ? nlohmann::json(c.dt.max_dt) : nlohmann::json("t_n/50")},
                      {"sample_every", c.dt.sample_every}};
    m["grid_policy"] = {{"cells_per_ell_tilde", c.grid.cells_per_ell_tilde}, {"max_N", c.grid.max_N}};
    return m;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void say(bool quiet, const std::string& line) {
    if (!quiet) std::cout << line << "\n";
}

std::string num(double v) { return format_double(v); }

int cmd_gen_data(const CommonOptions& o) {
    const auto t0 = Clock::now();
    const auto s = o.settings();
    const auto lad = s.ladder();
    const auto g = s.grid(lad);
    const fs::path dir = s.out_dir();
    write_field(dir / "omega_L.bin", build_large_scale(lad, g), 0.0, FieldId::OmegaL);
    write_field(dir / "u_S.bin", build_small_scale(lad, g), 0.0, FieldId::SmallScaleVelocity);
    write_json(dir / "ladder.json", ladder_json(lad));
    auto m = manifest("gen-data", s, &lad);
    m["N"] = g.N();
    m["outputs"] = {"omega_L.bin", "u_S.bin", "ladder.json"};
    m["wall_seconds"] = seconds_since(t0);
    write_json(dir / "manifest.json", m);
    say(o.quiet, "n=" + std::to_string(lad.n) + " N=" + std::to_string(g.N()) + " nu_n=" + num(lad.nu_n) +
                     " t_n=" + num(lad.t_n) + " ell_bar=" + num(lad.ell_bar) + " -> " + dir.string());
    return 0;
}

int cmd_run(const CommonOptions& o) {
    const auto t0 = Clock::now();
    const auto s = o.settings();
    const auto lad = s.ladder();
    const auto g = s.grid(lad);
    const double nu = s.real_or_auto("nu").value_or(lad.nu_n);
    const double t_end = s.real_or_auto("t_end").value_or(lad.t_n);
    if (nu < 0.0 || t_end < 0.0) throw Error(ErrorKind::Usage, "nu and t_end must be nonnegative");
    auto state = FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), nu);
    StepConfig cfg;
    cfg.dt = s.has("dt") ? s.real("dt", 0.0) : initial_dt(state, lad, s.sweep_config().dt);
    RunOptions opt;
    opt.sample_every = s.integer("sample_every", 10);
    std::vector<DiagnosticsRecord> history;
    DiagnosticsRecord prev;
    double defect = 0.0;
    RunStats stats;
    const auto final_state = run_to(
        std::move(state), t_end, cfg,
        {[&](const FlowState& st) {
            auto rec = measure(st, true);
            if (!history.empty() && rec.time > prev.time) defect = std::max(defect, energy_balance_defect(prev, rec));
            prev = rec;
            rec.grad_sq_shells = {};
            rec.enstrophy_S_shells = {};
            history.push_back(std::move(rec));
        }},
        opt, &stats);
    const fs::path dir = s.out_dir();
    write_text(dir / "diagnostics.csv", diagnostics_csv(history));
    write_field(dir / "omega_L_final.bin", final_state.omega_L, final_state.time, FieldId::OmegaL);
    write_field(dir / "u_S_final.bin", final_state.u_S, final_state.time, FieldId::SmallScaleVelocity);
    const auto& h0 = history.front();
    const double residual = defect / (nu * h0.grad_u_sq + 2.0 * h0.energy);
    auto m = manifest("run", s, &lad);
    m["N"] = g.N();
    m["nu"] = nu;
    m["t_end"] = t_end;
    m["dt"] = cfg.dt;
    m["steps"] = stats.steps;
    m["halvings"] = stats.halvings;
    m["energy_balance_residual"] = residual;
    m["outputs"] = {"diagnostics.csv", "omega_L_final.bin", "u_S_final.bin"};
    m["wall_seconds"] = seconds_since(t0);
    write_json(dir / "manifest.json", m);
    say(o.quiet, "t_end=" + num(t_end) + " nu=" + num(nu) + " N=" + std::to_string(g.N()) + " dt=" + num(cfg.dt) +
                     " steps=" + std::to_string(stats.steps) + " energy_balance_residual=" + num(residual));
    return 0;
}

int cmd_pair(const CommonOptions& o) {
    const auto t0 = Clock::now();
    const auto s = o.settings();
    const auto lad = s.ladder();
    const auto g = s.grid(lad);
    const double t_end = s.real_or_auto("t_end").value_or(lad.t_n);
    std::vector<double> nus;
    if (s.text("nus", "auto") == "auto")
        nus = {lad.nu_n, lad.nu_n / 2, lad.nu_n / 4};
    else
        nus = s.reals("nus");
    const int samples = s.integer("samples", 4);
    if (samples < 1) throw Error(ErrorKind::Usage, "samples must be positive");
    std::vector<double> ts;
    for (int k = 1; k < samples; ++k) ts.push_back(t_end * k / samples);
    const auto w = build_large_scale(lad, g);
    const auto u = build_small_scale(lad, g);
    StepConfig cfg;
    cfg.dt = s.has("dt") ? s.real("dt", 0.0) : initial_dt(FlowState::initial(w, u, 0.0), lad, s.sweep_config().dt);
    RunStats stats;
    const auto recs = paired_runs(w, u, nus, t_end, ts, cfg, &stats);

    const auto norms = measure_norms(w, u);
    const auto env = s.envelope_constants();
    const double E = calE_proxy(lad, env.C_delta);
    std::vector<GapRecord> all;
    bool within = true;
    for (const auto& series : recs)
        for (const auto& r : series) {
            all.push_back(r);
            for (auto k : {GapKind::I_L, GapKind::I_S, GapKind::II_L, GapKind::II_S})
                if (r.nu > 0.0 && gap_value(r, k) > envelope_eval(lad, norms, k, r.time, r.nu, E, env).value)
                    within = false;
        }
    const fs::path dir = s.out_dir();
    write_text(dir / "gaps.csv", gaps_csv(all));

    auto m = manifest("pair", s, &lad);
    m["N"] = g.N();
    m["t_end"] = t_end;
    m["dt"] = cfg.dt;
    m["steps"] = stats.steps;
    m["nus"] = nus;
    m["calE_proxy"] = E;
    m["within_envelopes"] = within;
    std::vector<GapRecord> at_end;
    for (const auto& series : recs)
        if (series.back().nu > 0.0) at_end.push_back(series.back());
    std::string line = "gaps at t=" + num(t_end) + " for " + std::to_string(nus.size()) + " viscosities";
    try {
        nlohmann::json ex;
        for (auto k : {GapKind::I_L, GapKind::I_S, GapKind::II_L, GapKind::II_S}) {
            ex[to_string(k)] = scaling_fit(at_end, k);
            line += std::string(" p_") + to_string(k) + "=" + num(ex[to_string(k)].get<double>());
        }
        m["nu_exponents"] = ex;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientSamples) throw;
    }
    m["outputs"] = {"gaps.csv"};
    m["wall_seconds"] = seconds_since(t0);
    write_json(dir / "manifest.json", m);
    say(o.quiet, line + (within ? " (within envelopes)" : " (ENVELOPE EXCEEDED)"));
    return within ? 0 : 1;
}

int cmd_tracers(const CommonOptions& o) {
    const auto t0 = Clock::now();
    const auto s = o.settings();
    const auto lad = s.ladder();
    const auto g = s.grid(lad);
    const double t_end = s.real_or_auto("t_end").value_or(lad.t_n);
    const auto s0 = FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), 0.0);
    const double dt = s.has("dt") ? s.real("dt", 0.0) : initial_dt(s0, lad, s.sweep_config().dt);
    const int every = s.integer("sample_every", 10);
    SolverProvider prov(s0, StepConfig{});
    std::vector<TracerEnsemble> snaps;
    auto start = TracerEnsemble::at_seeds(default_seeds(lad));
    snaps.push_back(start);
    double det_error = 0.0;
    long step_count = 0;
    auto final = advance(start, prov, t_end, dt, [&](const TracerEnsemble& e) {
        for (const auto& F : e.deformations) det_error = std::max(det_error, std::abs(determinant(F) - 1.0));
        if (++step_count % every == 0 || e.time == t_end) snaps.push_back(e);
    });
    const auto checks = check_lld(final, lad);
    bool pass = det_error <= 1e-6;
    for (const auto& c : checks) pass = pass && c.pass;
    const double cauchy = cauchy_check(s0, prov.state(), final);

    const fs::path dir = s.out_dir();
    write_text(dir / "tracers.csv", tracers_csv(snaps));
    auto m = manifest("tracers", s, &lad);
    m["N"] = g.N();
    m["t_end"] = t_end;
    m["dt"] = dt;
    m["steps"] = step_count;
    m["det_error"] = det_error;
    m["cauchy_residual"] = cauchy;
    nlohmann::json table = nlohmann::json::array();
    for (const auto& c : checks)
        table.push_back({{"name", c.name},
                         {"point", {c.point[0], c.point[1]}},
                         {"measured", c.measured},
                         {"lower", c.lower_envelope},
                         {"upper", c.upper_envelope},
                         {"pass", c.pass}});
    m["checks"] = table;
    m["outputs"] = {"tracers.csv"};
    m["wall_seconds"] = seconds_since(t0);
    write_json(dir / "manifest.json", m);
    if (!o.quiet) {
        for (const auto& c : checks)
            std::printf("%s %-12s (%+.4f, %+.4f) measured %.4g in [%.4g, %.4g]\n", c.pass ? "PASS" : "FAIL",
                        c.name.c_str(), c.point[0], c.point[1], c.measured, c.lower_envelope, c.upper_envelope);
        std::printf("det error %.3g, Cauchy residual %.3g\n", det_error, cauchy);
    }
    return pass ? 0 : 1;
}

std::vector<int> parse_n_list(const Settings& s) {
    std::vector<int> ns;
    std::stringstream ss(s.text("n", "3,4,5"));
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw Error(ErrorKind::Usage, "--n expects a comma-separated list of integers");
        ns.push_back(v);
    }
    return ns;
}

int cmd_sweep(const CommonOptions& o, const std::string& out) {
    const auto t0 = Clock::now();
    const auto s = o.settings();
    const auto ns = parse_n_list(s);
    const auto results = sweep(ns, s.sweep_config());
    const fs::path csv = out.empty() ? s.out_dir() / "sweep.csv" : fs::path(out);
    write_text(csv, sweep_csv(results));
    auto m = manifest("sweep", s, nullptr);
    nlohmann::json points = nlohmann::json::array();
    bool balanced = true;
    for (const auto& r : results) {
        points.push_back({{"n", r.n},
                          {"N", r.N},
                          {"dt", r.dt},
                          {"steps", r.steps},
                          {"wall_seconds", r.wall_seconds},
                          {"ladder", ladder_json(r.ladder)}});
        balanced = balanced && r.energy_residual <= 1e-3;
    }
    m["points"] = points;
    m["energy_balance_ok"] = balanced;
    if (results.size() >= 3) m["b0_hat"] = estimate_b0(results);
    m["outputs"] = {csv.filename().string()};
    m["wall_seconds"] = seconds_since(t0);
    write_json(csv.parent_path() / (csv.stem().string() + "_manifest.json"), m);
    if (!o.quiet)
        for (const auto& r : results)
            std::printf("n=%d N=%d nu_n=%.4g D_n=%.6g S_n=%.6g amplification=%.4g energy_residual=%.2e\n", r.n, r.N,
                        r.ladder.nu_n, r.D_n, r.S_n, r.amplification, r.energy_residual);
    return balanced ? 0 : 1;
}

int cmd_verify(bool quick) {
    auto print = [](const CheckResult& r) { std::cout << format_checks({r}) << std::flush; };
    const auto results = quick ? quick_checks(print) : acceptance_checks(print);
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    std::cout << passed << "/" << results.size() << " checks passed\n";
    return passed == results.size() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"vortex-stretching laboratory"};
    app.require_subcommand(1);
    CommonOptions opts;
    std::string out;
    bool quick = false;

    auto* gen = app.add_subcommand("gen-data", "write the initial fields and the parameter ladder");
    opts.attach(gen);
    auto* run = app.add_subcommand("run", "single evolution with diagnostics");
    opts.attach(run);
    for (auto* sub : {run}) {
        sub->add_option_function<std::string>("--nu", [&](const std::string& v) { opts.flags["nu"] = v; },
                                              "viscosity or 'auto' for nu_n");
    }
    auto* pair = app.add_subcommand("pair", "paired viscous/inviscid runs and gap records");
    opts.attach(pair);
    pair->add_option_function<std::string>("--nus", [&](const std::string& v) { opts.flags["nus"] = v; },
                                           "comma list of viscosities or 'auto'");
    pair->add_option_function<std::string>("--samples", [&](const std::string& v) { opts.flags["samples"] = v; },
                                           "number of equal sample intervals");
    auto* tracers = app.add_subcommand("tracers", "flow-map and deformation checks");
    opts.attach(tracers);
    for (auto* sub : {run, pair, tracers})
        sub->add_option_function<std::string>("--t-end", [&](const std::string& v) { opts.flags["t_end"] = v; },
                                              "end time or 'auto' for t_n");
    auto* sw = app.add_subcommand("sweep", "zeroth-law sweep over n");
    opts.attach(sw);
    sw->add_option("--out", out, "sweep CSV path (default <out-dir>/sweep.csv)");
    auto* verify = app.add_subcommand("verify", "run the property suite and print a pass/fail table");
    verify->add_flag("--quick", quick, "small fast versions of the checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        if (gen->parsed()) return cmd_gen_data(opts);
        if (run->parsed()) return cmd_run(opts);
        if (pair->parsed()) return cmd_pair(opts);
        if (tracers->parsed()) return cmd_tracers(opts);
        if (sw->parsed()) return cmd_sweep(opts, out);
        if (verify->parsed()) return cmd_verify(quick);
    } catch (const Error& e) {
        std::cerr << "vsl: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Usage:
            case ErrorKind::UnsupportedRange:
            case ErrorKind::DegenerateLadder:
            case ErrorKind::ResolutionInfeasible: return 2;
            default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "vsl: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace vsl
