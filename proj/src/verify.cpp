#include "vsl/verify.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "vsl/cli.hpp"
#include "vsl/error.hpp"
#include "vsl/gap.hpp"
#include "vsl/harness.hpp"
#include "vsl/io.hpp"
#include "vsl/lagrangian.hpp"
#include "vsl/velgrad.hpp"

namespace vsl {

namespace {

constexpr double two_over_pi = 2.0 / std::numbers::pi;

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Check {
    std::string name;
    double time_limit;
    std::function<bool(std::string&)> body;
};

std::vector<CheckResult> run_all(const std::vector<Check>& checks, const CheckCallback& cb) {
    std::vector<CheckResult> out;
    for (const auto& c : checks) {
        CheckResult r;
        r.name = c.name;
        r.time_limit = c.time_limit;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.pass = c.body(r.detail);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.time_limit > 0.0 && r.seconds > r.time_limit) {
            r.pass = false;
            r.detail += fmt("; runtime %.1f s exceeds %.0f s", r.seconds, r.time_limit);
        }
        if (cb) cb(r);
        out.push_back(std::move(r));
    }
    return out;
}

ScalarField eigenmode(const TorusGrid& g) {
    const double k = std::numbers::pi / g.L();
    return ScalarField::from_function(g, [k](double x, double y) { return std::sin(k * x) * std::sin(k * y); });
}

bool decaying_mode(std::string& d, int N, double t_end) {
    TorusGrid g(1.0, N);
    const double nu = 1e-3;
    const auto s = FlowState::initial(eigenmode(g), ScalarField::zeros(g), nu);
    StepConfig cfg;
    cfg.dt = 1e-3;
    const auto out = run_to(s, t_end, cfg, {});
    const double decay = std::exp(-2.0 * std::pow(std::numbers::pi / g.L(), 2) * nu * t_end);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double e = decay * s.omega_L.values()[i];
        err = std::max(err, std::abs(out.omega_L.values()[i] - e));
        ref = std::max(ref, std::abs(e));
    }
    d = fmt("relative max error %.2e (limit 1e-8)", err / ref);
    return err / ref <= 1e-8;
}

bool conservation(std::string& d, int n, int N, double dt) {
    const auto lad = build_ladder(n, 0.1, 0.4);
    TorusGrid g(lad.L, N);
    const auto s = FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), 0.0);
    StepConfig cfg;
    cfg.dt = dt;
    const auto d0 = measure(s, false);
    const auto d1 = measure(run_to(s, lad.t_n, cfg, {}), false);
    const double e = std::abs(d1.energy / d0.energy - 1.0);
    const double zL = std::abs(d1.enstrophy_L / d0.enstrophy_L - 1.0);
    const double zS = std::abs(d1.energy_S / d0.energy_S - 1.0);
    d = fmt("energy drift %.2e, enstrophy drift %.2e, small-scale energy drift %.2e (limit 1e-4)", e, zL, zS);
    return e <= 1e-4 && zL <= 1e-4 && zS <= 1e-4;
}

/// d1u1 at the origin, spectral and oracle, for one n.
std::pair<double, double> origin_gradient(int n) {
    const auto lad = build_ladder(n, 0.1, 0.4);
    TorusGrid g(lad.L, resolution_for_spacing(lad.L, large_scale_spacing(lad)));
    const auto w = build_large_scale(lad, g);
    return {grad_at(w, {0.0, 0.0}).matrix[0][0], pv_oracle(w, {0.0, 0.0}).matrix[0][0]};
}

bool log_law(std::string& d, int n_lo, int n_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, worst = 0;
    for (int n = n_lo; n <= n_hi; ++n) {
        const auto [spec, oracle] = origin_gradient(n);
        worst = std::max(worst, std::abs(spec - oracle) / std::abs(oracle));
        const double x = n * std::log(2.0);
        sx += x;
        sy += spec;
        sxx += x * x;
        sxy += x * spec;
    }
    const double m = n_hi - n_lo + 1;
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double rel = std::abs(slope / two_over_pi - 1.0);
    d = fmt("slope %.4f vs 2/pi (rel. dev. %.3f, limit 0.15); worst spectral/oracle mismatch %.2e (limit 1e-2)", slope,
            rel, worst);
    return rel <= 0.15 && worst <= 1e-2;
}

struct LldOutcome {
    int N = 0;
    double ratio = 0.0;
    double offdiag = 0.0;
    double det_error = 0.0;
};

LldOutcome measure_lld(int n, double dt) {
    const auto lad = build_ladder(n, 0.1, 0.4);
    TorusGrid g(lad.L, resolution_for_spacing(lad.L, large_scale_spacing(lad)));
    StepConfig cfg;
    cfg.evolve_small = false;
    SolverProvider prov(FlowState::initial(build_large_scale(lad, g), ScalarField::zeros(g), 0.0), cfg);
    LldOutcome o;
    o.N = g.N();
    const auto e = advance(TracerEnsemble::at_seeds({{0.0, 0.0}}), prov, lad.t_n, dt, [&](const TracerEnsemble& s) {
        o.det_error = std::max(o.det_error, std::abs(determinant(s.deformations[0]) - 1.0));
    });
    const auto checks = check_lld(e, lad);
    o.ratio = std::log(e.deformations[0][0][0]) / (two_over_pi * lad.t_n * std::log(1.0 / lad.ell_bar));
    o.offdiag = checks[1].measured;
    return o;
}

bool lagrangian_deformation(std::string& d, int n, double dt) {
    const auto o = measure_lld(n, dt);
    d = fmt("N=%d: stretching ratio %.4f (band [0.6, 1.4]), off-diagonal %.2e (limit 0.3), |det-1| %.2e (limit 1e-6)",
            o.N, o.ratio, o.offdiag, o.det_error);
    return o.ratio >= 0.6 && o.ratio <= 1.4 && o.offdiag <= 0.3 && o.det_error <= 1e-6;
}

double cauchy_residual(const ParameterLadder& lad, int N, double dt) {
    TorusGrid g(lad.L, N);
    const auto s0 = FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), 0.0);
    SolverProvider prov(s0, StepConfig{});
    const auto e = advance(TracerEnsemble::at_seeds(default_seeds(lad)), prov, lad.t_n / 2, dt);
    return cauchy_check(s0, prov.state(), e);
}

bool cauchy(std::string& d, int n, int N, double dt) {
    const auto lad = build_ladder(n, 0.1, 0.4);
    const double coarse = cauchy_residual(lad, N, dt);
    const double fine = cauchy_residual(lad, 2 * N, dt / 2);
    d = fmt("residual %.3e at N=%d (limit 1e-2), %.3e at N=%d, reduction %.2fx (need >= 4)", coarse, N, fine, 2 * N,
            coarse / fine);
    return coarse <= 1e-2 && coarse / fine >= 4.0;
}

bool gap_scaling(std::string& d, int n, int N, double dt, bool require_exponents) {
    const auto lad = build_ladder(n, 0.1, 0.4);
    TorusGrid g(lad.L, N);
    const std::vector<double> nus{lad.nu_n, lad.nu_n / 2, lad.nu_n / 4, 0.0};
    StepConfig cfg;
    cfg.dt = dt;
    const auto recs = paired_runs(build_large_scale(lad, g), build_small_scale(lad, g), nus, lad.t_n, {}, cfg);
    bool zero = true;
    for (const auto& r : recs[3]) zero = zero && r.I_L == 0.0 && r.I_S == 0.0 && r.II_L == 0.0 && r.II_S == 0.0;
    const std::vector<GapRecord> at_end{recs[0].back(), recs[1].back(), recs[2].back()};
    const double pIL = scaling_fit(at_end, GapKind::I_L);
    const double pIIS = scaling_fit(at_end, GapKind::II_S);
    if (!require_exponents) {
        d = fmt("nu=0 pair identically zero: %s (exponents I_L %.3f, II_S %.3f not checked)", zero ? "yes" : "no", pIL,
                pIIS);
        return zero;
    }
    d = fmt("exponent I_L %.3f (band [0.85, 1.15]), II_S %.3f (band [0.8, 1.2]); nu=0 pair identically zero: %s", pIL,
            pIIS, zero ? "yes" : "no");
    return zero && pIL >= 0.85 && pIL <= 1.15 && pIIS >= 0.8 && pIIS <= 1.2;
}

bool stretching(std::string& d, const std::vector<int>& ns, bool require_amplification) {
    const auto res = sweep(ns, SweepConfig{});
    bool increasing = true, amplified = true;
    std::string s_list, a_list;
    for (std::size_t k = 0; k < res.size(); ++k) {
        if (k > 0) increasing = increasing && res[k].S_n > res[k - 1].S_n;
        amplified = amplified && res[k].amplification >= res[k].amplification_threshold;
        s_list += fmt("%sS_%d=%.4f", k ? ", " : "", res[k].n, res[k].S_n);
        a_list += fmt("%s%.3g/%.3g", k ? ", " : "", res[k].amplification, res[k].amplification_threshold);
    }
    d = fmt("%s (strictly increasing: %s); small-scale enstrophy amplification vs threshold: %s", s_list.c_str(),
            increasing ? "yes" : "no", a_list.c_str());
    return increasing && (!require_amplification || amplified);
}

bool determinism(std::string& d, const std::string& n_list) {
    const auto dir = std::filesystem::temp_directory_path() / ("vsl-determinism-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    auto run = [&](const std::string& name) {
        const std::string out = (dir / name).string();
        std::vector<std::string> args{"vsl",       "sweep", "--n",     n_list, "--delta", "0.1",
                                      "--a0",      "0.4",   "--out",   out,    "--out-dir", dir.string(),
                                      "--quiet"};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        const int code = run_cli(static_cast<int>(argv.size()), argv.data());
        if (code != 0) throw Error(ErrorKind::Io, "sweep exited with code " + std::to_string(code));
        return read_text(out);
    };
    const std::string a = run("sweep_a.csv");
    const std::string b = run("sweep_b.csv");
    std::filesystem::remove_all(dir);
    const long rows = static_cast<long>(std::count(a.begin(), a.end(), '\n')) - 1;
    d = fmt("%ld rows, %zu bytes, identical: %s", rows, a.size(), a == b ? "yes" : "no");
    return a == b && !a.empty();
}

bool field_round_trip(std::string& d) {
    const auto lad = build_ladder(3, 0.1, 0.4);
    TorusGrid g(lad.L, 128);
    const auto w = build_large_scale(lad, g);
    const auto path = std::filesystem::temp_directory_path() / ("vsl-field-" + std::to_string(::getpid()) + ".bin");
    write_field(path, w, 0.25, FieldId::OmegaL);
    const auto back = read_field(path);
    std::filesystem::remove(path);
    bool same = back.time == 0.25 && back.id == FieldId::OmegaL && back.field.grid() == g;
    for (std::size_t i = 0; same && i < g.size(); ++i) same = back.field.values()[i] == w.values()[i];
    d = same ? "bitwise identical after write/read" : "mismatch after write/read";
    return same;
}

}  // namespace

std::vector<CheckResult> acceptance_checks(const CheckCallback& cb) {
    return run_all(
        {
            {"solver_analytic_decay", 10, [](std::string& d) { return decaying_mode(d, 128, 1.0); }},
            {"euler_conservation", 60, [](std::string& d) { return conservation(d, 4, 256, 2e-3); }},
            {"log_law", 120, [](std::string& d) { return log_law(d, 3, 7); }},
            {"lagrangian_deformation", 120, [](std::string& d) { return lagrangian_deformation(d, 6, 2e-3); }},
            {"cauchy_formula", 300, [](std::string& d) { return cauchy(d, 5, 512, 2e-3); }},
            {"inviscid_gap_scaling", 600, [](std::string& d) { return gap_scaling(d, 4, 256, 2e-3, true); }},
            {"vortex_stretching", 900, [](std::string& d) { return stretching(d, {3, 4, 5}, true); }},
            {"determinism", 0, [](std::string& d) { return determinism(d, "3,4"); }},
        },
        cb);
}

std::vector<CheckResult> quick_checks(const CheckCallback& cb) {
    return run_all(
        {
            {"decaying_mode_N32", 0, [](std::string& d) { return decaying_mode(d, 32, 0.1); }},
            {"euler_conservation_n3", 0, [](std::string& d) { return conservation(d, 3, 128, 2e-3); }},
            {"spectral_vs_oracle_n3_n4",
             0,
             [](std::string& d) {
                 double worst = 0.0;
                 for (int n : {3, 4}) {
                     const auto [s, o] = origin_gradient(n);
                     worst = std::max(worst, std::abs(s - o) / std::abs(o));
                 }
                 d = fmt("worst relative mismatch %.2e (limit 1e-2)", worst);
                 return worst <= 1e-2;
             }},
            {"lagrangian_det_n3", 0,
             [](std::string& d) {
                 const auto o = measure_lld(3, 5e-3);
                 d = fmt("|det-1| %.2e (limit 1e-6), stretching ratio %.3f", o.det_error, o.ratio);
                 return o.det_error <= 1e-6;
             }},
            {"gap_zero_pair_n3", 0, [](std::string& d) { return gap_scaling(d, 3, 128, 5e-3, false); }},
            {"field_round_trip", 0, field_round_trip},
            {"sweep_determinism_n3", 0, [](std::string& d) { return determinism(d, "3"); }},
        },
        cb);
}

std::string format_checks(const std::vector<CheckResult>& results) {
    std::ostringstream os;
    for (const auto& r : results)
        os << (r.pass ? "PASS " : "FAIL ") << r.name << " [" << fmt("%.1f s", r.seconds) << "] " << r.detail << "\n";
    return os.str();
}

}  // namespace vsl
