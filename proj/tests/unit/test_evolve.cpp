#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vsl/error.hpp"
#include "vsl/evolve.hpp"
#include "vsl/ladder.hpp"

using namespace vsl;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField eigenmode(const TorusGrid& g) {
    const double k = pi / g.L();
    return ScalarField::from_function(g, [k](double x, double y) { return std::sin(k * x) * std::sin(k * y); });
}

ScalarField smooth_random(const TorusGrid& g, unsigned seed, int kmax = 4) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::array<double, 4>> modes;
    for (int a = -kmax; a <= kmax; ++a)
        for (int b = 0; b <= kmax; ++b)
            if (b > 0 || a > 0) modes.push_back({double(a), double(b), u(rng), u(rng)});
    const double k = pi / g.L();
    return ScalarField::from_function(g, [&](double x, double y) {
        double s = 0.0;
        for (const auto& m : modes) {
            const double ph = k * (m[0] * x + m[1] * y);
            s += (m[2] * std::cos(ph) + m[3] * std::sin(ph)) / (m[0] * m[0] + m[1] * m[1]);
        }
        return s;
    });
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("single decaying mode matches the closed form") {
    TorusGrid g(1.0, 128);
    const double nu = 1e-3;
    auto s = FlowState::initial(eigenmode(g), ScalarField::zeros(g), nu);
    StepConfig cfg;
    cfg.dt = 1e-3;
    const auto out = run_to(s, 1.0, cfg, {});
    const double decay = std::exp(-2.0 * pi * pi * nu);
    std::vector<double> expect(g.size());
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = decay * s.omega_L.values()[i];
    CHECK(out.time == 1.0);
    CHECK(max_diff(out.omega_L.values(), expect) <= 1e-8 * max_abs(expect));
}

TEST_CASE("inviscid energy drift is small") {
    TorusGrid g(1.0, 256);
    auto s = FlowState::initial(smooth_random(g, 4), ScalarField::zeros(g), 0.0);
    StepConfig cfg;
    cfg.dt = 2e-3;
    const double e0 = measure(s, false).energy;
    const auto out = run_to(s, 0.5, cfg, {});
    const double e1 = measure(out, false).energy;
    CHECK(std::abs(e1 - e0) / e0 / 0.5 < 1e-6);
}

TEST_CASE("constant small-scale field is preserved") {
    TorusGrid g(1.0, 64);
    const auto one = ScalarField::from_function(g, [](double, double) { return 1.0; });
    auto s = FlowState::initial(smooth_random(g, 1), one, 0.01);
    StepConfig cfg;
    cfg.dt = 5e-3;
    const auto out = run_to(s, 0.2, cfg, {});
    for (double v : out.u_S.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_to: zero-length run and composability") {
    TorusGrid g(1.0, 64);
    auto s = FlowState::initial(smooth_random(g, 2), smooth_random(g, 3), 1e-3);
    StepConfig cfg;
    cfg.dt = 4e-3;
    RunStats st;
    const auto same = run_to(s, s.time, cfg, {}, {}, &st);
    CHECK(st.steps == 0);
    CHECK(max_diff(same.omega_L.values(), s.omega_L.values()) == 0.0);

    const auto full = run_to(s, 0.3, cfg, {});
    const auto half = run_to(run_to(s, 0.15, cfg, {}), 0.3, cfg, {});
    CHECK(max_diff(full.omega_L.values(), half.omega_L.values()) < 1e-9);
    CHECK(max_diff(full.u_S.values(), half.u_S.values()) < 1e-9);
}

TEST_CASE("run_to: observers fire at sample times and the run lands exactly") {
    TorusGrid g(1.0, 32);
    auto s = FlowState::initial(smooth_random(g, 2), ScalarField::zeros(g), 0.0);
    StepConfig cfg;
    cfg.dt = 0.03;
    std::vector<double> seen;
    RunOptions opt;
    opt.sample_times = {0.05, 0.1, 0.25};
    const auto out = run_to(s, 0.25, cfg, {[&](const FlowState& st) { seen.push_back(st.time); }}, opt);
    REQUIRE(seen.size() == 4);
    CHECK(seen[0] == 0.0);
    CHECK(seen[1] == 0.05);
    CHECK(seen[2] == 0.1);
    CHECK(seen[3] == 0.25);
    CHECK(out.time == 0.25);
}

TEST_CASE("CFL violation and adaptive halving") {
    TorusGrid g(1.0, 64);
    auto s = FlowState::initial(smooth_random(g, 5), ScalarField::zeros(g), 0.0);
    const double limit = cfl_limit(s, 0.5);
    StepConfig cfg;
    cfg.dt = 3.0 * limit;
    try {
        step(s, cfg);
        FAIL("expected CflViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CflViolation);
    }
    RunStats st;
    run_to(s, 20 * limit, cfg, {}, {}, &st);
    CHECK(st.halvings >= 2);
    RunOptions strict;
    strict.adaptive = false;
    CHECK_THROWS_AS(run_to(s, 20 * limit, cfg, {}, strict), Error);
}

TEST_CASE("blow-up guard") {
    TorusGrid g(1.0, 64);
    auto s = FlowState::initial(smooth_random(g, 6, 12), ScalarField::zeros(g), 0.0);
    StepConfig cfg;
    cfg.cfl_cap = 1e9;
    cfg.dt = 60.0 * cfl_limit(s, 0.5);
    RunOptions opt;
    opt.adaptive = false;
    try {
        run_to(s, 400 * cfg.dt, cfg, {}, opt);
        FAIL("expected BlowupDetected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BlowupDetected);
    }
}

TEST_CASE("ladder data under Euler: conservation and symmetry") {
    const auto lad = build_ladder(4, 0.1, 0.4);
    TorusGrid g(lad.L, 256);
    auto s = FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), 0.0);
    StepConfig cfg;
    cfg.dt = 2e-3;
    const auto d0 = measure(s, false);
    double worst_sym = 0.0;
    auto obs = [&](const FlowState& st) {
        const int n = g.N();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                worst_sym = std::max(worst_sym, std::abs(st.omega_L(i, j) + st.omega_L(g.mirror(i), j)));
                worst_sym = std::max(worst_sym, std::abs(st.omega_L(i, j) + st.omega_L(i, g.mirror(j))));
            }
    };
    RunOptions opt;
    opt.sample_every = 10;
    const auto out = run_to(s, lad.t_n, cfg, {obs}, opt);
    const auto d1 = measure(out, false);
    CHECK(std::abs(d1.enstrophy_L / d0.enstrophy_L - 1.0) < 1e-4);
    CHECK(std::abs(d1.energy_L / d0.energy_L - 1.0) < 1e-4);
    CHECK(std::abs(d1.energy_S / d0.energy_S - 1.0) < 1e-4);
    CHECK(worst_sym < 1e-10);
    CHECK(std::abs(lp_norm(out.omega_L, Norm::L2) / lp_norm(s.omega_L, Norm::L2) - 1.0) < 1e-4);
}

TEST_CASE("maximum principle with the mollification scale resolved by 8 nodes") {
    const auto lad = build_ladder(3, 0.1, 0.4);
    TorusGrid g(lad.L, 512);
    auto s = FlowState::initial(build_large_scale(lad, g), smooth_random(g, 12), 0.0);
    StepConfig cfg;
    cfg.dt = 1e-3;
    double worst_w = 0.0, worst_u = 0.0;
    RunOptions opt;
    opt.sample_every = 5;
    run_to(s, lad.t_n, cfg, {[&](const FlowState& st) {
               worst_w = std::max(worst_w, max_abs(st.omega_L.values()));
               worst_u = std::max(worst_u, max_abs(st.u_S.values()));
           }},
           opt);
    CHECK(worst_w <= s.sup_omega0 * (1 + 1e-3));
    CHECK(worst_u <= s.sup_uS0 * (1 + 1e-3));
}

TEST_CASE("decoupling: the large scale ignores the small scale bitwise") {
    TorusGrid g(1.0, 64);
    const auto w = smooth_random(g, 8);
    StepConfig cfg;
    cfg.dt = 5e-3;
    const auto a = run_to(FlowState::initial(w, ScalarField::zeros(g), 1e-3), 0.1, cfg, {});
    const auto b = run_to(FlowState::initial(w, smooth_random(g, 9), 1e-3), 0.1, cfg, {});
    CHECK(std::equal(a.omega_L.values().begin(), a.omega_L.values().end(), b.omega_L.values().begin()));
}

TEST_CASE("fourth-order convergence in time") {
    TorusGrid g(1.0, 64);
    const auto s = FlowState::initial(smooth_random(g, 10), smooth_random(g, 11), 5e-3);
    RunOptions opt;
    opt.adaptive = false;
    auto run = [&](double dt) {
        StepConfig cfg;
        cfg.dt = dt;
        return run_to(s, 0.4, cfg, {}, opt);
    };
    const double dt = 0.02;
    const auto ref = run(dt / 8);
    const auto a = run(dt);
    const auto b = run(dt / 2);
    const double ea = max_diff(a.omega_L.values(), ref.omega_L.values()) + max_diff(a.u_S.values(), ref.u_S.values());
    const double eb = max_diff(b.omega_L.values(), ref.omega_L.values()) + max_diff(b.u_S.values(), ref.u_S.values());
    CHECK(ea / eb >= 8.0);
}

TEST_CASE("energy balance residual") {
    std::vector<DiagnosticsRecord> few(2);
    CHECK_THROWS_AS(energy_balance_residual(few), Error);

    TorusGrid g(1.0, 64);
    std::vector<DiagnosticsRecord> hist;
    auto rec = [&](const FlowState& st) { hist.push_back(measure(st, false)); };
    StepConfig cfg;
    cfg.dt = 1e-3;
    RunOptions opt;
    opt.sample_every = 1;
    run_to(FlowState::initial(eigenmode(g), ScalarField::zeros(g), 1e-2), 0.2, cfg, {rec}, opt);
    CHECK(energy_balance_residual(hist) <= 1e-6);

    hist.clear();
    run_to(FlowState::initial(smooth_random(g, 3), smooth_random(g, 4), 0.0), 0.2, cfg, {rec}, opt);
    CHECK(energy_balance_residual(hist) <= 1e-4);
}

TEST_CASE("energy balance on the ladder with nu_4") {
    const auto lad = build_ladder(4, 0.1, 0.4);
    TorusGrid g(lad.L, 256);
    std::vector<DiagnosticsRecord> hist;
    StepConfig cfg;
    cfg.dt = 2e-3;
    RunOptions opt;
    opt.sample_every = 1;
    run_to(FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), lad.nu_n), lad.t_n, cfg,
           {[&](const FlowState& st) { hist.push_back(measure(st, false)); }}, opt);
    CHECK(energy_balance_residual(hist) <= 1e-3);
}
