#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vsl/error.hpp"
#include "vsl/lagrangian.hpp"

using namespace vsl;

namespace {

constexpr double pi = std::numbers::pi;

FlowState ladder_state(int n, const ScalarField* u_S = nullptr) {
    const auto lad = build_ladder(n, 0.1, 0.4);
    TorusGrid g(lad.L, resolution_for_spacing(lad.L, large_scale_spacing(lad)));
    return FlowState::initial(build_large_scale(lad, g), u_S ? *u_S : ScalarField::zeros(g), 0.0);
}

ScalarField smooth_blob(const TorusGrid& g) {
    return ScalarField::from_function(g, [](double x, double y) {
        const double r2 = (x * x + y * y) / 0.04;
        return r2 < 1.0 ? y * std::exp(-1.0 / (1.0 - r2)) : 0.0;
    });
}

}  // namespace

TEST_CASE("zero velocity keeps tracers fixed") {
    TorusGrid g(1.0, 32);
    FrozenProvider prov(FlowState::initial(ScalarField::zeros(g), ScalarField::zeros(g), 0.0));
    const auto e = advance(TracerEnsemble::at_seeds({{0.1, 0.2}, {-0.3, 0.0}}), prov, 0.5, 0.1);
    CHECK(e.time == 0.5);
    for (std::size_t s = 0; s < e.size(); ++s) {
        CHECK(e.positions[s] == e.seeds[s]);
        CHECK(e.deformations[s] == Matrix2{{{1.0, 0.0}, {0.0, 1.0}}});
    }
}

TEST_CASE("steady hyperbolic flow: closed-form flow map") {
    const double lam = 1.3;
    AnalyticProvider prov([lam](double, Point2 p) {
        VelocitySample s;
        s.u = {lam * p[0], -lam * p[1]};
        s.grad = {{{lam, 0.0}, {0.0, -lam}}};
        return s;
    });
    const double t = 0.8;
    const auto e = advance(TracerEnsemble::at_seeds({{0.2, -0.1}, {0.0, 0.3}}), prov, t, 1e-3);
    for (std::size_t s = 0; s < e.size(); ++s) {
        const auto& F = e.deformations[s];
        CHECK(std::abs(F[0][0] - std::exp(lam * t)) < 1e-8);
        CHECK(std::abs(F[1][1] - std::exp(-lam * t)) < 1e-8);
        CHECK(F[0][1] == 0.0);
        CHECK(F[1][0] == 0.0);
        CHECK(std::abs(e.positions[s][0] - e.seeds[s][0] * std::exp(lam * t)) < 1e-8);
        CHECK(std::abs(e.positions[s][1] - e.seeds[s][1] * std::exp(-lam * t)) < 1e-8);
    }
}

TEST_CASE("rigid rotation preserves distance to the centre") {
    const double om = 2.0;
    AnalyticProvider prov([om](double, Point2 p) {
        VelocitySample s;
        s.u = {-om * p[1], om * p[0]};
        s.grad = {{{0.0, -om}, {om, 0.0}}};
        return s;
    });
    double worst_r = 0.0, worst_det = 0.0;
    const auto seeds = std::vector<Point2>{{0.3, 0.0}, {0.1, -0.2}};
    advance(TracerEnsemble::at_seeds(seeds), prov, 2.0, 1e-3, [&](const TracerEnsemble& e) {
        for (std::size_t s = 0; s < e.size(); ++s) {
            worst_r = std::max(worst_r, std::abs(std::hypot(e.positions[s][0], e.positions[s][1]) -
                                                 std::hypot(seeds[s][0], seeds[s][1])));
            worst_det = std::max(worst_det, std::abs(determinant(e.deformations[s]) - 1.0));
        }
    });
    CHECK(worst_r < 1e-8);
    CHECK(worst_det < 1e-8);
}

TEST_CASE("solver provider serves steps in order only") {
    TorusGrid g(1.0, 32);
    const auto w = ScalarField::from_function(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    SolverProvider prov(FlowState::initial(w, ScalarField::zeros(g), 0.0), StepConfig{});
    prov.stages(0.0, 0.01);
    CHECK(prov.state().time == doctest::Approx(0.01));
    try {
        prov.stages(0.0, 0.01);
        FAIL("expected StageUnavailable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::StageUnavailable);
    }
}

TEST_CASE("solver-synchronised tracers track the solver's own flow") {
    // Stationary eigenmode: the tracers must follow the frozen field exactly.
    TorusGrid g(1.0, 64);
    const auto w = ScalarField::from_function(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    const auto st = FlowState::initial(w, ScalarField::zeros(g), 0.0);
    SolverProvider live(st, StepConfig{});
    FrozenProvider frozen(st);
    const std::vector<Point2> seeds{{0.1, 0.2}, {-0.4, 0.35}};
    const auto a = advance(TracerEnsemble::at_seeds(seeds), live, 0.5, 0.01);
    const auto b = advance(TracerEnsemble::at_seeds(seeds), frozen, 0.5, 0.01);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        CHECK(std::abs(a.positions[s][0] - b.positions[s][0]) < 1e-10);
        CHECK(std::abs(a.deformations[s][0][1] - b.deformations[s][0][1]) < 1e-10);
    }
}

TEST_CASE("ladder flow, n = 4: area preservation, positivity, containment, monotone stretching") {
    const auto lad = build_ladder(4, 0.1, 0.4);
    const auto st = ladder_state(4);
    StepConfig cfg;
    cfg.evolve_small = false;
    SolverProvider prov(st, cfg);
    double worst_det = 0.0, prev_d11 = 1.0, worst_drop = 0.0;
    bool positive = true, contained = true;
    const auto final = advance(TracerEnsemble::at_seeds(default_seeds(lad)), prov, lad.t_n, 2e-3,
                               [&](const TracerEnsemble& e) {
                                   for (std::size_t s = 0; s < e.size(); ++s) {
                                       worst_det = std::max(worst_det, std::abs(determinant(e.deformations[s]) - 1.0));
                                       positive = positive && e.deformations[s][0][0] > 0.0;
                                       contained = contained && in_region_D(lad, e.positions[s]);
                                   }
                                   worst_drop = std::max(worst_drop, prev_d11 - e.deformations[4][0][0]);
                                   prev_d11 = e.deformations[4][0][0];
                               });
    CHECK(worst_det < 1e-6);
    CHECK(positive);
    CHECK(contained);
    CHECK(worst_drop <= 1e-3);

    const auto checks = check_lld(final, lad);
    REQUIRE(checks.size() == 2 * final.size());
    for (const auto& c : checks) CHECK(c.pass);

    const auto at0 = check_lld(TracerEnsemble::at_seeds(default_seeds(lad)), lad);
    for (const auto& c : at0) {
        CHECK(c.pass);
        CHECK(c.measured == 0.0);
    }

    auto outside = TracerEnsemble::at_seeds({{lad.radius_D, 0.0}});
    try {
        check_lld(outside, lad);
        FAIL("expected SeedOutsideRegion");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeedOutsideRegion);
    }
}

TEST_CASE("default seeds lie in D'") {
    const auto lad = build_ladder(5, 0.1, 0.4);
    const auto seeds = default_seeds(lad);
    CHECK(seeds.size() == 11);
    for (const auto& s : seeds) CHECK(in_region_D_prime(lad, s));
}

TEST_CASE("Yudovich estimate") {
    const auto lad = build_ladder(5, 0.1, 0.4);
    const auto st = ladder_state(5);
    const TorusGrid& g = st.grid();
    const auto pts = random_points_in_disc(lad.ell, 100, 11);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < 50; ++i) pairs.emplace_back(2 * i, 2 * i + 1);

    const auto start = TracerEnsemble::at_seeds(pts);
    for (const auto& c : check_yudovich(start, pairs, lad, g)) {
        CHECK(c.pass);
        CHECK(c.measured == doctest::Approx(c.lower_envelope));
    }

    FrozenProvider still(FlowState::initial(ScalarField::zeros(g), ScalarField::zeros(g), 0.0));
    const auto idle = advance(start, still, lad.t_n, 1e-2);
    const auto idle_checks = check_yudovich(idle, pairs, lad, g);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        CHECK(idle_checks[k].pass);
        const auto [i, j] = pairs[k];
        CHECK(idle_checks[k].measured == torus_distance(g, idle.seeds[i], idle.seeds[j]) / lad.L);
    }

    StepConfig cfg;
    cfg.evolve_small = false;
    SolverProvider prov(st, cfg);
    const auto moved = advance(start, prov, lad.t_n, 1e-3);
    for (const auto& c : check_yudovich(moved, pairs, lad, g, 2.0)) CHECK(c.pass);
}

TEST_CASE("Cauchy formula") {
    const auto lad = build_ladder(4, 0.1, 0.4);
    TorusGrid g(lad.L, resolution_for_spacing(lad.L, large_scale_spacing(lad)));
    const auto st = FlowState::initial(build_large_scale(lad, g), smooth_blob(g), 0.0);
    const auto seeds = default_seeds(lad);
    CHECK(cauchy_check(st, st, TracerEnsemble::at_seeds(seeds)) == 0.0);

    auto viscous = st;
    viscous.nu = 1e-3;
    CHECK_THROWS_AS(cauchy_check(viscous, viscous, TracerEnsemble::at_seeds(seeds)), Error);

    auto residual = [&](int refine) {
        TorusGrid gr(lad.L, refine * g.N());
        const auto s0 = FlowState::initial(build_large_scale(lad, gr), smooth_blob(gr), 0.0);
        SolverProvider prov(s0, StepConfig{});
        const auto e = advance(TracerEnsemble::at_seeds(seeds), prov, lad.t_n / 2, 2e-3 / refine);
        return cauchy_check(s0, prov.state(), e);
    };
    const double coarse = residual(1);
    const double fine = residual(2);
    CHECK(coarse <= 1e-2);
    CHECK(coarse / fine >= 4.0);
}
