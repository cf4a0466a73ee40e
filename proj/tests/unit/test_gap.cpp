#include <cmath>
#include <numbers>

#include "doctest.h"
#include "vsl/error.hpp"
#include "vsl/gap.hpp"

using namespace vsl;

namespace {

const ParameterLadder& ladder4() {
    static const auto lad = build_ladder(4, 0.1, 0.4);
    return lad;
}

/// Pairs at n = 4, N = 256 for nu_4, nu_4/2, nu_4/4 sampled at quarters of t_n.
const std::vector<std::vector<GapRecord>>& ladder_pairs() {
    static const auto recs = [] {
        const auto& lad = ladder4();
        TorusGrid g(lad.L, 256);
        const std::vector<double> nus{lad.nu_n, lad.nu_n / 2, lad.nu_n / 4};
        std::vector<double> ts;
        for (int k = 1; k < 4; ++k) ts.push_back(lad.t_n * k / 4);
        StepConfig cfg;
        cfg.dt = 2e-3;
        return paired_runs(build_large_scale(lad, g), build_small_scale(lad, g), nus, lad.t_n, ts, cfg);
    }();
    return recs;
}

GapRecord synthetic(double nu, double value) {
    GapRecord r;
    r.nu = nu;
    r.I_L = r.I_S = r.II_L = r.II_S = value;
    return r;
}

}  // namespace

TEST_CASE("inviscid run paired with itself has identically zero gaps") {
    const auto lad = build_ladder(3, 0.1, 0.4);
    TorusGrid g(lad.L, 128);
    const std::vector<double> nus{0.0};
    const std::vector<double> ts{0.01, 0.02};
    StepConfig cfg;
    cfg.dt = 5e-3;
    const auto recs = paired_runs(build_large_scale(lad, g), build_small_scale(lad, g), nus, 0.03, ts, cfg);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].size() == 4);
    for (const auto& r : recs[0]) {
        CHECK(r.I_L == 0.0);
        CHECK(r.I_S == 0.0);
        CHECK(r.II_L == 0.0);
        CHECK(r.II_S == 0.0);
    }
}

TEST_CASE("paired runs at n = 4: zero start, growth in t and in nu, triangle ceiling") {
    const auto& recs = ladder_pairs();
    REQUIRE(recs.size() == 3);
    for (const auto& series : recs) {
        REQUIRE(series.size() == 5);
        const auto& r0 = series.front();
        CHECK(r0.time == 0.0);
        CHECK((r0.I_L == 0.0 && r0.I_S == 0.0 && r0.II_L == 0.0 && r0.II_S == 0.0));
        CHECK(series.back().time == ladder4().t_n);
        for (std::size_t k = 1; k < series.size(); ++k) {
            CHECK(series[k].I_L > series[k - 1].I_L);
            CHECK(series[k].I_S >= 0.0);
            CHECK(series[k].II_L >= 0.0);
            CHECK(series[k].II_S >= 0.0);
        }
    }
    for (std::size_t k = 1; k < 5; ++k) {
        CHECK(recs[0][k].I_L > recs[1][k].I_L);
        CHECK(recs[1][k].I_L > recs[2][k].I_L);
    }
    const auto& lad = ladder4();
    TorusGrid g(lad.L, 256);
    const auto m = measure_norms(build_large_scale(lad, g), build_small_scale(lad, g));
    // Triangle ceiling.
    for (const auto& series : recs)
        for (const auto& r : series) {
            CHECK(r.I_L <= 4.0 * m.uL_l2 * m.uL_l2);
            CHECK(r.I_S <= 4.0 * m.uS_l2 * m.uS_l2);
        }
}

TEST_CASE("measured gaps stay below the envelopes with the frozen constants") {
    const auto& lad = ladder4();
    TorusGrid g(lad.L, 256);
    const auto m = measure_norms(build_large_scale(lad, g), build_small_scale(lad, g));
    const double E = calE_proxy(lad);
    for (const auto& series : ladder_pairs())
        for (const auto& r : series)
            for (auto kind : {GapKind::I_L, GapKind::I_S, GapKind::II_L, GapKind::II_S})
                CHECK(gap_value(r, kind) <= envelope_eval(lad, m, kind, r.time, r.nu, E).value);
}

TEST_CASE("envelope structure") {
    const auto& lad = ladder4();
    TorusGrid g(lad.L, 256);
    const auto m = measure_norms(build_large_scale(lad, g), build_small_scale(lad, g));
    const double E = calE_proxy(lad);
    CHECK(E == doctest::Approx(std::pow(2.0, 4.0 * (2.0 / std::numbers::pi) * 1.1)).epsilon(1e-14));
    CHECK(calE_measured(lad, 0.0) == 1.0);
    CHECK(calE_measured(lad, 0.5) == doctest::Approx(std::exp(1.1 * 0.5)));

    CHECK(envelope_eval(lad, m, GapKind::I_L, 0.0, lad.nu_n, E).value == 0.0);
    for (auto kind : {GapKind::I_L, GapKind::I_S, GapKind::II_L, GapKind::II_S}) {
        const auto e = envelope_eval(lad, m, kind, lad.t_n, lad.nu_n, E);
        CHECK(e.A > 0.0);
        CHECK(e.B > 0.0);
        CHECK(e.calE == E);
        if (kind != GapKind::I_L) CHECK(e.t_star == doctest::Approx(std::sqrt(e.B) / e.A));
        double prev = -1.0;
        for (int k = 0; k <= 10; ++k) {
            const double v = envelope_eval(lad, m, kind, lad.t_n * k / 10, lad.nu_n, E).value;
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(envelope_eval(lad, m, kind, lad.t_n, 2 * lad.nu_n, E).value > e.value);
    }
    CHECK(envelope_eval(lad, m, GapKind::I_L, 0.1, 1.0, E).form == EnvelopeForm::LinearInT);
    CHECK(envelope_eval(lad, m, GapKind::I_S, 0.1, 1.0, E).form == EnvelopeForm::OdeCubic);
    CHECK(envelope_eval(lad, m, GapKind::II_S, 0.1, 1.0, E).form == EnvelopeForm::OdeSquare);

    InitialNorms missing = m;
    missing.omegaS_inf = 0.0;
    try {
        envelope_eval(lad, missing, GapKind::I_S, 0.1, 1.0, E);
        FAIL("expected MissingNorms");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingNorms);
    }
}

TEST_CASE("scaling fit") {
    const std::vector<GapRecord> exact{synthetic(1e-3, 3e-3), synthetic(2e-3, 6e-3), synthetic(4e-3, 1.2e-2)};
    for (auto kind : {GapKind::I_L, GapKind::I_S, GapKind::II_L, GapKind::II_S})
        CHECK(std::abs(scaling_fit(exact, kind) - 1.0) < 1e-6);
    const std::vector<GapRecord> square{synthetic(1.0, 1.0), synthetic(3.0, 9.0), synthetic(5.0, 25.0)};
    CHECK(std::abs(scaling_fit(square, GapKind::I_L) - 2.0) < 1e-12);

    auto expect_insufficient = [](std::span<const GapRecord> r) {
        try {
            scaling_fit(r, GapKind::I_L);
            FAIL("expected InsufficientSamples");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InsufficientSamples);
        }
    };
    const std::vector<GapRecord> two{synthetic(1.0, 1.0), synthetic(4.0, 4.0)};
    expect_insufficient(two);
    const std::vector<GapRecord> narrow{synthetic(1.0, 1.0), synthetic(2.0, 2.0), synthetic(3.0, 3.0)};
    expect_insufficient(narrow);
}
