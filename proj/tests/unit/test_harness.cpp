#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "vsl/cli.hpp"
#include "vsl/error.hpp"
#include "vsl/harness.hpp"
#include "vsl/io.hpp"

using namespace vsl;
namespace fs = std::filesystem;

namespace {

template <class F>
void expect_error(ErrorKind kind, F&& f) {
    try {
        f();
        FAIL("expected " << to_string(kind));
    } catch (const Error& e) {
        CHECK(e.kind() == kind);
    }
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("vsl-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vsl");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

SweepResult synthetic_point(int n, double u0_sq, double grad_u0_sq) {
    SweepResult r;
    r.n = n;
    r.ladder = build_ladder(n, 0.1, 0.4);
    r.u0_sq = u0_sq;
    r.grad_u0_sq = grad_u0_sq;
    return r;
}

}  // namespace

TEST_CASE("grid policy") {
    GridPolicy p;
    const int expected[] = {256, 512, 1024, 2048};
    for (int n = 3; n <= 6; ++n) CHECK(resolution_for(build_ladder(n, 0.1, 0.4), p) == expected[n - 3]);
    expect_error(ErrorKind::ResolutionInfeasible, [&] { resolution_for(build_ladder(7, 0.1, 0.4), p); });
    p.fixed_N = 64;
    CHECK(resolution_for(build_ladder(5, 0.1, 0.4), p) == 64);
}

TEST_CASE("dt policy lands on t_n") {
    const auto lad = build_ladder(4, 0.1, 0.4);
    TorusGrid g(lad.L, 512);
    const auto s = FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), lad.nu_n);
    const double dt = initial_dt(s, lad, DtPolicy{});
    CHECK(dt <= lad.t_n / 50.0 * (1.0 + 1e-12));
    const double steps = lad.t_n / dt;
    CHECK(std::abs(steps - std::round(steps)) < 1e-9);
    DtPolicy tight;
    tight.cfl = 0.01;
    const double dt2 = initial_dt(s, lad, tight);
    const auto u = s.velocity();
    CHECK(dt2 <= 0.01 * g.h() / std::max(max_abs(u.u1.values()), max_abs(u.u2.values())));
}

TEST_CASE("b0 estimate") {
    std::vector<SweepResult> pts;
    for (int n = 3; n <= 5; ++n) {
        const double nu = build_ladder(n, 0.1, 0.4).nu_n;
        pts.push_back(synthetic_point(n, 2.0, 2.0 * std::pow(nu, -0.5)));
    }
    CHECK(std::abs(estimate_b0(pts) - 0.5) < 1e-6);
    for (auto& p : pts) p.grad_u0_sq = 3.0;
    CHECK(std::abs(estimate_b0(pts)) < 1e-12);
    pts.pop_back();
    expect_error(ErrorKind::InsufficientSamples, [&] { estimate_b0(pts); });
}

TEST_CASE("sweep point at n = 3") {
    const auto r = run_sweep_point(3, SweepConfig{});
    CHECK(r.N == 256);
    CHECK(r.t_end == r.ladder.t_n);
    for (double v : {r.dt, r.u0_sq, r.uL0_sq, r.uS0_sq, r.grad_u0_sq, r.mean_grad_sq, r.D_n, r.S_n, r.omegaS0_sq,
                     r.enstrophy_smallscale_mean, r.sup_d1u1_tx, r.calE, r.amplification, r.amplification_threshold}) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
    CHECK(r.energy_residual <= 1e-3);
    CHECK(r.u0_sq == r.uL0_sq + r.uS0_sq);
    TorusGrid g(r.ladder.L, r.N);
    const auto m = measure_norms(build_large_scale(r.ladder, g), build_small_scale(r.ladder, g));
    CHECK(r.u0_sq == doctest::Approx(m.uL_l2 * m.uL_l2 + m.uS_l2 * m.uS_l2).epsilon(1e-12));
    CHECK(r.D_n == doctest::Approx(std::pow(r.ladder.nu_n, 0.4) * r.mean_grad_sq / r.u0_sq).epsilon(1e-14));
    CHECK(r.S_n == doctest::Approx(r.mean_grad_sq / r.grad_u0_sq).epsilon(1e-14));
    // Viscous decay: the time mean stays below the initial value.
    CHECK(r.mean_grad_sq < r.grad_u0_sq);
    CHECK(r.enstrophy_smallscale_mean < r.omegaS0_sq);
}

TEST_CASE("sweep: sorted by n, independent of the pool size") {
    SweepConfig c;
    c.grid.fixed_N = 256;
    const std::vector<int> ns{4, 3};
    c.threads = 1;
    const auto serial = sweep(ns, c);
    c.threads = 2;
    const auto pooled = sweep(ns, c);
    REQUIRE(serial.size() == 2);
    CHECK(serial[0].n == 3);
    CHECK(serial[1].n == 4);
    CHECK(sweep_csv(serial) == sweep_csv(pooled));

    expect_error(ErrorKind::UnsupportedRange, [] { sweep(std::vector<int>{2}, SweepConfig{}); });
    expect_error(ErrorKind::UnsupportedRange, [] { sweep(std::vector<int>{3, 3}, SweepConfig{}); });
    expect_error(ErrorKind::ResolutionInfeasible, [] { sweep(std::vector<int>{3, 7}, SweepConfig{}); });
}

TEST_CASE("thread count honours VSL_THREADS") {
    const char* old = std::getenv("VSL_THREADS");
    const std::string saved = old ? old : "";
    ::setenv("VSL_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    ::setenv("VSL_THREADS", "zero", 1);
    CHECK(thread_count() >= 1);
    if (old)
        ::setenv("VSL_THREADS", saved.c_str(), 1);
    else
        ::unsetenv("VSL_THREADS");
}

TEST_CASE("shortest round-trip doubles") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, (i % 40) - 20);
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("csv schemas") {
    std::vector<GapRecord> gaps(3);
    gaps[1].time = 0.5;
    gaps[1].I_L = 1e-3;
    const auto csv = gaps_csv(gaps);
    CHECK(csv.rfind("t,nu,I_L,I_S,II_L,II_S\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("0.5,0,0.001,0,0,0\n") != std::string::npos);

    const auto lad = build_ladder(3, 0.1, 0.4);
    TorusGrid g(lad.L, 128);
    const auto d = measure(FlowState::initial(build_large_scale(lad, g), build_small_scale(lad, g), 0.0));
    const auto dcsv = diagnostics_csv(std::vector<DiagnosticsRecord>{d, d});
    std::istringstream in(dcsv);
    std::string line;
    std::getline(in, line);
    const auto cols = std::count(line.begin(), line.end(), ',');
    CHECK(line.find("sup_d1u1") != std::string::npos);
    while (std::getline(in, line)) CHECK(std::count(line.begin(), line.end(), ',') == cols);

    const auto scsv = sweep_csv(std::vector<SweepResult>{});
    for (const char* col : {"n,", ",nu_n,", ",D_n,", ",S_n,", ",enstrophy_smallscale_mean,"})
        CHECK(scsv.find(col) != std::string::npos);

    auto e = TracerEnsemble::at_seeds({{0.0, 0.0}, {0.1, 0.0}});
    const auto tcsv = tracers_csv(std::vector<TracerEnsemble>{e});
    CHECK(tcsv == "seed,x1,x2,t,eta1,eta2,D11,D12,D21,D22,det\n0,0,0,0,0,0,1,0,0,1,1\n1,0.1,0,0,0.1,0,1,0,0,1,1\n");
}

TEST_CASE("binary field files") {
    const auto dir = scratch("fields");
    TorusGrid g(0.5, 16);
    const auto f = ScalarField::from_function(g, [](double x, double y) { return std::sin(7 * x) * y + 0.1; });
    write_field(dir / "w.bin", f, 0.125, FieldId::SmallScaleVelocity);
    const auto back = read_field(dir / "w.bin");
    CHECK(back.id == FieldId::SmallScaleVelocity);
    CHECK(back.time == 0.125);
    CHECK(back.field.grid() == g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back.field.values()[i] == f.values()[i]);

    const auto bytes = read_text(dir / "w.bin");
    CHECK(bytes.size() == 40 + 8 * g.size());
    CHECK(bytes.substr(0, 8) == "VSLFIELD");
    CHECK(bytes[8] == 1);
    CHECK(bytes[12] == 16);
    CHECK(bytes[13] == 0);

    write_text(dir / "bad.bin", "NOTFIELD" + bytes.substr(8));
    expect_error(ErrorKind::Io, [&] { read_field(dir / "bad.bin"); });
    write_text(dir / "short.bin", bytes.substr(0, bytes.size() - 8));
    expect_error(ErrorKind::Io, [&] { read_field(dir / "short.bin"); });
    expect_error(ErrorKind::Io, [&] { read_field(dir / "missing.bin"); });
    fs::remove_all(dir);
}

TEST_CASE("configuration files") {
    const auto c = parse_config("# header\n n = 4 \ndelta=0.1 # trailing\n\nout_dir = a b\n");
    CHECK(c.size() == 3);
    CHECK(c.at("n") == "4");
    CHECK(c.at("delta") == "0.1");
    CHECK(c.at("out_dir") == "a b");
    expect_error(ErrorKind::Usage, [] { parse_config("n = 3\nn = 4\n"); });
    expect_error(ErrorKind::Usage, [] { parse_config("just words\n"); });
    expect_error(ErrorKind::Usage, [] { parse_config("= 3\n"); });
}

TEST_CASE("content hash") {
    CHECK(content_hash("") == "cbf29ce484222325");
    CHECK(content_hash("a") == "af63dc4c8601ec8c");
}

TEST_CASE("command line") {
    const auto dir = scratch("cli");
    CHECK(cli({}) == 2);
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"run", "--n", "three", "--quiet"}) == 2);
    CHECK(cli({"run", "--set", "bogus_key=1", "--quiet"}) == 2);
    CHECK(cli({"sweep", "--n", "9", "--quiet"}) == 2);

    CHECK(cli({"gen-data", "--n", "3", "--out-dir", (dir / "gen").string(), "--quiet"}) == 0);
    CHECK(read_field(dir / "gen" / "omega_L.bin").field.grid().N() == 256);
    CHECK(fs::exists(dir / "gen" / "ladder.json"));

    write_text(dir / "run.cfg", "n = 3\nN = 128\nnu = 0\n");
    CHECK(cli({"run", "--config", (dir / "run.cfg").string(), "--t-end", "auto", "--out-dir", (dir / "run").string(),
               "--quiet"}) == 0);
    const auto m = nlohmann::json::parse(read_text(dir / "run" / "manifest.json"));
    CHECK(m["t_end"].get<double>() == build_ladder(3, 0.1, 0.4).t_n);
    CHECK(m["nu"].get<double>() == 0.0);
    CHECK(m["N"].get<int>() == 128);
    const auto diag = read_text(dir / "run" / "diagnostics.csv");
    CHECK(diag.rfind("t,nu,energy,", 0) == 0);

    // Flags override the configuration file.
    CHECK(cli({"run", "--config", (dir / "run.cfg").string(), "--nu", "0.01", "--t-end", "0.01", "--out-dir",
               (dir / "run2").string(), "--quiet"}) == 0);
    const auto m2 = nlohmann::json::parse(read_text(dir / "run2" / "manifest.json"));
    CHECK(m2["nu"].get<double>() == 0.01);
    CHECK(m2["t_end"].get<double>() == 0.01);
    CHECK(m2["config_hash"] != m["config_hash"]);
    fs::remove_all(dir.parent_path());
}
