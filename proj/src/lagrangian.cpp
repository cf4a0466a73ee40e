#include "vsl/lagrangian.hpp"

#include <cmath>
#include <numbers>

#include "vsl/error.hpp"

namespace vsl {

namespace {

struct GridFields {
    TorusGrid grid;
    std::vector<double> u1, u2, d11, d21, d12;
};

Sampler make_sampler(std::shared_ptr<const GridFields> f) {
    return [f](Point2 p) {
        VelocitySample s;
        s.u[0] = sample_bicubic(f->grid, f->u1, p);
        s.u[1] = sample_bicubic(f->grid, f->u2, p);
        s.grad[0][0] = sample_bicubic(f->grid, f->d11, p);
        s.grad[0][1] = sample_bicubic(f->grid, f->d21, p);
        s.grad[1][0] = sample_bicubic(f->grid, f->d12, p);
        s.grad[1][1] = -s.grad[0][0];
        return s;
    };
}

std::shared_ptr<GridFields> gradient_fields(const Spectrum& omega) {
    Spectrum w = omega;
    w.at(0, 0) = Complex{};
    const auto g = velocity_gradient_spectra(w);
    auto f = std::make_shared<GridFields>(GridFields{w.grid, {}, {}, inverse(g[0]), inverse(g[1]), inverse(g[2])});
    return f;
}

Matrix2 multiply(const Matrix2& a, const Matrix2& b) {
    Matrix2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

}  // namespace

TracerEnsemble TracerEnsemble::at_seeds(std::vector<Point2> seeds, double time) {
    TracerEnsemble e;
    e.positions = seeds;
    e.deformations.assign(seeds.size(), Matrix2{{{1.0, 0.0}, {0.0, 1.0}}});
    e.seeds = std::move(seeds);
    e.time = time;
    return e;
}

double determinant(const Matrix2& m) noexcept { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

std::vector<Point2> default_seeds(const ParameterLadder& ladder) {
    const double r = ladder.radius_D_prime;
    std::vector<Point2> s;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) s.push_back({0.5 * r * a, 0.5 * r * b});
    const double axis = r * (1.0 - 1e-6);
    s.push_back({0.0, axis});
    s.push_back({0.0, -axis});
    return s;
}

std::array<Sampler, 4> AnalyticProvider::stages(double t, double dt) {
    auto at = [this](double time) -> Sampler {
        return [f = field_, time](Point2 p) { return f(time, p); };
    };
    return {at(t), at(t + 0.5 * dt), at(t + 0.5 * dt), at(t + dt)};
}

Sampler grid_sampler(const Spectrum& omega) {
    auto f = gradient_fields(omega);
    Spectrum w = omega;
    w.at(0, 0) = Complex{};
    const auto u = velocity_spectra(w);
    f->u1 = inverse(u[0]);
    f->u2 = inverse(u[1]);
    return make_sampler(std::move(f));
}

FrozenProvider::FrozenProvider(const FlowState& state) : sampler_(grid_sampler(*state.omega_L.spectrum())) {}

std::array<Sampler, 4> FrozenProvider::stages(double, double) { return {sampler_, sampler_, sampler_, sampler_}; }

SolverProvider::SolverProvider(FlowState initial, StepConfig config)
    : state_(std::move(initial)), config_(config) {}

std::array<Sampler, 4> SolverProvider::stages(double t, double dt) {
    if (std::abs(t - state_.time) > 1e-12 * std::max(1.0, std::abs(t)))
        throw Error(ErrorKind::StageUnavailable, "solver provider is at t=" + std::to_string(state_.time) +
                                                     ", step requested at t=" + std::to_string(t));
    std::array<Sampler, 4> out;
    StepConfig cfg = config_;
    cfg.dt = dt;
    state_ = step(state_, cfg, [&](const StageView& v) {
        auto f = gradient_fields(*v.omega_hat);
        f->u1.assign(v.u1.begin(), v.u1.end());
        f->u2.assign(v.u2.begin(), v.u2.end());
        out[v.index] = make_sampler(std::move(f));
    });
    return out;
}

TracerEnsemble advance(TracerEnsemble e, VelocityProvider& provider, double t_end, double dt,
                       const EnsembleObserver& observer) {
    if (!(dt > 0.0)) throw Error(ErrorKind::UnsupportedRange, "tracer dt must be positive");
    const std::size_t n = e.size();
    struct Rate {
        std::array<double, 2> v;
        Matrix2 m;
    };
    auto rate = [](const Sampler& s, Point2 p, const Matrix2& F) {
        const auto vs = s(p);
        return Rate{vs.u, multiply(vs.grad, F)};
    };
    auto shift = [](Point2 p, const Matrix2& F, const Rate& k, double h) {
        Point2 q{p[0] + h * k.v[0], p[1] + h * k.v[1]};
        Matrix2 G = F;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) G[i][j] += h * k.m[i][j];
        return std::pair{q, G};
    };
    while (e.time < t_end) {
        double h = dt;
        const double left = t_end - e.time;
        if (left <= h * (1.0 + 1e-9)) h = left;
        const auto st = provider.stages(e.time, h);
        for (std::size_t s = 0; s < n; ++s) {
            const Point2 p = e.positions[s];
            const Matrix2 F = e.deformations[s];
            const Rate k1 = rate(st[0], p, F);
            const auto [p2, F2] = shift(p, F, k1, 0.5 * h);
            const Rate k2 = rate(st[1], p2, F2);
            const auto [p3, F3] = shift(p, F, k2, 0.5 * h);
            const Rate k3 = rate(st[2], p3, F3);
            const auto [p4, F4] = shift(p, F, k3, h);
            const Rate k4 = rate(st[3], p4, F4);
            Point2 q;
            Matrix2 G;
            for (int i = 0; i < 2; ++i) {
                q[i] = p[i] + h / 6.0 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
                for (int j = 0; j < 2; ++j)
                    G[i][j] = F[i][j] + h / 6.0 * (k1.m[i][j] + 2.0 * k2.m[i][j] + 2.0 * k3.m[i][j] + k4.m[i][j]);
            }
            for (double v : q)
                if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "tracer position became non-finite");
            e.positions[s] = q;
            e.deformations[s] = G;
        }
        e.time = (h == left) ? t_end : e.time + h;
        if (observer) observer(e);
    }
    return e;
}

double torus_distance(const TorusGrid& grid, Point2 a, Point2 b) {
    const double P = 2.0 * grid.L();
    double d1 = a[0] - b[0], d2 = a[1] - b[1];
    d1 -= P * std::round(d1 / P);
    d2 -= P * std::round(d2 / P);
    return std::hypot(d1, d2);
}

std::vector<BoundCheck> check_yudovich(const TracerEnsemble& e, std::span<const std::pair<int, int>> pairs,
                                       const ParameterLadder& ladder, const TorusGrid& grid, double c) {
    const double L = ladder.L;
    const double a = c * e.time * ladder.omega_inf;
    std::vector<BoundCheck> out;
    for (const auto& [i, j] : pairs) {
        const double d0 = torus_distance(grid, e.seeds.at(i), e.seeds.at(j)) / L;
        if (d0 > 0.5 || d0 <= 0.0) throw Error(ErrorKind::UnsupportedRange, "Yudovich pairs need 0 < |x-x'| <= L/2");
        const double dt = torus_distance(grid, e.positions.at(i), e.positions.at(j)) / L;
        out.push_back(make_check("yudovich", e.time, e.seeds[i], dt, std::pow(d0, 1.0 + a), std::pow(d0, 1.0 - a),
                                 std::abs(std::log(dt) / std::log(d0) - 1.0)));
    }
    return out;
}

std::vector<BoundCheck> check_lld(const TracerEnsemble& e, const ParameterLadder& ladder, const LldConfig& config) {
    const double rate = (2.0 / std::numbers::pi) * ladder.omega_inf * e.time * std::log(1.0 / ladder.ell_bar);
    const double band = config.epsilon + config.C_delta * ladder.delta;
    std::vector<BoundCheck> out;
    for (std::size_t s = 0; s < e.size(); ++s) {
        if (!in_region_D_prime(ladder, e.seeds[s])) throw Error(ErrorKind::SeedOutsideRegion, "seed outside D'");
        const Matrix2& F = e.deformations[s];
        const double d11 = F[0][0];
        const double stretch = d11 > 0.0 ? std::log(d11) : -INFINITY;
        out.push_back(make_check("lld_stretch", e.time, e.seeds[s], stretch, rate * (1.0 - band), rate * (1.0 + band),
                                 rate > 0.0 ? std::abs(stretch / rate - 1.0) : 0.0));
        const double ratio = (std::abs(F[1][0]) + std::abs(F[0][1])) / d11;
        out.push_back(make_check("lld_offdiag", e.time, e.seeds[s], ratio, 0.0, config.offdiag_limit, ratio));
    }
    return out;
}

double cauchy_check(const FlowState& state0, const FlowState& state_t, const TracerEnsemble& e) {
    if (state_t.nu > 0.0 || state0.nu > 0.0)
        throw Error(ErrorKind::ViscousRun, "the Cauchy formula holds only for inviscid runs");
    if (std::abs(state_t.time - e.time) > 1e-12 * std::max(1.0, e.time))
        throw Error(ErrorKind::StageUnavailable, "ensemble and state are at different times");
    const auto w0 = small_scale_vorticity(state0.u_S);
    const auto wt = small_scale_vorticity(state_t.u_S);
    const double scale = std::max(max_abs(w0.u1.values()), max_abs(w0.u2.values()));
    if (scale == 0.0) return 0.0;
    const auto w01 = w0.u1.spectrum(), w02 = w0.u2.spectrum();
    const auto wt1 = wt.u1.spectrum(), wt2 = wt.u2.spectrum();
    double worst = 0.0;
    for (std::size_t s = 0; s < e.size(); ++s) {
        const double a1 = sample_trig(*w01, e.seeds[s]), a2 = sample_trig(*w02, e.seeds[s]);
        const Matrix2& F = e.deformations[s];
        const double b1 = sample_trig(*wt1, e.positions[s]), b2 = sample_trig(*wt2, e.positions[s]);
        worst = std::max(worst, std::hypot(b1 - (F[0][0] * a1 + F[0][1] * a2), b2 - (F[1][0] * a1 + F[1][1] * a2)));
    }
    return worst / scale;
}

}  // namespace vsl
