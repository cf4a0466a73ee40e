#include "vsl/velgrad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vsl/error.hpp"

namespace vsl {

namespace {

constexpr double pi = std::numbers::pi;

void require_finite(const Matrix2& m) {
    for (const auto& row : m)
        for (double v : row)
            if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "non-finite velocity gradient");
}

// Sum over nodes of w * 1/c^2 expanded about the lattice shift c, for offsets s = z/rho.
Complex multipole_sum(std::span<const Complex> moments, double rho, Complex c) {
    const Complex ratio = rho / c;
    Complex power = 1.0, total = 0.0;
    for (std::size_t m = 0; m < moments.size(); ++m) {
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        total += sign * double(m + 1) * moments[m] * power;
        power *= ratio;
        if (std::abs(power) < 1e-30) break;
    }
    return total / (c * c);
}

void check_singularity_margin(const ScalarField& omega, Point2 x) {
    const TorusGrid& g = omega.grid();
    const int n = g.N();
    const double h = g.h();
    const double peak = max_abs(omega.values());
    if (peak == 0.0) return;
    const double radius = 4.0 * h;
    const int ci = static_cast<int>(std::floor((x[0] + g.L()) / h));
    const int cj = static_cast<int>(std::floor((x[1] + g.L()) / h));
    const int span = 5;
    for (int di = -span; di <= span; ++di)
        for (int dj = -span; dj <= span; ++dj) {
            const int i = ((ci + di) % n + n) % n, j = ((cj + dj) % n + n) % n;
            const double y1 = -g.L() + (ci + di) * h - x[0];
            const double y2 = -g.L() + (cj + dj) * h - x[1];
            if (std::hypot(y1, y2) > radius) continue;
            const double w = omega(i, j);
            const double jump = std::max(std::abs(omega((i + 1) % n, j) - w), std::abs(omega(i, (j + 1) % n) - w));
            if (jump > 0.5 * peak)
                throw Error(ErrorKind::TooCloseToSingularity, "vorticity jump within 4h of the quadrature point");
        }
}

}  // namespace

BoundCheck make_check(std::string name, double time, Point2 point, double measured, double lower, double upper,
                      double slack) {
    BoundCheck c;
    c.name = std::move(name);
    c.time = time;
    c.point = point;
    c.measured = measured;
    c.lower_envelope = lower;
    c.upper_envelope = upper;
    c.slack_epsilon_n = slack;
    c.pass = lower <= measured && measured <= upper;
    return c;
}

GradSample grad_at(const ScalarField& omega, Point2 point, double time) {
    Spectrum w = *omega.spectrum();
    w.at(0, 0) = Complex{};
    const auto g = velocity_gradient_spectra(w);
    GradSample s;
    s.time = time;
    s.point = point;
    s.source = GradSource::Spectral;
    s.matrix[0][0] = sample_trig(g[0], point);
    s.matrix[0][1] = sample_trig(g[1], point);
    s.matrix[1][0] = sample_trig(g[2], point);
    s.matrix[1][1] = -s.matrix[0][0];
    require_finite(s.matrix);
    return s;
}

GradSample grad_at(const FlowState& state, Point2 point) { return grad_at(state.omega_L, point, state.time); }

PvResult pv_oracle(const ScalarField& omega, Point2 point, const PvOptions& options) {
    if (options.image_periods < 1) throw Error(ErrorKind::UnsupportedRange, "image_periods must be >= 1");
    const TorusGrid& g = omega.grid();
    const int n = g.N();
    const double L = g.L(), h = g.h(), area = g.cell_area();
    const Point2 x = g.reduce(point);
    check_singularity_margin(omega, x);
    const double wx = sample_bicubic(g, omega.values(), x);
    const double excl_sq = std::pow(options.exclusion_cells * h, 2);
    const double edge = L * (1.0 - 1e-12);

    // Offsets reduced to the square cell centred at x; nodes on its boundary are split.
    struct Node {
        double z1, z2, w, share;
    };
    std::vector<Node> nodes;
    nodes.reserve(g.size());
    auto reduce1 = [&](double z) { return z - 2.0 * L * std::round(z / (2.0 * L)); };
    for (int i = 0; i < n; ++i) {
        const double z1 = reduce1(g.coord(i) - x[0]);
        const bool b1 = std::abs(z1) >= edge;
        for (int j = 0; j < n; ++j) {
            const double w = omega(i, j) * area;
            const double z2 = reduce1(g.coord(j) - x[1]);
            const bool b2 = std::abs(z2) >= edge;
            const int c1 = b1 ? 2 : 1, c2 = b2 ? 2 : 1;
            const double share = 1.0 / (c1 * c2);
            for (int a = 0; a < c1; ++a)
                for (int b = 0; b < c2; ++b)
                    nodes.push_back({b1 ? (a == 0 ? L : -L) : z1, b2 ? (b == 0 ? L : -L) : z2, w * share, share});
        }
    }

    // Direct sum of 1/z^2 = (z1^2 - z2^2 - 2i z1 z2)/|z|^4 over the central 3x3 periods. The central
    // copy carries (omega(y) - omega(x)) h^2; the subtracted constant integrates to zero by square symmetry.
    double re = 0.0, im = 0.0;
    const double wx_area = wx * area;
    for (int k1 = -1; k1 <= 1; ++k1)
        for (int k2 = -1; k2 <= 1; ++k2) {
            const double o1 = 2.0 * L * k1, o2 = 2.0 * L * k2;
            const bool centre = k1 == 0 && k2 == 0;
            for (const auto& nd : nodes) {
                const double z1 = nd.z1 + o1, z2 = nd.z2 + o2;
                const double r2 = z1 * z1 + z2 * z2;
                if (centre && r2 < excl_sq) continue;
                const double inv4 = 1.0 / (r2 * r2);
                const double w = centre ? nd.w - wx_area * nd.share : nd.w;
                re += w * (z1 * z1 - z2 * z2) * inv4;
                im -= 2.0 * w * z1 * z2 * inv4;
            }
        }

    // Complex moments of the offsets, scaled by rho so |s| <= 1.
    const double rho = std::sqrt(2.0) * L;
    constexpr int order = 64;
    std::vector<Complex> moments(order, Complex{});
    for (const auto& nd : nodes) {
        const Complex s(nd.z1 / rho, nd.z2 / rho);
        Complex p = nd.w;
        for (int m = 0; m < order; ++m) {
            moments[m] += p;
            p *= s;
        }
    }
    auto shell_sum = [&](int from, int to) {
        Complex total = 0.0;
        for (int k1 = -to; k1 <= to; ++k1)
            for (int k2 = -to; k2 <= to; ++k2) {
                const int r = std::max(std::abs(k1), std::abs(k2));
                if (r < from) continue;
                total += multipole_sum(moments, rho, Complex(2.0 * L * k1, 2.0 * L * k2));
            }
        return total;
    };
    const Complex outer = shell_sum(2, options.image_periods);
    re += outer.real();
    im += outer.imag();
    const Complex tail = shell_sum(options.image_periods + 1, std::max(8 * options.image_periods, 64));

    auto to_matrix = [&](double fre, double fim) {
        Matrix2 m{};
        m[0][0] = -fim / (2.0 * pi);
        m[1][1] = -m[0][0];
        const double pv = -fre / (2.0 * pi);
        m[1][0] = pv + 0.5 * wx;
        m[0][1] = pv - 0.5 * wx;
        return m;
    };
    PvResult out;
    out.truncation_estimate = std::max(std::abs(tail.real()), std::abs(tail.imag())) / (2.0 * pi);
    if (options.tail_correction) {
        re += tail.real();
        im += tail.imag();
    }
    out.matrix = to_matrix(re, im);
    require_finite(out.matrix);
    return out;
}

bool in_region_D(const ParameterLadder& ladder, Point2 p) { return std::hypot(p[0], p[1]) < ladder.radius_D; }
bool in_region_D_prime(const ParameterLadder& ladder, Point2 p) {
    return std::hypot(p[0], p[1]) < ladder.radius_D_prime;
}

std::vector<Point2> random_points_in_disc(double radius, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts;
    pts.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double r = radius * std::sqrt(u(rng));
        const double th = 2.0 * pi * u(rng);
        pts.push_back({r * std::cos(th), r * std::sin(th)});
    }
    return pts;
}

std::vector<BoundCheck> check_local_bounds(const FlowState& state, const ParameterLadder& ladder,
                                           std::span<const Point2> points, const LocalBoundConfig& config) {
    for (const auto& p : points)
        if (!in_region_D(ladder, p)) throw Error(ErrorKind::OutsideRegion, "sample point outside D");
    Spectrum w = *state.omega_L.spectrum();
    w.at(0, 0) = Complex{};
    const auto g = velocity_gradient_spectra(w);
    const double log_scale = (2.0 / pi) * ladder.omega_inf * std::log(1.0 / ladder.ell_bar);
    const double band = config.C_delta * ladder.delta + config.epsilon;
    std::vector<BoundCheck> out;
    for (const auto& p : points) {
        const double d11 = sample_trig(g[0], p);
        const double off = std::abs(sample_trig(g[1], p)) + std::abs(sample_trig(g[2], p));
        if (!std::isfinite(d11) || !std::isfinite(off)) throw Error(ErrorKind::NonFinite, "non-finite gradient");
        out.push_back(make_check("d1u1_local", state.time, p, d11, log_scale * (1.0 - band),
                                 log_scale * (1.0 + band), std::abs(d11 / log_scale - 1.0)));
        out.push_back(make_check("offdiag_local", state.time, p, off, 0.0, config.C_offdiag * ladder.omega_inf,
                                 off / ladder.omega_inf));
    }
    return out;
}

std::vector<BoundCheck> check_global_bounds(const FlowState& state, const ParameterLadder& ladder,
                                            const GlobalBoundConfig& config) {
    Spectrum w = *state.omega_L.spectrum();
    w.at(0, 0) = Complex{};
    const auto g = velocity_gradient_spectra(w);
    const auto d11 = inverse(g[0]);
    const auto d21 = inverse(g[1]);
    const auto d12 = inverse(g[2]);
    if (!all_finite(d11) || !all_finite(d21) || !all_finite(d12))
        throw Error(ErrorKind::NonFinite, "non-finite gradient field");
    const double lg = ladder.omega_inf * std::log(1.0 / ladder.ell_bar);
    const double sup11 = max_abs(d11);
    const double off = max_abs(d21) + max_abs(d12);
    return {make_check("sup_d1u1", state.time, {0, 0}, sup11, 0.0, config.K1 * lg, sup11 / lg),
            make_check("sup_offdiag", state.time, {0, 0}, off, 0.0, config.K2 * ladder.delta * lg,
                       off / (ladder.delta * lg))};
}

BoundCheck vorticity_gradient_growth(std::span<const DiagnosticsRecord> history, double delta, GradNorm p,
                                     double C, double slack) {
    if (history.size() < 2) throw Error(ErrorKind::InsufficientSamples, "gradient growth needs 2 records");
    for (const auto& r : history)
        if (!r.full) throw Error(ErrorKind::InsufficientSamples, "gradient growth needs full records");
    auto norm = [p](const DiagnosticsRecord& r) { return p == GradNorm::L2 ? r.grad_omegaL_l2 : r.grad_omegaL_inf; };
    const double g0 = norm(history.front());
    double integral = 0.0, worst_ratio = -1.0;
    BoundCheck best;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i > 0)
            integral += 0.5 * (history[i].time - history[i - 1].time) * (history[i].sup_d1u1 + history[i - 1].sup_d1u1);
        const double env = g0 * std::exp((1.0 + C * delta) * integral + slack);
        const double meas = norm(history[i]);
        const double ratio = env > 0.0 ? meas / env : (meas > 0.0 ? INFINITY : 1.0);
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            const double growth = (g0 > 0.0 && integral > 0.0) ? std::log(meas / g0) / integral - 1.0 : 0.0;
            best = make_check(p == GradNorm::L2 ? "grad_omega_l2_growth" : "grad_omega_linf_growth",
                              history[i].time, {0, 0}, meas, 0.0, env, growth);
        }
    }
    return best;
}

double second_gradient_envelope(const ParameterLadder& ladder, double t, double grad_omega0_inf, double sup_d1u1,
                                double C) {
    const double w0 = ladder.omega_inf;
    return C * (1.0 + t * w0 * std::log(1.0 / ladder.ell_bar)) * grad_omega0_inf *
           std::exp(t * (1.0 + C * ladder.delta) * sup_d1u1);
}

double second_gradient_sup_D(const FlowState& state, const ParameterLadder& ladder) {
    Spectrum w = *state.omega_L.spectrum();
    w.at(0, 0) = Complex{};
    const auto u = velocity_spectra(w);
    const TorusGrid& g = state.grid();
    const int n = g.N();
    double sup = 0.0;
    for (const auto& comp : u)
        for (const auto& [a, b] : {std::pair{2, 0}, std::pair{1, 1}, std::pair{0, 2}}) {
            const auto f = inverse(derivative(comp, a, b));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (!in_region_D(ladder, {g.coord(i), g.coord(j)})) continue;
                    const double v = f[static_cast<std::size_t>(i) * n + j];
                    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "non-finite second gradient");
                    sup = std::max(sup, std::abs(v));
                }
        }
    return sup;
}

BoundCheck second_gradient_bound(const FlowState& state, const ParameterLadder& ladder, double grad_omega0_inf,
                                 double sup_d1u1, double C) {
    const double meas = second_gradient_sup_D(state, ladder);
    const double env = second_gradient_envelope(ladder, state.time, grad_omega0_inf, sup_d1u1, C);
    return make_check("second_gradient_D", state.time, {0, 0}, meas, 0.0, env,
                      grad_omega0_inf > 0.0 ? meas / grad_omega0_inf : 0.0);
}

}  // namespace vsl
