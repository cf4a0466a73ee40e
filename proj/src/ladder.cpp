#include "vsl/ladder.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vsl/error.hpp"

namespace vsl {

namespace {

constexpr double kRelTol = 1e-12;

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double smooth_step_derivative(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    const double ab = a * b;
    return (ab / (t * t) + ab / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b));
}

double cutoff_derivative(double s, double plateau) {
    return -smooth_step_derivative((1.0 - s) / (1.0 - plateau)) / (1.0 - plateau);
}

bool exceeds(double value, double limit) { return value > limit * (1.0 + kRelTol); }

}  // namespace

double mollifier_profile(double r) {
    if (r >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r * r));
}

double cutoff_profile(double s, double plateau) {
    return smooth_step((1.0 - s) / (1.0 - plateau));
}

double cutoff_energy(double plateau) {
    // Composite Simpson on the transition annulus; the plateau contributes exactly pi * plateau^2.
    constexpr int intervals = 20000;
    const double a = plateau;
    const double width = (1.0 - a) / intervals;
    auto integrand = [plateau](double r) {
        const double c = cutoff_profile(r, plateau);
        const double dc = cutoff_derivative(r, plateau);
        return (c * c + r * c * dc + 0.5 * r * r * dc * dc) * r;
    };
    double s = integrand(a) + integrand(1.0);
    for (int k = 1; k < intervals; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * integrand(a + k * width);
    const double annulus = s * width / 3.0;
    return 2.0 * std::numbers::pi * (0.5 * plateau * plateau + annulus);
}

ParameterLadder build_ladder(int n, double delta, double a0_bar, double kappa, double c_small,
                             std::optional<double> q_override, const LadderConstants& k) {
    if (n < 3 || n > 10) throw Error(ErrorKind::UnsupportedRange, "n must lie in [3, 10]");
    if (!(delta > 0.0 && delta <= 0.25)) throw Error(ErrorKind::UnsupportedRange, "delta must lie in (0, 0.25]");
    if (!(a0_bar > 0.0 && a0_bar < 1.0)) throw Error(ErrorKind::UnsupportedRange, "a0_bar must lie in (0, 1)");
    if (!(kappa > 0.0 && kappa <= 0.5)) throw Error(ErrorKind::UnsupportedRange, "kappa must lie in (0, 1/2]");
    if (!(c_small > 0.0) || !std::isfinite(c_small))
        throw Error(ErrorKind::UnsupportedRange, "c_small must be positive");
    if (q_override && !(*q_override > 2.0))
        throw Error(ErrorKind::UnsupportedRange, "q must exceed 2");

    ParameterLadder p;
    p.n = n;
    p.delta = delta;
    p.kappa = kappa;
    p.c_small = c_small;
    p.a0_bar = a0_bar;
    p.constants = k;
    p.ell_bar = std::ldexp(1.0, -n);

    if (a0_bar > 0.5) {
        const double g = ((2.0 * a0_bar - 1.0) * (1.0 + k.C1 * delta) - k.c0 * delta) /
                         ((1.0 - a0_bar) * (1.0 + k.C2 * delta));
        p.gamma_clamped = g < 0.0;
        p.gamma = std::max(g, 0.0);
        p.L = std::pow(p.ell_bar, p.gamma);
        p.q = 2.0 / (1.0 - p.gamma / ((1.0 + p.gamma) * (1.0 + k.C3 * delta)));
    } else {
        p.gamma = 0.0;
        p.L = 1.0;
        p.q = std::numeric_limits<double>::infinity();
    }
    if (q_override) p.q = *q_override;

    p.ell = p.ell_bar * p.L;
    p.ell_tilde = std::pow(p.ell, 1.0 + c_small * delta);
    p.radius_D = p.ell_tilde;
    p.radius_D_prime = p.ell_tilde * std::pow(p.ell_bar, c_small * delta);

    const double ball_limit = k.c_ball * p.ell * std::pow(p.ell_bar, k.c_ball * delta);
    if (exceeds(p.ell_tilde, ball_limit))
        throw Error(ErrorKind::DegenerateLadder, "ell_tilde violates the small-ball condition");

    const double inv_q = std::isinf(p.q) ? 0.0 : 1.0 / p.q;
    const double plateau = p.radius_D_prime / p.ell_tilde;
    p.M = std::pow(p.ell_tilde, -1.0 - 2.0 * inv_q) / std::sqrt(cutoff_energy(plateau));

    p.nu_n = k.nu_prefactor / std::pow(delta, 4) * std::pow(p.ell_bar, 4.0 * k.c0 * delta * (1.0 - k.C * delta)) *
             std::pow(p.ell, 4.0 * (1.0 + k.C * delta)) / (p.L * p.L);
    p.omega_inf = 1.0;
    p.t_n = delta / p.omega_inf;
    return p;
}

ScalarField build_large_scale(const ParameterLadder& ladder, const TorusGrid& grid) {
    if (std::abs(grid.L() - ladder.L) > kRelTol * ladder.L)
        throw Error(ErrorKind::InvalidGrid, "grid half period differs from the ladder's L");
    const double radius = ladder.kappa * ladder.ell;
    if (exceeds(grid.h(), radius / 4.0))
        throw Error(ErrorKind::ResolutionTooCoarse, "grid does not resolve the mollification scale");

    const int n = grid.N();
    const double L = ladder.L;
    const double ell = ladder.ell;
    auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };

    std::vector<double> cut(grid.size(), 0.0);
    std::vector<double> kernel(grid.size(), 0.0);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x1 = grid.coord(i);
        const double d1 = grid.signed_index(i) * grid.h();
        for (int j = 0; j < n; ++j) {
            const double x2 = grid.coord(j);
            if (std::abs(x1) > ell && std::abs(x1) < L - ell && std::abs(x2) > ell && std::abs(x2) < L - ell)
                cut[idx(i, j)] = (x1 > 0 ? 1.0 : -1.0) * (x2 > 0 ? 1.0 : -1.0);
            const double d2 = grid.signed_index(j) * grid.h();
            const double w = mollifier_profile(std::hypot(d1, d2) / radius);
            kernel[idx(i, j)] = w;
            mass += w;
        }
    }
    Spectrum fc = forward(grid, cut);
    const Spectrum fk = forward(grid, kernel);
    for (std::size_t m = 0; m < fc.coeffs.size(); ++m) fc.coeffs[m] *= fk.coeffs[m] / mass;
    const std::vector<double> smooth = inverse(fc);

    // Exact odd-odd symmetrization: each representative node in the open first quadrant
    // determines its three mirror images; axis and edge nodes carry zero.
    std::vector<double> out(grid.size(), 0.0);
    for (int i = n / 2 + 1; i < n; ++i)
        for (int j = n / 2 + 1; j < n; ++j) {
            const int mi = grid.mirror(i);
            const int mj = grid.mirror(j);
            double v = 0.25 * (smooth[idx(i, j)] - smooth[idx(mi, j)] - smooth[idx(i, mj)] + smooth[idx(mi, mj)]);
            v = std::clamp(v, -1.0, 1.0);
            out[idx(i, j)] = v;
            out[idx(mi, j)] = -v;
            out[idx(i, mj)] = -v;
            out[idx(mi, mj)] = v;
        }
    return ScalarField(grid, std::move(out));
}

ScalarField build_small_scale(const ParameterLadder& ladder, const TorusGrid& grid) {
    if (exceeds(grid.h(), ladder.radius_D_prime / 4.0))
        throw Error(ErrorKind::ResolutionTooCoarse, "grid does not resolve the small-scale blob");
    if (ladder.ell_tilde >= grid.L())
        throw Error(ErrorKind::InvalidGrid, "small-scale blob does not fit in the torus");
    const int n = grid.N();
    const double plateau = ladder.radius_D_prime / ladder.ell_tilde;
    std::vector<double> out(grid.size(), 0.0);
    // Odd in x2: compute on x2 > 0 and mirror; the row x2 = 0 and the edge x2 = -L stay zero.
    for (int i = 0; i < n; ++i) {
        const double x1 = grid.coord(i);
        for (int j = n / 2 + 1; j < n; ++j) {
            const double x2 = grid.coord(j);
            const double s = std::hypot(x1, x2) / ladder.ell_tilde;
            const double v = ladder.M * x2 * cutoff_profile(s, plateau);
            out[static_cast<std::size_t>(i) * n + j] = v;
            out[static_cast<std::size_t>(i) * n + grid.mirror(j)] = -v;
        }
    }
    return ScalarField(grid, std::move(out));
}

int resolution_for_spacing(double half_period, double max_spacing) {
    int n = 16;
    while (exceeds(2.0 * half_period / n, max_spacing)) {
        if (n > (1 << 24)) throw Error(ErrorKind::ResolutionInfeasible, "spacing unreachable");
        n *= 2;
    }
    return n;
}

double large_scale_spacing(const ParameterLadder& ladder) { return ladder.kappa * ladder.ell / 4.0; }

double required_spacing(const ParameterLadder& ladder) {
    return std::min(large_scale_spacing(ladder), ladder.radius_D_prime / 4.0);
}

VectorField small_scale_vorticity(const ScalarField& u_S) {
    const auto spec = u_S.spectrum();
    Spectrum w1 = derivative(*spec, 0, 1);
    Spectrum w2 = derivative(*spec, 1, 0);
    for (auto& c : w2.coeffs) c = -c;
    return {ScalarField::from_spectrum(std::move(w1)), ScalarField::from_spectrum(std::move(w2))};
}

namespace {

double vector_inf(const ScalarField& a, const ScalarField& b) {
    return std::max(max_abs(a.values()), max_abs(b.values()));
}

}  // namespace

InitialNorms measure_norms(const ScalarField& omega_L, const ScalarField& u_S) {
    InitialNorms m;
    const auto wl = omega_L.spectrum();
    m.omegaL_l2 = std::sqrt(l2_squared(*wl));
    m.omegaL_inf = max_abs(omega_L.values());
    m.grad_omegaL_l2 = std::sqrt(gradient_l2_squared(*wl));
    {
        const auto g = gradient(omega_L);
        m.grad_omegaL_inf = vector_inf(g.u1, g.u2);
    }
    {
        Spectrum centered = *wl;
        centered.at(0, 0) = Complex{};
        const auto [u1, u2] = velocity_spectra(centered);
        m.uL_l2 = std::sqrt(l2_squared(u1) + l2_squared(u2));
    }
    const auto us = u_S.spectrum();
    m.uS_l2 = std::sqrt(l2_squared(*us));
    m.omegaS_l2 = std::sqrt(gradient_l2_squared(*us));
    const auto ws = small_scale_vorticity(u_S);
    m.omegaS_inf = vector_inf(ws.u1, ws.u2);
    m.grad_omegaS_l2 = std::sqrt(gradient_l2_squared(*ws.u1.spectrum()) + gradient_l2_squared(*ws.u2.spectrum()));
    {
        const Spectrum s11 = derivative(*us, 2, 0);
        const Spectrum s12 = derivative(*us, 1, 1);
        const Spectrum s22 = derivative(*us, 0, 2);
        double mx = 0.0;
        for (const Spectrum* s : {&s11, &s12, &s22}) mx = std::max(mx, max_abs(inverse(*s)));
        m.grad_omegaS_inf = mx;
    }
    return m;
}

}  // namespace vsl
