#include "vsl/gap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vsl/error.hpp"

namespace vsl {

namespace {

Spectrum difference(const Spectrum& a, const Spectrum& b) {
    Spectrum d(a.grid);
    for (std::size_t k = 0; k < d.coeffs.size(); ++k) d.coeffs[k] = a.coeffs[k] - b.coeffs[k];
    return d;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::MissingNorms, std::string("initial norm ") + name + " unavailable");
}

}  // namespace

const char* to_string(GapKind kind) {
    switch (kind) {
        case GapKind::I_L: return "I_L";
        case GapKind::I_S: return "I_S";
        case GapKind::II_L: return "II_L";
        case GapKind::II_S: return "II_S";
    }
    return "?";
}

double gap_value(const GapRecord& r, GapKind kind) {
    switch (kind) {
        case GapKind::I_L: return r.I_L;
        case GapKind::I_S: return r.I_S;
        case GapKind::II_L: return r.II_L;
        case GapKind::II_S: return r.II_S;
    }
    return 0.0;
}

GapRecord measure_gap(const FlowState& viscous, const FlowState& inviscid) {
    if (!(viscous.grid() == inviscid.grid())) throw Error(ErrorKind::InvalidGrid, "gap states live on different grids");
    GapRecord r;
    r.time = viscous.time;
    r.nu = viscous.nu;
    const Spectrum dw = difference(*viscous.omega_L.spectrum(), *inviscid.omega_L.spectrum());
    const Spectrum du = difference(*viscous.u_S.spectrum(), *inviscid.u_S.spectrum());
    const auto v = velocity_spectra(dw);
    r.I_L = l2_squared(v[0]) + l2_squared(v[1]);
    r.I_S = l2_squared(du);
    r.II_L = l2_squared(dw);
    r.II_S = gradient_l2_squared(du);
    return r;
}

std::vector<std::vector<GapRecord>> paired_runs(const ScalarField& omega_L, const ScalarField& u_S,
                                                std::span<const double> nus, double t_end,
                                                std::span<const double> sample_times, const StepConfig& cfg,
                                                RunStats* stats) {
    std::vector<FlowState> states;
    states.push_back(FlowState::initial(omega_L, u_S, 0.0));
    for (double nu : nus) {
        if (!(nu >= 0.0)) throw Error(ErrorKind::UnsupportedRange, "viscosity must be nonnegative");
        states.push_back(FlowState::initial(omega_L, u_S, nu));
    }
    std::vector<std::vector<GapRecord>> out(nus.size());
    RunOptions opt;
    opt.sample_times.assign(sample_times.begin(), sample_times.end());
    run_lockstep(
        std::move(states), t_end, cfg,
        [&](std::span<const FlowState> s) {
            for (std::size_t k = 0; k < nus.size(); ++k) out[k].push_back(measure_gap(s[k + 1], s[0]));
        },
        opt, stats);
    return out;
}

std::vector<GapRecord> paired_run(const ParameterLadder& ladder, const TorusGrid& grid, double t_end,
                                  std::span<const double> sample_times, const StepConfig& cfg,
                                  std::optional<double> nu) {
    const double v = nu.value_or(ladder.nu_n);
    auto all = paired_runs(build_large_scale(ladder, grid), build_small_scale(ladder, grid), std::span(&v, 1), t_end,
                           sample_times, cfg);
    return std::move(all.front());
}

double calE_measured(const ParameterLadder& ladder, double sup_d1u1_tx, double C_delta) {
    return std::exp((1.0 + C_delta * ladder.delta) * sup_d1u1_tx / ladder.omega_inf);
}

double calE_proxy(const ParameterLadder& ladder, double C_delta) {
    return std::pow(ladder.ell_bar, -(2.0 / std::numbers::pi) * (1.0 + C_delta * ladder.delta));
}

BoundEnvelope envelope_eval(const ParameterLadder& ladder, const InitialNorms& m, GapKind which, double t, double nu,
                            double calE, const EnvelopeConstants& c) {
    if (!(t >= 0.0) || !(nu >= 0.0)) throw Error(ErrorKind::UnsupportedRange, "envelope needs t, nu >= 0");
    if (!(calE >= 1.0)) throw Error(ErrorKind::UnsupportedRange, "calE must be at least 1");
    const double d = ladder.delta;
    const double E2 = std::pow(calE, 2.0 * d);
    const double Em = std::pow(calE, -d);
    BoundEnvelope e;
    e.calE = calE;
    switch (which) {
        case GapKind::I_L: {
            require_positive(m.omegaL_l2, "omegaL_l2");
            e.form = EnvelopeForm::LinearInT;
            e.A = c.C_IL * nu * m.omegaL_l2 * m.omegaL_l2 * E2;
            e.B = e.A * e.A * ladder.t_n * ladder.t_n;
            e.t_star = ladder.t_n;
            e.value = e.A * t;
            return e;
        }
        case GapKind::I_S: {
            require_positive(m.omegaS_inf, "omegaS_inf");
            require_positive(m.omegaS_l2, "omegaS_l2");
            require_positive(m.omegaL_l2, "omegaL_l2");
            e.form = EnvelopeForm::OdeCubic;
            e.A = std::sqrt(nu) * m.omegaS_inf * m.omegaL_l2 * E2;
            e.B = nu * m.omegaS_l2 * m.omegaS_l2 * E2;
            break;
        }
        case GapKind::II_L: {
            require_positive(m.grad_omegaL_inf, "grad_omegaL_inf");
            require_positive(m.grad_omegaL_l2, "grad_omegaL_l2");
            require_positive(m.omegaL_l2, "omegaL_l2");
            e.form = EnvelopeForm::OdeCubic;
            e.A = std::sqrt(nu) * m.grad_omegaL_inf * m.omegaL_l2 * E2;
            e.B = nu * m.grad_omegaL_l2 * m.grad_omegaL_l2 * E2;
            break;
        }
        case GapKind::II_S: {
            for (auto [v, n] : {std::pair{m.grad_omegaL_inf, "grad_omegaL_inf"}, {m.grad_omegaL_l2, "grad_omegaL_l2"},
                                {m.omegaL_l2, "omegaL_l2"}, {m.omegaL_inf, "omegaL_inf"},
                                {m.omegaS_inf, "omegaS_inf"}, {m.omegaS_l2, "omegaS_l2"},
                                {m.grad_omegaS_l2, "grad_omegaS_l2"}})
                require_positive(v, n);
            const double wl = m.omegaL_inf;
            const double log_corr = d * (1.0 + d * std::log(1.0 / ladder.ell_bar)) * m.grad_omegaL_inf / wl;
            const double large = m.grad_omegaL_l2 * Em + d * m.grad_omegaL_inf * m.omegaL_l2 / wl;
            e.form = EnvelopeForm::OdeSquare;
            e.A = E2 * ((m.grad_omegaS_inf + log_corr * m.omegaS_inf) * std::sqrt(d / wl) * m.omegaL_l2 +
                        m.omegaS_inf / std::sqrt(m.grad_omegaL_inf * m.omegaL_l2) * std::pow(large, 1.5));
            const double b = m.grad_omegaS_l2 + log_corr * m.omegaS_l2;
            e.B = b * b * E2;
            e.t_star = std::sqrt(e.B) / e.A;
            const double s = e.B / e.A + e.A * t;
            e.value = c.C_IIS * nu * s * s * E2;
            return e;
        }
    }
    // ODE comparison X(t) <= C (B^(3/2)/A + t^3 A^2).
    const double C = which == GapKind::I_S ? c.C_IS : c.C_IIL;
    if (nu == 0.0) return e;
    e.t_star = std::sqrt(e.B) / e.A;
    e.value = C * (std::pow(e.B, 1.5) / e.A + t * t * t * e.A * e.A);
    return e;
}

double scaling_fit(std::span<const GapRecord> records, GapKind which) {
    if (records.size() < 3) throw Error(ErrorKind::InsufficientSamples, "scaling fit needs at least 3 viscosities");
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : records) {
        lo = std::min(lo, r.nu);
        hi = std::max(hi, r.nu);
    }
    if (!(lo > 0.0) || hi < 4.0 * lo * (1.0 - 1e-12))
        throw Error(ErrorKind::InsufficientSamples, "viscosities must be positive and span at least 4x");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(records.size());
    for (const auto& r : records) {
        const double g = gap_value(r, which);
        if (!(g > 0.0)) throw Error(ErrorKind::InsufficientSamples, "scaling fit needs positive gaps");
        const double x = std::log(r.nu), y = std::log(g);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace vsl
