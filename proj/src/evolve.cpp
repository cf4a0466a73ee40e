#include "vsl/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <tuple>
#include <utility>

#include "vsl/error.hpp"

namespace vsl {

namespace {

// Per-grid wavenumber tables; first-derivative multipliers are zero on the Nyquist rows.
struct Wavenumbers {
    std::vector<double> d1;   // per k1
    std::vector<double> d2;   // per k2
    std::vector<double> ksq;  // per spectral index
    std::vector<char> band;   // inside the 2/3 band
};

const Wavenumbers& wavenumbers(const TorusGrid& g) {
    thread_local std::map<std::pair<int, double>, std::unique_ptr<Wavenumbers>> cache;
    auto& slot = cache[{g.N(), g.L()}];
    if (slot) return *slot;
    slot = std::make_unique<Wavenumbers>();
    const int n = g.N();
    const int cols = g.spectral_cols();
    slot->d1.resize(n);
    slot->d2.resize(cols);
    for (int k1 = 0; k1 < n; ++k1) slot->d1[k1] = (k1 == n / 2) ? 0.0 : g.wavenumber(g.signed_index(k1));
    for (int k2 = 0; k2 < cols; ++k2) slot->d2[k2] = (k2 == n / 2) ? 0.0 : g.wavenumber(k2);
    slot->ksq.resize(g.spectral_size());
    slot->band.resize(g.spectral_size());
    for (int k1 = 0; k1 < n; ++k1) {
        const double a = g.wavenumber(g.signed_index(k1));
        for (int k2 = 0; k2 < cols; ++k2) {
            const double b = g.wavenumber(k2);
            const std::size_t m = static_cast<std::size_t>(k1) * cols + k2;
            slot->ksq[m] = a * a + b * b;
            slot->band[m] = inside_dealias_band(g, k1, k2) ? 1 : 0;
        }
    }
    return *slot;
}

struct Factors {
    std::vector<double> full;
    std::vector<double> half;
};

const Factors& integrating_factors(const TorusGrid& g, double nu, double dt) {
    thread_local std::map<std::tuple<int, double, double, double>, std::unique_ptr<Factors>> cache;
    const auto key = std::make_tuple(g.N(), g.L(), nu, dt);
    if (auto it = cache.find(key); it != cache.end()) return *it->second;
    if (cache.size() >= 64) cache.clear();
    auto& slot = cache[key];
    slot = std::make_unique<Factors>();
    const auto& w = wavenumbers(g);
    slot->full.resize(w.ksq.size());
    slot->half.resize(w.ksq.size());
    for (std::size_t m = 0; m < w.ksq.size(); ++m) {
        slot->full[m] = std::exp(-nu * w.ksq[m] * dt);
        slot->half[m] = std::exp(-0.5 * nu * w.ksq[m] * dt);
    }
    return *slot;
}

// Evaluates -P(u . grad f) for the vorticity and the passive scalar at one stage.
class Nonlinear {
public:
    Nonlinear(const TorusGrid& g, bool dealias_on)
        : g_(g), w_(wavenumbers(g)), dealias_(dealias_on), wd_(g), sd_(g), tmp_(g) {}

    void eval(const Spectrum& w, const Spectrum* s, Spectrum& nw, Spectrum* ns) {
        band_limit(w, wd_);
        wd_.coeffs[0] = Complex{};
        // u1 = i k2 w / |k|^2, u2 = -i k1 w / |k|^2
        fill(wd_, [&](int, int k2, std::size_t m, Complex c) {
            return m == 0 ? Complex{} : Complex{0.0, w_.d2[k2]} * c / w_.ksq[m];
        });
        u1_ = inverse(tmp_);
        fill(wd_, [&](int k1, int, std::size_t m, Complex c) {
            return m == 0 ? Complex{} : Complex{0.0, -w_.d1[k1]} * c / w_.ksq[m];
        });
        u2_ = inverse(tmp_);
        advect(wd_, nw);
        if (s && ns) {
            band_limit(*s, sd_);
            advect(sd_, *ns);
        }
    }

    const Spectrum& dealiased_input() const { return wd_; }
    std::span<const double> u1() const { return u1_; }
    std::span<const double> u2() const { return u2_; }

    double max_speed() const {
        double m = 0.0;
        for (std::size_t i = 0; i < u1_.size(); ++i) m = std::max(m, u1_[i] * u1_[i] + u2_[i] * u2_[i]);
        return std::sqrt(m);
    }

private:
    void band_limit(const Spectrum& in, Spectrum& out) const {
        for (std::size_t m = 0; m < in.coeffs.size(); ++m)
            out.coeffs[m] = (!dealias_ || w_.band[m]) ? in.coeffs[m] : Complex{};
    }

    template <class F>
    void fill(const Spectrum& src, F&& f) {
        const int n = g_.N();
        const int cols = g_.spectral_cols();
        for (int k1 = 0; k1 < n; ++k1)
            for (int k2 = 0; k2 < cols; ++k2) {
                const std::size_t m = static_cast<std::size_t>(k1) * cols + k2;
                tmp_.coeffs[m] = f(k1, k2, m, src.coeffs[m]);
            }
    }

    void advect(const Spectrum& f, Spectrum& out) {
        fill(f, [&](int k1, int, std::size_t, Complex c) { return Complex{0.0, w_.d1[k1]} * c; });
        const auto fx = inverse(tmp_);
        fill(f, [&](int, int k2, std::size_t, Complex c) { return Complex{0.0, w_.d2[k2]} * c; });
        auto prod = inverse(tmp_);
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = u1_[i] * fx[i] + u2_[i] * prod[i];
        out = forward(g_, prod);
        for (std::size_t m = 0; m < out.coeffs.size(); ++m)
            out.coeffs[m] = (!dealias_ || w_.band[m]) ? -out.coeffs[m] : Complex{};
    }

    TorusGrid g_;
    const Wavenumbers& w_;
    bool dealias_;
    Spectrum wd_, sd_, tmp_;
    std::vector<double> u1_, u2_;
};

void check_finite_growth(const FlowState& s) {
    const auto w = s.omega_L.values();
    const auto u = s.u_S.values();
    if (!all_finite(w) || !all_finite(u)) throw Error(ErrorKind::BlowupDetected, "non-finite field values");
    const double wmax = max_abs(w);
    const double umax = max_abs(u);
    if ((s.sup_omega0 > 0.0 && wmax > 1e6 * s.sup_omega0) || (s.sup_uS0 > 0.0 && umax > 1e6 * s.sup_uS0))
        throw Error(ErrorKind::BlowupDetected, "field sup norm exceeded 1e6 times its initial value");
}

}  // namespace

const char* to_string(Scheme) { return "if-rk4"; }

FlowState FlowState::initial(ScalarField omega_L, ScalarField u_S, double nu, double time) {
    if (!(omega_L.grid() == u_S.grid())) throw Error(ErrorKind::InvalidGrid, "fields live on different grids");
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw Error(ErrorKind::UnsupportedRange, "viscosity must be >= 0");
    if (!all_finite(omega_L.values()) || !all_finite(u_S.values()))
        throw Error(ErrorKind::NonFinite, "initial fields contain non-finite samples");
    const double wmax = max_abs(omega_L.values());
    if (std::abs(mean(omega_L)) > 1e-10 * wmax)
        throw Error(ErrorKind::NonZeroMean, "large-scale vorticity must have zero mean");
    FlowState s{time, std::move(omega_L), std::move(u_S), nu, 0.0, 0.0};
    s.sup_omega0 = wmax;
    s.sup_uS0 = max_abs(s.u_S.values());
    return s;
}

VectorField FlowState::omega_S() const {
    const auto spec = u_S.spectrum();
    Spectrum w1 = derivative(*spec, 0, 1);
    Spectrum w2 = derivative(*spec, 1, 0);
    for (auto& c : w2.coeffs) c = -c;
    return {ScalarField::from_spectrum(std::move(w1)), ScalarField::from_spectrum(std::move(w2))};
}

double cfl_limit(const FlowState& state, double cfl_cap) {
    const auto u = state.velocity();
    double m = 0.0;
    for (std::size_t i = 0; i < u.u1.values().size(); ++i)
        m = std::max(m, std::hypot(u.u1.values()[i], u.u2.values()[i]));
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return cfl_cap * state.grid().h() / m;
}

FlowState step(const FlowState& state, const StepConfig& cfg, const StageHook& hook) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorKind::UnsupportedRange, "dt must be positive");
    const TorusGrid& g = state.grid();
    const double dt = cfg.dt;
    const double t0 = state.time;
    const bool small = cfg.evolve_small;
    const auto& f = integrating_factors(g, state.nu, dt);
    const std::size_t size = g.spectral_size();

    const auto w0p = state.omega_L.spectrum();
    const auto s0p = state.u_S.spectrum();
    const Spectrum& w0 = *w0p;
    const Spectrum& s0 = *s0p;

    Nonlinear nl(g, cfg.dealias);
    Spectrum kw(g), ks(g), stw(g), sts(g), accw(g), accs(g);

    auto stage = [&](int index, double time, const Spectrum& w, const Spectrum& s) {
        nl.eval(w, small ? &s : nullptr, kw, small ? &ks : nullptr);
        if (index == 0) {
            const double speed = nl.max_speed();
            if (speed > 0.0 && dt > cfg.cfl_cap * g.h() / speed * (1.0 + 1e-12))
                throw Error(ErrorKind::CflViolation, "dt " + std::to_string(dt) + " exceeds CFL limit " +
                                                         std::to_string(cfg.cfl_cap * g.h() / speed));
        }
        if (hook) hook(StageView{index, time, &nl.dealiased_input(), nl.u1(), nl.u2()});
    };

    // Stage 1
    stage(0, t0, w0, s0);
    for (std::size_t m = 0; m < size; ++m) {
        accw.coeffs[m] = f.full[m] * (w0.coeffs[m] + dt / 6.0 * kw.coeffs[m]);
        stw.coeffs[m] = f.half[m] * (w0.coeffs[m] + 0.5 * dt * kw.coeffs[m]);
    }
    if (small)
        for (std::size_t m = 0; m < size; ++m) {
            accs.coeffs[m] = f.full[m] * (s0.coeffs[m] + dt / 6.0 * ks.coeffs[m]);
            sts.coeffs[m] = f.half[m] * (s0.coeffs[m] + 0.5 * dt * ks.coeffs[m]);
        }
    // Stage 2
    stage(1, t0 + 0.5 * dt, stw, sts);
    for (std::size_t m = 0; m < size; ++m) {
        accw.coeffs[m] += dt / 3.0 * f.half[m] * kw.coeffs[m];
        stw.coeffs[m] = f.half[m] * w0.coeffs[m] + 0.5 * dt * kw.coeffs[m];
    }
    if (small)
        for (std::size_t m = 0; m < size; ++m) {
            accs.coeffs[m] += dt / 3.0 * f.half[m] * ks.coeffs[m];
            sts.coeffs[m] = f.half[m] * s0.coeffs[m] + 0.5 * dt * ks.coeffs[m];
        }
    // Stage 3
    stage(2, t0 + 0.5 * dt, stw, sts);
    for (std::size_t m = 0; m < size; ++m) {
        accw.coeffs[m] += dt / 3.0 * f.half[m] * kw.coeffs[m];
        stw.coeffs[m] = f.full[m] * w0.coeffs[m] + dt * f.half[m] * kw.coeffs[m];
    }
    if (small)
        for (std::size_t m = 0; m < size; ++m) {
            accs.coeffs[m] += dt / 3.0 * f.half[m] * ks.coeffs[m];
            sts.coeffs[m] = f.full[m] * s0.coeffs[m] + dt * f.half[m] * ks.coeffs[m];
        }
    // Stage 4
    stage(3, t0 + dt, stw, sts);
    for (std::size_t m = 0; m < size; ++m) accw.coeffs[m] += dt / 6.0 * kw.coeffs[m];
    if (small) {
        for (std::size_t m = 0; m < size; ++m) accs.coeffs[m] += dt / 6.0 * ks.coeffs[m];
    } else {
        for (std::size_t m = 0; m < size; ++m) accs.coeffs[m] = f.full[m] * s0.coeffs[m];
    }

    FlowState out{t0 + dt,
                  ScalarField::from_spectrum(std::move(accw)),
                  ScalarField::from_spectrum(std::move(accs)),
                  state.nu,
                  state.sup_omega0,
                  state.sup_uS0};
    check_finite_growth(out);
    return out;
}

std::vector<FlowState> run_lockstep(std::vector<FlowState> states, double t_end, const StepConfig& cfg,
                                    const LockstepObserver& observer, const RunOptions& opt, RunStats* stats) {
    if (states.empty()) return states;
    const double t_start = states.front().time;
    for (const auto& s : states)
        if (s.time != t_start) throw Error(ErrorKind::UnsupportedRange, "lockstep states must share their time");
    if (!(t_end >= t_start)) throw Error(ErrorKind::UnsupportedRange, "t_end precedes the state time");

    std::vector<double> targets;
    for (double t : opt.sample_times)
        if (t > t_start && t < t_end) targets.push_back(t);
    targets.push_back(t_end);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    auto notify = [&] {
        if (observer) observer(std::span<const FlowState>(states));
    };
    auto is_sample = [&](double t) {
        return std::find(opt.sample_times.begin(), opt.sample_times.end(), t) != opt.sample_times.end();
    };

    RunStats local;
    if (opt.observe_start || is_sample(t_start)) notify();
    if (t_end == t_start) {
        if (stats) *stats = local;
        return states;
    }

    double dt_cur = cfg.dt;
    int quiet = 0;
    long since_sample = 0;
    std::size_t target_idx = 0;
    while (target_idx < targets.size()) {
        const double target = targets[target_idx];
        const double now = states.front().time;
        const double remaining = target - now;
        double h = std::min(dt_cur, remaining);
        bool lands = h == remaining;
        // Avoid a sliver step: stretch this step onto the target when the leftover is tiny.
        if (!lands && remaining - h < 1e-9 * dt_cur) {
            h = remaining;
            lands = true;
        }
        StepConfig c = cfg;
        c.dt = h;
        std::vector<FlowState> next;
        next.reserve(states.size());
        try {
            for (const auto& s : states) next.push_back(step(s, c));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::CflViolation || !opt.adaptive) throw;
            dt_cur *= 0.5;
            ++local.halvings;
            quiet = 0;
            if (dt_cur < 1e-12 * std::max(1.0, std::abs(t_end))) throw;
            continue;
        }
        if (lands)
            for (auto& s : next) s.time = target;
        states = std::move(next);
        ++local.steps;
        ++since_sample;
        if (dt_cur < cfg.dt && ++quiet >= opt.quiet_steps) {
            dt_cur = std::min(2.0 * dt_cur, cfg.dt);
            quiet = 0;
        }
        bool observed = false;
        if (lands) {
            ++target_idx;
            const bool at_end = target_idx == targets.size();
            if ((at_end && opt.observe_end) || is_sample(target)) {
                notify();
                observed = true;
                since_sample = 0;
            }
        }
        if (!observed && opt.sample_every > 0 && since_sample >= opt.sample_every) {
            notify();
            since_sample = 0;
        }
    }
    local.final_dt = dt_cur;
    if (stats) *stats = local;
    return states;
}

FlowState run_to(FlowState state, double t_end, const StepConfig& cfg, const std::vector<Observer>& observers,
                 const RunOptions& options, RunStats* stats) {
    std::vector<FlowState> states;
    states.push_back(std::move(state));
    auto out = run_lockstep(
        std::move(states), t_end, cfg,
        [&](std::span<const FlowState> s) {
            for (const auto& o : observers) o(s.front());
        },
        options, stats);
    return std::move(out.front());
}

namespace {

struct ShellTable {
    std::vector<std::uint32_t> index;  // mode -> class of equal |k|^2
    std::size_t count = 0;
};

const ShellTable& shell_table(const TorusGrid& g) {
    thread_local std::map<int, std::unique_ptr<ShellTable>> cache;
    auto& slot = cache[g.N()];
    if (!slot) {
        const int n = g.N();
        std::vector<long> key(g.spectral_size());
        for (int k1 = 0; k1 < n; ++k1) {
            const long m1 = g.signed_index(k1);
            for (int k2 = 0; k2 < g.spectral_cols(); ++k2)
                key[static_cast<std::size_t>(k1) * g.spectral_cols() + k2] = m1 * m1 + long(k2) * k2;
        }
        std::vector<long> distinct = key;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        auto t = std::make_unique<ShellTable>();
        t->count = distinct.size();
        t->index.resize(key.size());
        for (std::size_t m = 0; m < key.size(); ++m)
            t->index[m] = static_cast<std::uint32_t>(std::lower_bound(distinct.begin(), distinct.end(), key[m]) -
                                                     distinct.begin());
        slot = std::move(t);
    }
    return *slot;
}

/// Per |k|^2 class: total |grad u|^2 and the small-scale part |grad u_S|^2.
std::pair<std::vector<double>, std::vector<double>> shell_grad_sq(const Spectrum& w, const Spectrum& s) {
    const TorusGrid& g = w.grid;
    const int n = g.N();
    const auto& k = wavenumbers(g);
    const auto& table = shell_table(g);
    std::vector<double> total(table.count, 0.0), small(table.count, 0.0);
    const double scale = g.cell_area() / (static_cast<double>(n) * n);
    for (int k1 = 0; k1 < n; ++k1) {
        for (int k2 = 0; k2 < g.spectral_cols(); ++k2) {
            const std::size_t m = static_cast<std::size_t>(k1) * g.spectral_cols() + k2;
            const double weight = (k2 == 0 || k2 == n / 2) ? 1.0 : 2.0;
            // |grad u_L|^2 = |omega_L|^2 mode by mode; |grad u_S|^2 = |k|^2 |u_S|^2.
            const double vs = weight * k.ksq[m] * std::norm(s.coeffs[m]) * scale;
            total[table.index[m]] += weight * std::norm(w.coeffs[m]) * scale + vs;
            small[table.index[m]] += vs;
        }
    }
    return {std::move(total), std::move(small)};
}

double fitted_trapezoid(double a, double b, double dt) {
    if (a <= 0.0 || b <= 0.0) return 0.5 * dt * (a + b);
    const double r = std::log(a / b);
    if (std::abs(r) < 1e-6) return 0.5 * dt * (a + b);
    return dt * (a - b) / r;
}

}  // namespace

namespace {

double shell_integral(std::span<const double> a, std::span<const double> b, double fa, double fb, double dt) {
    if (a.size() != b.size() || a.empty()) return 0.5 * dt * (fa + fb);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += fitted_trapezoid(a[i], b[i], dt);
    return total;
}

}  // namespace

double grad_sq_integral(const DiagnosticsRecord& a, const DiagnosticsRecord& b) {
    return shell_integral(a.grad_sq_shells, b.grad_sq_shells, a.grad_u_sq, b.grad_u_sq, b.time - a.time);
}

double grad_sq_integral(std::span<const DiagnosticsRecord> h) {
    double total = 0.0;
    for (std::size_t i = 1; i < h.size(); ++i) total += grad_sq_integral(h[i - 1], h[i]);
    return total;
}

double enstrophy_S_integral(const DiagnosticsRecord& a, const DiagnosticsRecord& b) {
    return shell_integral(a.enstrophy_S_shells, b.enstrophy_S_shells, a.enstrophy_S, b.enstrophy_S, b.time - a.time);
}

double enstrophy_S_integral(std::span<const DiagnosticsRecord> h) {
    double total = 0.0;
    for (std::size_t i = 1; i < h.size(); ++i) total += enstrophy_S_integral(h[i - 1], h[i]);
    return total;
}

double energy_balance_defect(const DiagnosticsRecord& a, const DiagnosticsRecord& b) {
    const double dt = b.time - a.time;
    if (!(dt > 0.0)) throw Error(ErrorKind::InsufficientSamples, "records must have increasing times");
    return std::abs((b.energy - a.energy) / dt + a.nu * grad_sq_integral(a, b) / dt);
}

DiagnosticsRecord measure(const FlowState& state, bool full) {
    DiagnosticsRecord r;
    r.time = state.time;
    r.nu = state.nu;
    const auto w = state.omega_L.spectrum();
    const auto s = state.u_S.spectrum();
    Spectrum wc = *w;
    wc.at(0, 0) = Complex{};
    const auto [u1, u2] = velocity_spectra(wc);
    r.energy_L = 0.5 * (l2_squared(u1) + l2_squared(u2));
    r.energy_S = 0.5 * l2_squared(*s);
    r.energy = r.energy_L + r.energy_S;
    r.enstrophy_L = l2_squared(wc);
    r.enstrophy_S = gradient_l2_squared(*s);
    std::tie(r.grad_sq_shells, r.enstrophy_S_shells) = shell_grad_sq(wc, *s);
    r.grad_u_sq = r.enstrophy_L + r.enstrophy_S;
    r.dissipation = state.nu * r.grad_u_sq;
    r.omegaL_inf = max_abs(state.omega_L.values());
    r.uS_inf = max_abs(state.u_S.values());
    if (!full) return r;
    r.full = true;
    const auto grads = velocity_gradient_spectra(wc);
    const ScalarField d1u1 = ScalarField::from_spectrum(grads[0]);
    r.sup_d1u1 = max_abs(d1u1.values());
    r.d1u1_origin = sample_trig(grads[0], {0.0, 0.0});
    r.grad_omegaL_l2 = std::sqrt(gradient_l2_squared(*w));
    const auto gw = gradient(state.omega_L);
    r.grad_omegaL_inf = std::max(max_abs(gw.u1.values()), max_abs(gw.u2.values()));
    const auto ws = state.omega_S();
    r.omegaS_inf = std::max(max_abs(ws.u1.values()), max_abs(ws.u2.values()));
    return r;
}

double energy_balance_residual(std::span<const DiagnosticsRecord> h) {
    if (h.size() < 3) throw Error(ErrorKind::InsufficientSamples, "energy balance needs at least 3 records");
    const double nu = h.front().nu;
    const double denom = nu * h.front().grad_u_sq + 2.0 * h.front().energy;
    double worst = 0.0;
    for (std::size_t i = 1; i < h.size(); ++i) worst = std::max(worst, energy_balance_defect(h[i - 1], h[i]));
    return denom > 0.0 ? worst / denom : worst;
}

}  // namespace vsl
