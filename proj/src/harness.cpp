#include "vsl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "vsl/error.hpp"
#include "vsl/gap.hpp"

namespace vsl {

int resolution_for(const ParameterLadder& ladder, const GridPolicy& policy) {
    const double h = std::min(required_spacing(ladder), ladder.ell_tilde / policy.cells_per_ell_tilde);
    const int needed = resolution_for_spacing(ladder.L, h);
    if (policy.fixed_N > 0) return policy.fixed_N;
    if (needed > policy.max_N)
        throw Error(ErrorKind::ResolutionInfeasible, "n=" + std::to_string(ladder.n) + " needs N=" +
                                                          std::to_string(needed) + " > max N " +
                                                          std::to_string(policy.max_N));
    return needed;
}

double initial_dt(const FlowState& state, const ParameterLadder& ladder, const DtPolicy& policy) {
    const auto u = state.velocity();
    const double umax = std::max(max_abs(u.u1.values()), max_abs(u.u2.values()));
    double dt = policy.max_dt > 0.0 ? policy.max_dt : ladder.t_n / 50.0;
    if (umax > 0.0) dt = std::min(dt, policy.cfl * state.grid().h() / umax);
    // Land on t_n with equal steps.
    const double steps = std::ceil(ladder.t_n / dt * (1.0 - 1e-12));
    return ladder.t_n / steps;
}

SweepResult run_sweep_point(int n, const SweepConfig& c, std::vector<DiagnosticsRecord>* history_out) {
    const auto start = std::chrono::steady_clock::now();
    SweepResult r;
    r.n = n;
    r.ladder = build_ladder(n, c.delta, c.a0_bar, c.kappa, c.c_small, std::nullopt, c.constants);
    r.N = resolution_for(r.ladder, c.grid);
    const TorusGrid grid(r.ladder.L, r.N);
    auto state = FlowState::initial(build_large_scale(r.ladder, grid), build_small_scale(r.ladder, grid), r.ladder.nu_n);
    r.t_end = r.ladder.t_n;
    r.dt = initial_dt(state, r.ladder, c.dt);

    // Integrals accumulate record by record; only the latest record keeps its class vectors.
    std::vector<DiagnosticsRecord> history;
    DiagnosticsRecord prev;
    double grad_int = 0.0, ens_int = 0.0, defect = 0.0;
    StepConfig cfg;
    cfg.dt = r.dt;
    RunOptions opt;
    opt.sample_every = c.dt.sample_every;
    RunStats stats;
    auto observe = [&](const FlowState& s) {
        auto rec = measure(s, true);
        if (!history.empty()) {
            grad_int += grad_sq_integral(prev, rec);
            ens_int += enstrophy_S_integral(prev, rec);
            defect = std::max(defect, energy_balance_defect(prev, rec));
        }
        prev = rec;
        rec.grad_sq_shells = {};
        rec.enstrophy_S_shells = {};
        history.push_back(std::move(rec));
    };
    run_to(std::move(state), r.t_end, cfg, {observe}, opt, &stats);
    r.steps = stats.steps;
    r.halvings = stats.halvings;

    const auto& h0 = history.front();
    r.uL0_sq = 2.0 * h0.energy_L;
    r.uS0_sq = 2.0 * h0.energy_S;
    r.u0_sq = r.uL0_sq + r.uS0_sq;
    r.grad_u0_sq = h0.grad_u_sq;
    r.omegaS0_sq = h0.enstrophy_S;
    r.mean_grad_sq = grad_int / r.t_end;
    r.D_n = std::pow(r.ladder.nu_n, c.a0_bar) * r.mean_grad_sq / r.u0_sq;
    r.S_n = r.mean_grad_sq / r.grad_u0_sq;
    r.enstrophy_smallscale_mean = ens_int / r.t_end;
    for (const auto& rec : history) r.sup_d1u1_tx = std::max(r.sup_d1u1_tx, rec.sup_d1u1);
    r.calE = calE_measured(r.ladder, r.sup_d1u1_tx, c.C_delta);
    r.amplification = r.enstrophy_smallscale_mean / r.omegaS0_sq;
    r.amplification_threshold = std::pow(r.calE, 2.0 * c.delta * (1.0 - c.rho));
    r.energy_residual = defect / (r.ladder.nu_n * r.grad_u0_sq + r.u0_sq);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (history_out) *history_out = std::move(history);
    return r;
}

int thread_count() {
    if (const char* env = std::getenv("VSL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepResult> sweep(std::span<const int> n_list, const SweepConfig& config) {
    std::vector<int> ns(n_list.begin(), n_list.end());
    std::sort(ns.begin(), ns.end());
    if (std::adjacent_find(ns.begin(), ns.end()) != ns.end())
        throw Error(ErrorKind::UnsupportedRange, "sweep n values must be distinct");
    for (int n : ns) {
        if (n < 3 || n > 8) throw Error(ErrorKind::UnsupportedRange, "sweep n must lie in [3, 8]");
        resolution_for(build_ladder(n, config.delta, config.a0_bar, config.kappa, config.c_small, std::nullopt,
                                    config.constants),
                       config.grid);
    }
    std::vector<SweepResult> out(ns.size());
    std::vector<std::exception_ptr> errors(ns.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < ns.size();) {
            try {
                out[k] = run_sweep_point(ns[k], config);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int pool = std::min<int>(config.threads > 0 ? config.threads : thread_count(), static_cast<int>(ns.size()));
    std::vector<std::thread> threads;
    for (int t = 1; t < pool; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

double estimate_b0(std::span<const SweepResult> sweep) {
    if (sweep.size() < 3) throw Error(ErrorKind::InsufficientSamples, "b0 estimate needs at least 3 sweep points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& r : sweep) {
        const double x = std::log(r.ladder.nu_n), y = std::log(r.grad_u0_sq / r.u0_sq);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(sweep.size());
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw Error(ErrorKind::InsufficientSamples, "b0 estimate needs distinct viscosities");
    return 0.0 - (n * sxy - sx * sy) / den;
}

}  // namespace vsl
