#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vsl/spectral.hpp"

namespace vsl {

/// Large-scale vorticity and small-scale vertical velocity at one instant.
struct FlowState {
    double time = 0.0;
    ScalarField omega_L;
    ScalarField u_S;
    double nu = 0.0;
    // Reference sup norms of the initial data, used by the blow-up guard.
    double sup_omega0 = 0.0;
    double sup_uS0 = 0.0;

    static FlowState initial(ScalarField omega_L, ScalarField u_S, double nu, double time = 0.0);

    const TorusGrid& grid() const noexcept { return omega_L.grid(); }
    VectorField velocity() const { return velocity_from_vorticity(omega_L); }
    /// Horizontal small-scale vorticity (d2 uS, -d1 uS).
    VectorField omega_S() const;
};

enum class Scheme { IntegratingFactorRK4 };
const char* to_string(Scheme scheme);

struct StepConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::IntegratingFactorRK4;
    bool dealias = true;
    double cfl_cap = 0.5;
    /// Skip the small-scale equation (treated as frozen at zero tendency) when false.
    bool evolve_small = true;
};

/// Fields available at one Runge-Kutta stage: the stage vorticity spectrum (as fed to the
/// nonlinear term) and the physical large-scale velocity built from it.
struct StageView {
    int index = 0;  // 0..3
    double time = 0.0;
    const Spectrum* omega_hat = nullptr;
    std::span<const double> u1;
    std::span<const double> u2;
};
using StageHook = std::function<void(const StageView&)>;

/// One IF-RK4 step of both transport equations. Throws CflViolation before touching the state
/// if dt exceeds cfl_cap * h / max|u_L|, BlowupDetected on non-finite or exploding fields.
FlowState step(const FlowState& state, const StepConfig& cfg, const StageHook& hook = {});

/// Largest dt allowed by the CFL cap for the current state.
double cfl_limit(const FlowState& state, double cfl_cap);

struct RunOptions {
    std::vector<double> sample_times;  // the run lands exactly on each and notifies observers
    int sample_every = 0;              // additionally notify every k accepted steps (0 = off)
    bool observe_start = true;
    bool observe_end = true;
    bool adaptive = true;              // halve dt on CFL violation, re-double after quiet steps
    int quiet_steps = 100;
};

struct RunStats {
    long steps = 0;
    int halvings = 0;
    double final_dt = 0.0;
};

using Observer = std::function<void(const FlowState&)>;
using LockstepObserver = std::function<void(std::span<const FlowState>)>;

FlowState run_to(FlowState state, double t_end, const StepConfig& cfg, const std::vector<Observer>& observers,
                 const RunOptions& options = {}, RunStats* stats = nullptr);

/// Advances several states sharing one time grid and one dt schedule (CFL taken over all
/// of them). All states must start at the same time.
std::vector<FlowState> run_lockstep(std::vector<FlowState> states, double t_end, const StepConfig& cfg,
                                    const LockstepObserver& observer, const RunOptions& options = {},
                                    RunStats* stats = nullptr);

struct DiagnosticsRecord {
    double time = 0.0;
    double nu = 0.0;
    double energy_L = 0.0;      // 1/2 ||u_L||^2
    double energy_S = 0.0;      // 1/2 ||u_S||^2
    double energy = 0.0;        // energy_L + energy_S
    double enstrophy_L = 0.0;   // ||omega_L||^2 = ||grad u_L||^2
    double enstrophy_S = 0.0;   // ||omega_S||^2 = ||grad u_S||^2
    double grad_u_sq = 0.0;     // ||grad u||^2 of the full velocity
    double dissipation = 0.0;   // nu * grad_u_sq
    double omegaL_inf = 0.0;
    double uS_inf = 0.0;
    // Pointwise quantities (filled only by full measurements).
    bool full = false;
    double sup_d1u1 = 0.0;      // sup over nodes of |d1 u1_L|
    double d1u1_origin = 0.0;
    double grad_omegaL_l2 = 0.0;
    double grad_omegaL_inf = 0.0;
    double omegaS_inf = 0.0;
    // ||grad u||^2 and ||grad u_S||^2 split over classes of equal |k|^2 (one viscous decay rate each).
    std::vector<double> grad_sq_shells;
    std::vector<double> enstrophy_S_shells;
};

/// Spectral-sum diagnostics; `full` adds sup-norm and pointwise quantities (extra transforms).
DiagnosticsRecord measure(const FlowState& state, bool full = true);

/// Integral of ||grad u||^2 between two records: per wavenumber shell, the exponentially fitted
/// trapezoid rule (exact for pure viscous decay, the plain trapezoid rule for slowly varying shells).
double grad_sq_integral(const DiagnosticsRecord& a, const DiagnosticsRecord& b);
double grad_sq_integral(std::span<const DiagnosticsRecord> history);

/// Same quadrature for ||omega_S||^2 = ||grad u_S||^2.
double enstrophy_S_integral(const DiagnosticsRecord& a, const DiagnosticsRecord& b);
double enstrophy_S_integral(std::span<const DiagnosticsRecord> history);

/// |dE/dt + nu <||grad u||^2>| over one interval, unnormalized.
double energy_balance_defect(const DiagnosticsRecord& a, const DiagnosticsRecord& b);

/// max over intervals of |dE/dt + nu <||grad u||^2>| / (nu ||grad u_0||^2 + ||u_0||^2), where
/// <.> is the interval mean from grad_sq_integral.
double energy_balance_residual(std::span<const DiagnosticsRecord> history);

}  // namespace vsl
