#pragma once

#include <span>
#include <vector>

#include "vsl/evolve.hpp"
#include "vsl/ladder.hpp"

namespace vsl {

/// Maps a ladder to a grid: h must resolve the large-scale data and h <= ell_tilde / cells_per_ell_tilde.
struct GridPolicy {
    double cells_per_ell_tilde = 8.0;
    int max_N = 2048;
    int fixed_N = 0;  // nonzero overrides the policy (still checked against the field builders)
};

/// Throws ResolutionInfeasible when the policy needs more than max_N.
int resolution_for(const ParameterLadder& ladder, const GridPolicy& policy);

struct DtPolicy {
    double cfl = 0.4;          // dt = cfl * h / max|u_L(0)|
    double max_dt = 0.0;       // 0 means t_n / 50
    int sample_every = 1;      // diagnostics sampling in accepted steps
};

double initial_dt(const FlowState& state, const ParameterLadder& ladder, const DtPolicy& policy);

struct SweepConfig {
    double delta = 0.1;
    double a0_bar = 0.4;
    double kappa = 0.5;
    double c_small = 1.0;
    LadderConstants constants{};
    GridPolicy grid{};
    DtPolicy dt{};
    double rho = 0.5;       // amplification threshold calE^(2 delta (1 - rho))
    double C_delta = 1.0;   // the C in calE
    int threads = 0;        // 0 means thread_count()
};

struct SweepResult {
    int n = 0;
    ParameterLadder ladder{};
    int N = 0;
    double dt = 0.0;
    double t_end = 0.0;                  // delta' = t_n
    double uL0_sq = 0.0;                 // ||u^L_0||^2
    double uS0_sq = 0.0;                 // ||u^S_0||^2
    double u0_sq = 0.0;                  // uL0_sq + uS0_sq
    double grad_u0_sq = 0.0;             // ||grad u_0||^2
    double mean_grad_sq = 0.0;           // (1/t_end) int ||grad u||^2 dt
    double D_n = 0.0;                    // nu_n^a0_bar mean_grad_sq / u0_sq
    double S_n = 0.0;                    // mean_grad_sq / grad_u0_sq
    double omegaS0_sq = 0.0;             // ||omega^S_0||^2
    double enstrophy_smallscale_mean = 0.0;
    double sup_d1u1_tx = 0.0;            // max over samples of sup |d1u1|
    double calE = 0.0;
    double amplification = 0.0;          // enstrophy_smallscale_mean / omegaS0_sq
    double amplification_threshold = 0.0;
    double energy_residual = 0.0;
    long steps = 0;
    int halvings = 0;
    double wall_seconds = 0.0;           // not part of any data file
};

/// Builds the ladder for n, runs Navier-Stokes with nu_n to t_n and reduces the records.
SweepResult run_sweep_point(int n, const SweepConfig& config, std::vector<DiagnosticsRecord>* history = nullptr);

/// All points on a pool of threads; results sorted by n. n must lie in [3, 8]; every
/// resolution is checked before any run starts.
std::vector<SweepResult> sweep(std::span<const int> n_list, const SweepConfig& config);

/// b with ||grad u_0||^2 / ||u_0||^2 ~ nu_n^(-b), least squares in log-log. Needs >= 3 points.
double estimate_b0(std::span<const SweepResult> sweep);

/// VSL_THREADS when set to a positive integer, otherwise the number of logical cores.
int thread_count();

}  // namespace vsl
