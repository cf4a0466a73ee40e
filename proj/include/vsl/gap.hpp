#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vsl/evolve.hpp"
#include "vsl/ladder.hpp"

namespace vsl {

/// Squared L2 distances between a viscous run and the inviscid reference at one time.
struct GapRecord {
    double time = 0.0;
    double nu = 0.0;
    double I_L = 0.0;   // ||u_L^nu - u_L||^2
    double I_S = 0.0;   // ||u_S^nu - u_S||^2
    double II_L = 0.0;  // ||omega_L^nu - omega_L||^2
    double II_S = 0.0;  // ||omega_S^nu - omega_S||^2
};

enum class GapKind { I_L, I_S, II_L, II_S };
const char* to_string(GapKind kind);
double gap_value(const GapRecord& r, GapKind kind);

GapRecord measure_gap(const FlowState& viscous, const FlowState& inviscid);

/// Runs the inviscid reference and one viscous run per entry of `nus` in lockstep from the same
/// data; result[k] holds the records of nus[k] at t = 0, every sample time and t_end.
std::vector<std::vector<GapRecord>> paired_runs(const ScalarField& omega_L, const ScalarField& u_S,
                                                std::span<const double> nus, double t_end,
                                                std::span<const double> sample_times, const StepConfig& cfg,
                                                RunStats* stats = nullptr);

/// Single pair built from the ladder (viscosity ladder.nu_n unless overridden).
std::vector<GapRecord> paired_run(const ParameterLadder& ladder, const TorusGrid& grid, double t_end,
                                  std::span<const double> sample_times, const StepConfig& cfg,
                                  std::optional<double> nu = std::nullopt);

enum class EnvelopeForm { LinearInT, OdeCubic, OdeSquare };

struct BoundEnvelope {
    double A = 0.0;
    double B = 0.0;
    double t_star = 0.0;   // B^(1/2)/A for the ODE forms, 0 for the linear form
    EnvelopeForm form = EnvelopeForm::LinearInT;
    double calE = 0.0;
    double value = 0.0;
};

/// Unspecified constants of the four envelopes; calibrated once and frozen.
struct EnvelopeConstants {
    double C_delta = 1.0;  // the C in (1 + C delta) inside calE
    double C_IL = 1.0;
    double C_IS = 1.0;
    double C_IIL = 1.0;
    double C_IIS = 1.0;
};

/// calE = exp((1 + C delta) sup_t ||d1u1||_inf / ||w0||_inf), or the proxy
/// ell_bar^(-(2/pi)(1 + C delta)) when no time series is available.
double calE_measured(const ParameterLadder& ladder, double sup_d1u1_tx, double C_delta = 1.0);
double calE_proxy(const ParameterLadder& ladder, double C_delta = 1.0);

/// Envelope at time t for viscosity nu. Throws MissingNorms if a required initial norm is zero.
BoundEnvelope envelope_eval(const ParameterLadder& ladder, const InitialNorms& norms, GapKind which, double t,
                            double nu, double calE, const EnvelopeConstants& constants = {});

/// Least-squares exponent p of gap ~ nu^p. Needs >= 3 viscosities spanning >= 4x.
double scaling_fit(std::span<const GapRecord> records_over_nu, GapKind which);

}  // namespace vsl
