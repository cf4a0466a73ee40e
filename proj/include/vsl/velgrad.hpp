#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vsl/evolve.hpp"
#include "vsl/ladder.hpp"

namespace vsl {

/// m[i][j] = d_j u_i.
using Matrix2 = std::array<std::array<double, 2>, 2>;

enum class GradSource { Spectral, Oracle };

struct GradSample {
    double time = 0.0;
    Point2 point{};
    Matrix2 matrix{};
    GradSource source = GradSource::Spectral;

    double trace() const noexcept { return matrix[0][0] + matrix[1][1]; }
};

struct BoundCheck {
    std::string name;
    double time = 0.0;
    Point2 point{};
    double measured = 0.0;
    double lower_envelope = 0.0;
    double upper_envelope = 0.0;
    double slack_epsilon_n = 0.0;
    bool pass = false;
};

BoundCheck make_check(std::string name, double time, Point2 point, double measured, double lower, double upper,
                      double slack);

/// Spectral velocity gradient of u_L, trigonometric interpolation at the point.
GradSample grad_at(const FlowState& state, Point2 point);
GradSample grad_at(const ScalarField& omega, Point2 point, double time = 0.0);

struct PvOptions {
    int image_periods = 5;            // images with |k|_inf <= this are summed
    double exclusion_cells = 2.0;     // radius of the excluded disc in grid spacings
    bool tail_correction = true;      // add the multipole estimate of the images beyond image_periods
};

struct PvResult {
    Matrix2 matrix{};
    /// Contribution of images beyond image_periods (added to matrix when tail_correction is set).
    double truncation_estimate = 0.0;
};

/// Principal-value quadrature of the Biot-Savart gradient kernels on the node values.
/// Midpoint rule with singularity subtraction and a symmetric excluded disc; the central
/// 3x3 block of periods is summed directly and the remaining periods by complex multipoles.
PvResult pv_oracle(const ScalarField& omega, Point2 point, const PvOptions& options = {});

bool in_region_D(const ParameterLadder& ladder, Point2 p);
bool in_region_D_prime(const ParameterLadder& ladder, Point2 p);
/// Points uniformly distributed in the disc of the given radius (deterministic for a seed).
std::vector<Point2> random_points_in_disc(double radius, int count, std::uint64_t seed);

struct LocalBoundConfig {
    double epsilon = 0.2;      // slack added to delta in the d1u1 envelopes
    double C_delta = 1.0;      // C in (1 +- C delta)
    double C_offdiag = 1.0;    // |d2u1| + |d1u2| <= C_offdiag ||omega_0||_inf
};

/// d1u1 against (2/pi)||w0||(1 -+ (C delta + eps)) ln(1/ell_bar) and the off-diagonal bound, per point.
/// Throws OutsideRegion for a point outside D.
std::vector<BoundCheck> check_local_bounds(const FlowState& state, const ParameterLadder& ladder,
                                           std::span<const Point2> points, const LocalBoundConfig& config = {});

struct GlobalBoundConfig {
    double K1 = 1.5;   // sup|d1u1| <= K1 ||w0|| ln(1/ell_bar)
    double K2 = 6.5;   // sup|d2u1| + sup|d1u2| <= K2 delta ||w0|| ln(1/ell_bar)
};

std::vector<BoundCheck> check_global_bounds(const FlowState& state, const ParameterLadder& ladder,
                                            const GlobalBoundConfig& config = {});

enum class GradNorm { L2, Linf };

/// ||grad omega_L(t)||_p <= ||grad omega_L(0)||_p exp((1 + C delta) int_0^t sup|d1u1| + slack),
/// evaluated at every record; reports the record with the largest measured/envelope ratio.
/// Needs full records; throws InsufficientSamples for fewer than 2.
BoundCheck vorticity_gradient_growth(std::span<const DiagnosticsRecord> history, double delta, GradNorm p,
                                     double C = 1.0, double slack = 0.0);

/// Envelope C (1 + t||w0|| ln(1/ell_bar)) ||grad w0||_inf exp(t (1 + C delta) sup_d1u1).
double second_gradient_envelope(const ParameterLadder& ladder, double t, double grad_omega0_inf, double sup_d1u1,
                                double C = 1.0);
/// Largest second derivative of u_L over nodes in D.
double second_gradient_sup_D(const FlowState& state, const ParameterLadder& ladder);
BoundCheck second_gradient_bound(const FlowState& state, const ParameterLadder& ladder, double grad_omega0_inf,
                                 double sup_d1u1, double C = 1.0);

}  // namespace vsl
