#pragma once

#include <optional>

#include "vsl/spectral.hpp"

namespace vsl {

/// The absolute constants that the construction leaves free. All default to 1;
/// every "(1 +- C delta)" correction becomes "(1 +- C*delta)" with C below.
struct LadderConstants {
    double nu_prefactor = 1.0;  // c in nu_n = c / delta^4 * ...
    double c0 = 1.0;            // exponent constant of the ell_bar factor in nu_n and gamma
    double C = 1.0;             // multiplier of delta in every (1 +- C delta)
    double C1 = 1.0;            // gamma numerator
    double C2 = 1.0;            // gamma denominator
    double C3 = 1.0;            // q selection
    double c_ball = 1.0;       // c in ell_tilde <= c * ell * ell_bar^(c delta)

    bool operator==(const LadderConstants&) const = default;
};

struct ParameterLadder {
    int n = 0;
    double delta = 0.0;
    double kappa = 0.0;
    double c_small = 0.0;
    double a0_bar = 0.0;
    double ell_bar = 0.0;
    double gamma = 0.0;
    double L = 0.0;
    double ell = 0.0;
    double ell_tilde = 0.0;
    double q = 0.0;  // +infinity in the a0_bar <= 1/2 branch unless overridden
    double M = 0.0;
    double nu_n = 0.0;
    double t_n = 0.0;
    double radius_D = 0.0;
    double radius_D_prime = 0.0;
    double omega_inf = 1.0;  // ||omega^L_0||_inf of the construction (plateau value)
    bool gamma_clamped = false;
    LadderConstants constants{};

    bool operator==(const ParameterLadder&) const = default;
};

ParameterLadder build_ladder(int n, double delta, double a0_bar, double kappa = 0.5, double c_small = 1.0,
                             std::optional<double> q_override = std::nullopt,
                             const LadderConstants& constants = {});

/// Smoothed Bahouri-Chemin vorticity phi_{kappa ell} * sgn(x1) sgn(x2) 1{ell < |x_i| < L - ell}.
ScalarField build_large_scale(const ParameterLadder& ladder, const TorusGrid& grid);

/// Small-scale vertical velocity M x2 chi(|x| / ell_tilde).
ScalarField build_small_scale(const ParameterLadder& ladder, const TorusGrid& grid);

/// Unit-mass radial mollifier profile exp(-1/(1-r^2)) (unnormalized value).
double mollifier_profile(double r);
/// Radial cutoff: 1 on [0, plateau], 0 on [1, inf), smooth in between.
double cutoff_profile(double s, double plateau);
/// Integral over R^2 of |grad(y2 chi(|y|))|^2 for the cutoff with the given plateau.
double cutoff_energy(double plateau);

/// Smallest power-of-two N with h <= limit (relative tolerance 1e-12).
int resolution_for_spacing(double half_period, double max_spacing);
/// Largest grid spacing accepted by build_large_scale.
double large_scale_spacing(const ParameterLadder& ladder);
/// Largest grid spacing accepted by both field builders for this ladder.
double required_spacing(const ParameterLadder& ladder);

/// Norms of the initial data entering the inviscid-limit envelopes.
struct InitialNorms {
    double omegaL_l2 = 0.0;
    double omegaL_inf = 0.0;
    double grad_omegaL_l2 = 0.0;
    double grad_omegaL_inf = 0.0;
    double uL_l2 = 0.0;
    double omegaS_l2 = 0.0;
    double omegaS_inf = 0.0;
    double grad_omegaS_l2 = 0.0;
    double grad_omegaS_inf = 0.0;
    double uS_l2 = 0.0;
};

InitialNorms measure_norms(const ScalarField& omega_L, const ScalarField& u_S);

/// Horizontal small-scale vorticity (d2 uS, -d1 uS).
VectorField small_scale_vorticity(const ScalarField& u_S);

}  // namespace vsl
