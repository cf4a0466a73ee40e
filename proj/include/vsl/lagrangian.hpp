#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vsl/evolve.hpp"
#include "vsl/ladder.hpp"
#include "vsl/velgrad.hpp"

namespace vsl {

/// Flow-map positions eta(t, x) and deformations D eta(t, x) for a fixed set of seeds.
struct TracerEnsemble {
    std::vector<Point2> seeds;
    std::vector<Point2> positions;     // reduced to the fundamental domain
    std::vector<Matrix2> deformations;
    double time = 0.0;

    static TracerEnsemble at_seeds(std::vector<Point2> seeds, double time = 0.0);
    std::size_t size() const noexcept { return seeds.size(); }
};

double determinant(const Matrix2& m) noexcept;

/// 3x3 lattice of spacing r'/2 centred at the origin plus the axis points (0, +-r') pulled
/// just inside D'.
std::vector<Point2> default_seeds(const ParameterLadder& ladder);

struct VelocitySample {
    std::array<double, 2> u{};
    Matrix2 grad{};
};
using Sampler = std::function<VelocitySample(Point2)>;

/// Supplies the velocity at the four RK4 stage times t, t+dt/2, t+dt/2, t+dt of each step.
class VelocityProvider {
public:
    virtual ~VelocityProvider() = default;
    /// Samplers for the step [t, t+dt]. Steps are requested in order; throws StageUnavailable
    /// when the provider cannot serve the requested step.
    virtual std::array<Sampler, 4> stages(double t, double dt) = 0;
};

/// Closed-form velocity u(t, x) with its gradient.
class AnalyticProvider final : public VelocityProvider {
public:
    explicit AnalyticProvider(std::function<VelocitySample(double, Point2)> field) : field_(std::move(field)) {}
    std::array<Sampler, 4> stages(double t, double dt) override;

private:
    std::function<VelocitySample(double, Point2)> field_;
};

/// Bicubic samples of u_L and grad u_L built from one vorticity spectrum.
Sampler grid_sampler(const Spectrum& omega);

/// A single snapshot used at every stage.
class FrozenProvider final : public VelocityProvider {
public:
    explicit FrozenProvider(const FlowState& state);
    std::array<Sampler, 4> stages(double t, double dt) override;

private:
    Sampler sampler_;
};

/// Steps the flow solver alongside the tracers, handing out the solver's own stage fields.
class SolverProvider final : public VelocityProvider {
public:
    SolverProvider(FlowState initial, StepConfig config);
    std::array<Sampler, 4> stages(double t, double dt) override;
    const FlowState& state() const noexcept { return state_; }

private:
    FlowState state_;
    StepConfig config_;
};

/// Invoked after every accepted step with the advanced ensemble.
using EnsembleObserver = std::function<void(const TracerEnsemble&)>;

/// RK4 for d eta/dt = u(t, eta), d(D eta)/dt = grad u(t, eta) D eta. Steps of size dt with the
/// last one shortened to land on t_end.
TracerEnsemble advance(TracerEnsemble ensemble, VelocityProvider& provider, double t_end, double dt,
                       const EnsembleObserver& observer = {});

/// Shortest periodic distance between two points.
double torus_distance(const TorusGrid& grid, Point2 a, Point2 b);

/// (d/L)^(1 + c t ||w0||) <= |eta(x) - eta(x')| / L <= (d/L)^(1 - c t ||w0||), d = |x - x'|.
std::vector<BoundCheck> check_yudovich(const TracerEnsemble& ensemble, std::span<const std::pair<int, int>> pairs,
                                       const ParameterLadder& ladder, const TorusGrid& grid, double c = 2.0);

struct LldConfig {
    double epsilon = 0.3;          // slack added to C delta in the stretching envelopes
    double C_delta = 1.0;
    double offdiag_limit = 0.3;    // (|d1 eta2| + |d2 eta1|) / d1 eta1 <= this
};

/// Per seed: ln d1eta1 within (2/pi)||w0|| t (1 -+ (eps + C delta)) ln(1/ell_bar), and the
/// off-diagonal ratio. Throws SeedOutsideRegion for seeds outside D'.
std::vector<BoundCheck> check_lld(const TracerEnsemble& ensemble, const ParameterLadder& ladder,
                                  const LldConfig& config = {});

/// max over seeds of |omega_S(t, eta) - D eta omega_S(0, x)| / ||omega_S(0)||_inf with
/// trigonometric interpolation. Throws ViscousRun for nu > 0.
double cauchy_check(const FlowState& state0, const FlowState& state_t, const TracerEnsemble& ensemble);

}  // namespace vsl
