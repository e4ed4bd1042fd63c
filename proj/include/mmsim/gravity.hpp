#pragma once

// Periodic strip with the nonlinear outflow condition on Γ₀ and a fixed
// density ρ₀ on the graph boundary Γ_f, in the original variable u (P) or
// the shifted variable v = u - ρ₀ (P').

#include "mmsim/operators.hpp"
#include "mmsim/solver.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mmsim {

/// coordinate: ∂₂u = G(u) with ∂₂ the +y derivative (the outward normal
/// derivative on Γ₀ is then -G). normal: ∂_ν u = G on Γ₀.
enum class GravityConvention { coordinate, normal };

GravityConvention parse_convention(const std::string& name);
std::string to_string(GravityConvention c);

struct GravityScenario {
    /// Strip operator with mixed macro boundary (Γ₀ natural, Γ_f essential).
    std::shared_ptr<const CoupledOperator> op;
    double rho0 = 0.0;
    /// false: unknown is u, Γ_f value ρ₀. true: unknown is v = u - ρ₀, Γ_f value 0.
    bool shifted = false;
    std::optional<Coefficient> source; // h(x)
    GravityConvention convention = GravityConvention::coordinate;
    double theta = 0.5;
    double dt = 0.0;
    double t_end = 0.0;
    int newton = 1;
    double guard = 1e6;
    std::size_t cadence = 0;
    TwoScaleState w0;

    double shift() const { return shifted ? rho0 : 0.0; }
    double top_value() const { return shifted ? 0.0 : rho0; }
};

void validate(const GravityScenario& s);

/// G(z) = -(z + shift)² on the Γ₀ nodes and its derivative.
class BoundaryNonlinearity {
public:
    BoundaryNonlinearity(const CoupledOperator& op, double shift, GravityConvention convention);

    double value(double z) const { return -(z + shift_) * (z + shift_); }
    double derivative(double z) const { return -2.0 * (z + shift_); }
    /// Outward normal derivative ∂_ν u implied by the boundary condition.
    double normal_derivative(double z) const { return sign_ * value(z); }

    /// Γ₀ macro node ids, ordered by x.
    const std::vector<std::size_t>& nodes() const { return nodes_; }
    /// G(w) and ∂G(w)δ on the Γ₀ nodes.
    Eigen::VectorXd evaluate(const TwoScaleState& w) const;
    Eigen::VectorXd evaluate_derivative(const TwoScaleState& w, const TwoScaleState& delta) const;

    /// Boundary load B(x)_a = μ_a ∂_ν u on the unknowns (zero off Γ₀).
    Eigen::VectorXd load(const Eigen::VectorXd& x) const;
    /// Diagonal of B'(x) over the macro unknowns.
    Eigen::VectorXd load_derivative(const Eigen::VectorXd& x) const;

private:
    const CoupledOperator* op_;
    double shift_;
    double sign_;
    std::vector<std::size_t> nodes_;
    std::vector<std::size_t> unknowns_;
    std::vector<double> measure_;
};

/// Lipschitz constant of w ↦ M_g^{-1} B(w) in the Y_g norm on states with
/// |u + shift| <= bound on Γ₀: 2 bound max_a μ_a / M_aa. It grows like 1/Δη,
/// the discrete trace constant.
double boundary_lipschitz(const GravityScenario& s, double bound);

/// Weak residual ⟨φ, ẇ⟩_{Y_g} + a(w, φ) - ⟨φ_u, h⟩ - Σ_{Γ₀} μ φ ∂_ν u, with a
/// the discrete gradient form summed directly over macro and cell faces.
/// φ must vanish on Γ_f.
double residual_weak(const GravityScenario& s, const TwoScaleState& w, const TwoScaleState& wdot,
                     const TwoScaleState& test);

/// θ-step with the Γ₀ term linearized around the previous Newton iterate;
/// the default single iteration is the linearly implicit step.
class GravityStepper {
public:
    explicit GravityStepper(const GravityScenario& s);

    TwoScaleState step(const TwoScaleState& w, double t) const;
    const BoundaryNonlinearity& boundary() const { return boundary_; }

private:
    const GravityScenario* s_;
    BoundaryNonlinearity boundary_;
    BlockOperator<double> explicit_;
    BlockOperator<double> implicit_;
    Eigen::VectorXd fixed_; // -dt lift + dt load(h)
};

TwoScaleState step_gravity(const GravityScenario& s, const TwoScaleState& w, double t = 0.0);

struct GravityRun {
    Trajectory trajectory;            // in the scenario variable
    std::vector<double> trace_x;      // x of the Γ₀ nodes
    std::vector<std::vector<double>> trace; // physical u on Γ₀ per recorded row
};

GravityRun run_gravity(const GravityScenario& s, const StepObserver& observer = {});

struct SteadyResult {
    TwoScaleState w;
    int iterations = 0;
    double residual = 0.0; // max_i |r_i| / M_ii
    std::vector<double> history;
};

/// Full Newton on K x + lift - load(h) - B(x) = 0 starting from u ≡ ρ₀
/// (or `guess`). Converged when the residual is ≤ tol.
SteadyResult steady_newton(const GravityScenario& s, const std::optional<TwoScaleState>& guess = {},
                           double tol = 1e-11, int max_iter = 50);

/// u ≡ ρ₀ with matching cells, expressed in the scenario variable.
TwoScaleState gravity_rest_state(const GravityScenario& s);

} // namespace mmsim
