#pragma once

// θ-scheme time integration of ∂_t w + A w = f(t, u) and the coupled resolvent.

#include "mmsim/block_system.hpp"
#include "mmsim/operators.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mmsim {

/// Macro right-hand side f(t, u) evaluated on every macro node.
using MacroForcing = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& u)>;

/// f(t, u)(x) = reaction(u(x)) + source(x). Empty when both vanish.
MacroForcing make_forcing(const MacroMesh& mesh, const Reaction& reaction,
                          const std::optional<Coefficient>& source);

/// One θ-step
///   (M_g + θ dt K) w⁺ = (M_g - (1-θ) dt K) w + dt P^T M (f, 0)
/// with the forcing taken explicitly at (t, u) and essential macro values held
/// at `essential_value`. The left-hand side is factored once.
class ThetaStepper {
public:
    ThetaStepper(const CoupledOperator& op, double dt, double theta, double essential_value = 0.0);

    TwoScaleState step(const TwoScaleState& w, double t, const MacroForcing& f = {}) const;
    /// Step on the unknown vector with an extra right-hand side (already in load form).
    Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& extra) const;

    const CoupledOperator& op() const { return *op_; }
    double dt() const { return dt_; }
    double theta() const { return theta_; }
    double essential_value() const { return essential_value_; }

private:
    const CoupledOperator* op_;
    double dt_;
    double theta_;
    double essential_value_;
    BlockOperator<double> explicit_;
    BlockFactorization<double> implicit_;
    Eigen::VectorXd lift_;
};

TwoScaleState step_theta(const CoupledOperator& op, const TwoScaleState& w, double dt, double theta,
                         const MacroForcing& f = {}, double t = 0.0);

struct Scenario {
    std::shared_ptr<const CoupledOperator> op;
    double theta = 0.5;
    double dt = 0.0;
    double t_end = 0.0;
    TwoScaleState w0;
    MacroForcing forcing;
    double essential_value = 0.0;
    /// Blow-up guard on max |u|.
    double guard = 1e6;
    /// Snapshot every `cadence` steps (0: none). Step 0 and the last step are always kept.
    std::size_t cadence = 0;
};

/// Row k describes the state after k steps (row 0 is the initial state).
struct Trajectory {
    std::vector<double> t;
    std::vector<double> norm_u;  // macro L2 norm
    std::vector<double> norm_yg; // Y_g norm of w
    std::vector<double> mass;    // S(u, U)
    std::vector<double> min_u;
    std::vector<double> max_u;
    std::vector<std::pair<std::size_t, TwoScaleState>> snapshots;
    TwoScaleState final_state;
    bool halted = false;
    std::string diagnostic;

    std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
};

/// Called with (step index, time, state) for the initial state (index 0) and
/// after every accepted step.
using StepObserver = std::function<void(std::size_t, double, const TwoScaleState&)>;

/// Number of steps for [0, t_end]: ceil(t_end/dt) with a small tolerance.
std::size_t step_count(double t_end, double dt);

void validate(const Scenario& s);

/// Throws unless every cell boundary value equals u at its node (cells are
/// zero on the boundary instead in detached mode).
void check_matching(const CoupledOperator& op, const TwoScaleState& w);

/// Advances from w0 until t_end. A failed step or an escape past the guard
/// ends the run early with `halted` set and the reason in `diagnostic`.
Trajectory run(const Scenario& s, const StepObserver& observer = {});

/// Appends the row for state w at time t.
void record(Trajectory& tr, const CoupledOperator& op, double t, const TwoScaleState& w);
/// Marks the run halted after `step` accepted steps and keeps w as the last snapshot.
void halt(Trajectory& tr, std::size_t cadence, std::size_t step, const TwoScaleState& w, const std::string& why);

/// Factored (λ + A)^{-1}. Mode A uses the two-stage structure: the macro
/// resolvent first, then one shifted cell solve per node for U - Ru with
/// right-hand side g - λRu. The exchange modes use block elimination.
class Resolvent {
public:
    Resolvent(const CoupledOperator& op, std::complex<double> lambda);

    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;
    std::complex<double> lambda() const { return lambda_; }

private:
    const CoupledOperator* op_;
    std::complex<double> lambda_;
    bool two_stage_;
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> macro_;
    std::vector<TridiagonalLU<std::complex<double>>> cells_;
    std::unique_ptr<BlockFactorization<std::complex<double>>> block_;
};

Eigen::VectorXcd apply_resolvent(const CoupledOperator& op, std::complex<double> lambda,
                                 const Eigen::VectorXcd& rhs);
/// Real shift on states: rhs is read at the unknowns, the result has zero
/// essential values and matching cells.
TwoScaleState apply_resolvent(const CoupledOperator& op, double lambda, const TwoScaleState& rhs);

} // namespace mmsim
