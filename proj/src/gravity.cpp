#include "mmsim/gravity.hpp"

#include "mmsim/analysis.hpp"
#include "mmsim/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mmsim {

GravityConvention parse_convention(const std::string& name)
{
    if (name == "coordinate")
        return GravityConvention::coordinate;
    if (name == "normal")
        return GravityConvention::normal;
    throw Error("unknown boundary convention '" + name + "' (expected coordinate or normal)");
}

std::string to_string(GravityConvention c)
{
    return c == GravityConvention::coordinate ? "coordinate" : "normal";
}

namespace {

void check_operator(const GravityScenario& s)
{
    if (!s.op)
        throw Error("gravity scenario has no operator");
    if (s.op->macro_mesh().kind != MacroMesh::Kind::periodic_strip)
        throw Error("the gravity problem lives on the periodic strip");
    if (s.op->mode() != Coupling::Aq)
        throw Error("the gravity problem requires coupling Aq");
    if (!(s.rho0 >= 0.0) || !std::isfinite(s.rho0))
        throw Error("rho0 must be non-negative");
    const MacroMesh& mesh = s.op->macro_mesh();
    for (std::size_t k = 0; k < mesh.size(); ++k)
        if (mesh.tags[k] == BoundaryTag::gammaf && !s.op->macro().essential[k])
            throw Error("gamma_f nodes must carry the essential value (use the mixed boundary condition)");
}

Eigen::VectorXd source_load(const GravityScenario& s)
{
    const CoupledOperator& op = *s.op;
    TwoScaleState h = op.zero_state();
    if (s.source)
        for (std::size_t k = 0; k < op.macro_mesh().size(); ++k)
            h.u(static_cast<Eigen::Index>(k)) = s.source->value(op.macro_mesh().x[k]);
    return op.load(h);
}

Eigen::VectorXd top_lift(const GravityScenario& s)
{
    TwoScaleState e = s.op->zero_state();
    e.u.setConstant(s.top_value());
    return s.op->essential_load(e);
}

void add_to_macro_diagonal(BlockOperator<double>& b, const Eigen::VectorXd& d)
{
    for (Eigen::Index a = 0; a < d.size(); ++a)
        if (d(a) != 0.0)
            b.macro.coeffRef(a, a) += d(a);
}

void pin_top(const GravityScenario& s, TwoScaleState& w)
{
    const CoupledOperator& op = *s.op;
    for (std::size_t k = 0; k < op.macro_mesh().size(); ++k)
        if (op.macro().essential[k]) {
            w.u(static_cast<Eigen::Index>(k)) = s.top_value();
            w.cells.col(static_cast<Eigen::Index>(k)).setConstant(s.top_value());
        }
}

} // namespace

void validate(const GravityScenario& s)
{
    check_operator(s);
    if (!(s.dt > 0.0) || !std::isfinite(s.dt))
        throw Error("dt must be positive");
    if (!(s.theta >= 0.5 && s.theta <= 1.0))
        throw Error("theta must lie in [1/2, 1]");
    if (!(s.t_end >= 0.0))
        throw Error("t_end must be non-negative");
    if (s.newton < 1)
        throw Error("newton must be at least 1");
    const auto n = static_cast<Eigen::Index>(s.op->macro_mesh().size());
    const auto m = static_cast<Eigen::Index>(s.op->cell_mesh().size());
    if (s.w0.u.size() != n || s.w0.cells.rows() != m || s.w0.cells.cols() != n)
        throw Error("initial state does not match the meshes");
}

BoundaryNonlinearity::BoundaryNonlinearity(const CoupledOperator& op, double shift, GravityConvention convention)
    : op_(&op), shift_(shift), sign_(convention == GravityConvention::coordinate ? -1.0 : 1.0)
{
    const MacroMesh& mesh = op.macro_mesh();
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        if (mesh.tags[k] != BoundaryTag::gamma0)
            continue;
        const int a = op.macro().active_index[k];
        if (a < 0)
            throw Error("gamma_0 nodes must be natural (use the mixed boundary condition)");
        nodes_.push_back(k);
        unknowns_.push_back(static_cast<std::size_t>(a));
        measure_.push_back(mesh.boundary_measure[k]);
    }
    if (nodes_.empty())
        throw Error("mesh has no gamma_0 nodes");
}

Eigen::VectorXd BoundaryNonlinearity::evaluate(const TwoScaleState& w) const
{
    Eigen::VectorXd g(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        g(static_cast<Eigen::Index>(i)) = value(w.u(static_cast<Eigen::Index>(nodes_[i])));
    return g;
}

Eigen::VectorXd BoundaryNonlinearity::evaluate_derivative(const TwoScaleState& w, const TwoScaleState& delta) const
{
    Eigen::VectorXd g(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto n = static_cast<Eigen::Index>(nodes_[i]);
        g(static_cast<Eigen::Index>(i)) = derivative(w.u(n)) * delta.u(n);
    }
    return g;
}

Eigen::VectorXd BoundaryNonlinearity::load(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(x.size());
    for (std::size_t i = 0; i < unknowns_.size(); ++i) {
        const auto a = static_cast<Eigen::Index>(unknowns_[i]);
        b(a) = measure_[i] * normal_derivative(x(a));
    }
    return b;
}

Eigen::VectorXd BoundaryNonlinearity::load_derivative(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op_->macro_unknowns()));
    for (std::size_t i = 0; i < unknowns_.size(); ++i) {
        const auto a = static_cast<Eigen::Index>(unknowns_[i]);
        d(a) = measure_[i] * sign_ * derivative(x(a));
    }
    return d;
}

double boundary_lipschitz(const GravityScenario& s, double bound)
{
    check_operator(s);
    const CoupledOperator& op = *s.op;
    const BoundaryNonlinearity g(op, s.shift(), s.convention);
    double ratio = 0.0;
    for (auto k : g.nodes()) {
        const auto a = static_cast<Eigen::Index>(op.macro().active_index[k]);
        ratio = std::max(ratio, op.macro_mesh().boundary_measure[k] / op.mass()(a));
    }
    return 2.0 * bound * ratio;
}

double residual_weak(const GravityScenario& s, const TwoScaleState& w, const TwoScaleState& wdot,
                     const TwoScaleState& test)
{
    check_operator(s);
    const CoupledOperator& op = *s.op;
    const MacroMesh& mesh = op.macro_mesh();
    const auto n = static_cast<Eigen::Index>(mesh.size());
    const auto m = static_cast<Eigen::Index>(op.cell_mesh().size());
    for (const TwoScaleState* st : {&w, &wdot, &test})
        if (st->u.size() != n || st->cells.rows() != m || st->cells.cols() != n)
            throw Error("state does not match the meshes");
    for (std::size_t k = 0; k < mesh.size(); ++k)
        if (op.macro().essential[k] && test.u(static_cast<Eigen::Index>(k)) != 0.0)
            throw Error("test state must vanish on gamma_f");

    double r = weighted_inner(op, test, wdot) + macro_energy(mesh, w.u, test.u);
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        Eigen::VectorXd v = w.cells.col(ik);
        Eigen::VectorXd z = test.cells.col(ik);
        for (auto b : op.cell_mesh().boundary_ids) {
            v(static_cast<Eigen::Index>(b)) = w.u(ik);
            z(static_cast<Eigen::Index>(b)) = test.u(ik);
        }
        r += mesh.volume[k] * op.cells()[k].energy(v, z);
        if (s.source)
            r -= mesh.volume[k] * test.u(ik) * s.source->value(mesh.x[k]);
    }
    const BoundaryNonlinearity g(op, s.shift(), s.convention);
    for (auto k : g.nodes()) {
        const auto ik = static_cast<Eigen::Index>(k);
        r -= mesh.boundary_measure[k] * test.u(ik) * g.normal_derivative(w.u(ik));
    }
    return r;
}

GravityStepper::GravityStepper(const GravityScenario& s)
    : s_(&s), boundary_((validate(s), *s.op), s.shift(), s.convention),
      explicit_(s.op->system(1.0, -(1.0 - s.theta) * s.dt)), implicit_(s.op->system(1.0, s.theta * s.dt)),
      fixed_(s.dt * (source_load(s) - top_lift(s)))
{
}

TwoScaleState GravityStepper::step(const TwoScaleState& w, double t) const
{
    const GravityScenario& s = *s_;
    const double dt = s.dt;
    const double th = s.theta;
    const Eigen::VectorXd x = s.op->gather(w);
    const Eigen::VectorXd rhs = explicit_.apply(x) + fixed_ + (1.0 - th) * dt * boundary_.load(x);
    Eigen::VectorXd y = x;
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 0; it < s.newton; ++it) {
        const Eigen::VectorXd r = implicit_.apply(y) - th * dt * boundary_.load(y) - rhs;
        BlockOperator<double> jac = implicit_;
        add_to_macro_diagonal(jac, -th * dt * boundary_.load_derivative(y));
        Eigen::VectorXd delta;
        try {
            delta = BlockFactorization<double>(jac).solve(-r);
        } catch (const Error& e) {
            throw SolveError(t + dt, e.what());
        }
        if (!delta.allFinite())
            throw SolveError(t + dt, "non-finite Newton correction");
        const double size = delta.norm();
        if (it > 0 && size > previous) {
            std::ostringstream os;
            os << "Newton correction diverged (|dx| " << previous << " -> " << size << "), step rejected";
            throw SolveError(t + dt, os.str());
        }
        y += delta;
        previous = size;
        if (size <= 1e-15 * (1.0 + y.norm()))
            break;
    }
    return s.op->scatter(y, s.top_value());
}

TwoScaleState step_gravity(const GravityScenario& s, const TwoScaleState& w, double t)
{
    return GravityStepper(s).step(w, t);
}

GravityRun run_gravity(const GravityScenario& s, const StepObserver& observer)
{
    validate(s);
    const CoupledOperator& op = *s.op;
    TwoScaleState w = s.w0;
    pin_top(s, w);
    check_matching(op, w);

    const GravityStepper stepper(s);
    GravityRun out;
    for (auto k : stepper.boundary().nodes())
        out.trace_x.push_back(op.macro_mesh().x[k]);
    auto trace = [&](const TwoScaleState& st) {
        std::vector<double> row;
        for (auto k : stepper.boundary().nodes())
            row.push_back(st.u(static_cast<Eigen::Index>(k)) + s.shift());
        out.trace.push_back(std::move(row));
    };
    Trajectory& tr = out.trajectory;
    record(tr, op, 0.0, w);
    trace(w);
    if (s.cadence > 0)
        tr.snapshots.emplace_back(0, w);
    if (observer)
        observer(0, 0.0, w);

    const std::size_t n = step_count(s.t_end, s.dt);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t1 = s.dt * static_cast<double>(k);
        try {
            w = stepper.step(w, s.dt * static_cast<double>(k - 1));
        } catch (const SolveError& e) {
            halt(tr, s.cadence, k - 1, w, e.what());
            break;
        } catch (const Error& e) {
            halt(tr, s.cadence, k - 1, w, SolveError(t1, e.what()).what());
            break;
        }
        record(tr, op, t1, w);
        trace(w);
        if (observer)
            observer(k, t1, w);
        const double sup = w.u.cwiseAbs().maxCoeff();
        const bool escaped = !(sup <= s.guard);
        if (s.cadence > 0 && (k % s.cadence == 0 || k == n || escaped))
            tr.snapshots.emplace_back(k, w);
        if (escaped) {
            std::ostringstream os;
            os.precision(17);
            os << "blow-up guard: max |u| = " << sup << " exceeds " << s.guard << " at t = " << t1;
            halt(tr, s.cadence, k, w, os.str());
            break;
        }
    }
    tr.final_state = w;
    return out;
}

TwoScaleState gravity_rest_state(const GravityScenario& s)
{
    TwoScaleState w = s.op->zero_state();
    w.u.setConstant(s.rho0 - s.shift());
    w.cells.setConstant(s.rho0 - s.shift());
    return w;
}

SteadyResult steady_newton(const GravityScenario& s, const std::optional<TwoScaleState>& guess, double tol,
                           int max_iter)
{
    check_operator(s);
    const CoupledOperator& op = *s.op;
    const BoundaryNonlinearity g(op, s.shift(), s.convention);
    const BlockOperator<double> k = op.system(0.0, 1.0);
    const Eigen::VectorXd fixed = top_lift(s) - source_load(s);
    TwoScaleState w0 = guess ? *guess : gravity_rest_state(s);
    pin_top(s, w0);
    Eigen::VectorXd x = op.gather(w0);

    SteadyResult out;
    for (int it = 0;; ++it) {
        const Eigen::VectorXd r = k.apply(x) + fixed - g.load(x);
        const double res = r.cwiseQuotient(op.mass()).cwiseAbs().maxCoeff();
        out.history.push_back(res);
        if (!std::isfinite(res))
            throw Error("steady Newton produced non-finite values");
        if (res <= tol) {
            out.iterations = it;
            out.residual = res;
            break;
        }
        if (it >= max_iter) {
            std::ostringstream os;
            os << "steady Newton did not converge in " << max_iter << " iterations (residual " << res << ")";
            throw Error(os.str());
        }
        BlockOperator<double> jac = k;
        add_to_macro_diagonal(jac, -g.load_derivative(x));
        x -= BlockFactorization<double>(jac).solve(r);
    }
    out.w = op.scatter(x, s.top_value());
    return out;
}

} // namespace mmsim
