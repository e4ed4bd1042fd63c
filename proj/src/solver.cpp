#include "mmsim/solver.hpp"

#include "mmsim/analysis.hpp"
#include "mmsim/error.hpp"

#include <cmath>
#include <sstream>

namespace mmsim {

MacroForcing make_forcing(const MacroMesh& mesh, const Reaction& reaction,
                          const std::optional<Coefficient>& source)
{
    const bool has_source = source && !(source->kind() == Coefficient::Kind::constant && source->value(0.0) == 0.0);
    if (reaction.is_zero() && !has_source)
        return {};
    Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.size()));
    if (has_source)
        for (std::size_t k = 0; k < mesh.size(); ++k)
            h(static_cast<Eigen::Index>(k)) = source->value(mesh.x[k]);
    return [reaction, h](double, const Eigen::VectorXd& u) {
        Eigen::VectorXd f = h;
        if (!reaction.is_zero())
            for (Eigen::Index k = 0; k < u.size(); ++k)
                f(k) += reaction.value(u(k));
        return f;
    };
}

namespace {

TwoScaleState essential_state(const CoupledOperator& op, double value)
{
    TwoScaleState w = op.zero_state();
    w.u.setConstant(value);
    return w;
}

} // namespace

ThetaStepper::ThetaStepper(const CoupledOperator& op, double dt, double theta, double essential_value)
    : op_(&op), dt_(dt), theta_(theta), essential_value_(essential_value),
      explicit_(op.system(1.0, -(1.0 - theta) * dt)), implicit_(op.system(1.0, theta * dt)),
      lift_(op.essential_load(essential_state(op, essential_value)))
{
}

Eigen::VectorXd ThetaStepper::step(const Eigen::VectorXd& x, const Eigen::VectorXd& extra) const
{
    Eigen::VectorXd b = explicit_.apply(x) - dt_ * lift_;
    if (extra.size() > 0)
        b += extra;
    return implicit_.solve(b);
}

TwoScaleState ThetaStepper::step(const TwoScaleState& w, double t, const MacroForcing& f) const
{
    Eigen::VectorXd extra;
    if (f) {
        TwoScaleState load = op_->zero_state();
        load.u = f(t, w.u);
        extra = dt_ * op_->load(load);
    }
    const Eigen::VectorXd x = step(op_->gather(w), extra);
    if (!x.allFinite())
        throw SolveError(t + dt_, "non-finite values after the step");
    return op_->scatter(x, essential_value_);
}

TwoScaleState step_theta(const CoupledOperator& op, const TwoScaleState& w, double dt, double theta,
                         const MacroForcing& f, double t)
{
    if (!(dt > 0.0))
        throw Error("dt must be positive");
    if (!(theta >= 0.5 && theta <= 1.0))
        throw Error("theta must lie in [1/2, 1]");
    return ThetaStepper(op, dt, theta).step(w, t, f);
}

std::size_t step_count(double t_end, double dt)
{
    const double n = t_end / dt;
    return static_cast<std::size_t>(std::ceil(n - 1e-9 * std::max(1.0, n)));
}

void validate(const Scenario& s)
{
    if (!s.op)
        throw Error("scenario has no operator");
    if (!(s.dt > 0.0) || !std::isfinite(s.dt))
        throw Error("dt must be positive");
    if (!(s.theta >= 0.5 && s.theta <= 1.0))
        throw Error("theta must lie in [1/2, 1]");
    if (!(s.t_end >= 0.0) || !std::isfinite(s.t_end))
        throw Error("t_end must be non-negative");
    if (!(s.guard > 0.0))
        throw Error("guard must be positive");
    const auto n = static_cast<Eigen::Index>(s.op->macro_mesh().size());
    const auto m = static_cast<Eigen::Index>(s.op->cell_mesh().size());
    if (s.w0.u.size() != n || s.w0.cells.rows() != m || s.w0.cells.cols() != n)
        throw Error("initial state does not match the meshes");
}

void check_matching(const CoupledOperator& op, const TwoScaleState& w)
{
    const bool detached = op.mode() == Coupling::detached;
    for (std::size_t k = 0; k < op.macro_mesh().size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        const double want = detached && !op.macro().essential[k] ? 0.0 : w.u(ik);
        for (auto b : op.cell_mesh().boundary_ids)
            if (w.cells(static_cast<Eigen::Index>(b), ik) != want) {
                std::ostringstream os;
                os << "state violates the matching condition at macro node " << k;
                throw Error(os.str());
            }
    }
}

void record(Trajectory& tr, const CoupledOperator& op, double t, const TwoScaleState& w)
{
    const MacroMesh& mesh = op.macro_mesh();
    double l2 = 0.0;
    for (std::size_t k = 0; k < mesh.size(); ++k)
        l2 += mesh.volume[k] * w.u(static_cast<Eigen::Index>(k)) * w.u(static_cast<Eigen::Index>(k));
    tr.t.push_back(t);
    tr.norm_u.push_back(std::sqrt(l2));
    tr.norm_yg.push_back(yg_norm(op, w));
    tr.mass.push_back(mass_S(op, w));
    tr.min_u.push_back(w.u.minCoeff());
    tr.max_u.push_back(w.u.maxCoeff());
}

void halt(Trajectory& tr, std::size_t cadence, std::size_t step, const TwoScaleState& w, const std::string& why)
{
    tr.halted = true;
    tr.diagnostic = why;
    if (cadence > 0 && (tr.snapshots.empty() || tr.snapshots.back().first != step))
        tr.snapshots.emplace_back(step, w);
}

Trajectory run(const Scenario& s, const StepObserver& observer)
{
    validate(s);
    const CoupledOperator& op = *s.op;
    TwoScaleState w = s.w0;
    for (std::size_t k = 0; k < op.macro_mesh().size(); ++k)
        if (op.macro().essential[k]) {
            w.u(static_cast<Eigen::Index>(k)) = s.essential_value;
            w.cells.col(static_cast<Eigen::Index>(k)).setConstant(s.essential_value);
        }
    check_matching(op, w);

    Trajectory tr;
    record(tr, op, 0.0, w);
    if (s.cadence > 0)
        tr.snapshots.emplace_back(0, w);
    if (observer)
        observer(0, 0.0, w);

    const std::size_t n = step_count(s.t_end, s.dt);
    const ThetaStepper stepper(op, s.dt, s.theta, s.essential_value);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t0 = s.dt * static_cast<double>(k - 1);
        const double t1 = s.dt * static_cast<double>(k);
        try {
            w = stepper.step(w, t0, s.forcing);
        } catch (const SolveError& e) {
            halt(tr, s.cadence, k - 1, w, e.what());
            break;
        } catch (const Error& e) {
            halt(tr, s.cadence, k - 1, w, SolveError(t1, e.what()).what());
            break;
        }
        record(tr, op, t1, w);
        if (observer)
            observer(k, t1, w);
        const bool last = k == n;
        const double sup = w.u.cwiseAbs().maxCoeff();
        const bool escaped = !(sup <= s.guard);
        if (s.cadence > 0 && (k % s.cadence == 0 || last || escaped))
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
    return tr;
}

Resolvent::Resolvent(const CoupledOperator& op, std::complex<double> lambda)
    : op_(&op), lambda_(lambda), two_stage_(op.mode() == Coupling::A)
{
    using C = std::complex<double>;
    const BlockOperator<C> a = op.blocks().cast<C>();
    try {
        if (two_stage_) {
            Eigen::SparseMatrix<C> m = a.macro;
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                m.coeffRef(i, i) += lambda;
            m.makeCompressed();
            macro_.analyzePattern(m);
            macro_.factorize(m);
            if (macro_.info() != Eigen::Success)
                throw Error("macro resolvent factorization failed");
            cells_.resize(a.cells.size());
            for (std::size_t i = 0; i < a.cells.size(); ++i) {
                Tridiagonal<C> t = a.cells[i];
                for (auto& d : t.diag)
                    d += lambda;
                cells_[i] = TridiagonalLU<C>(t);
            }
        } else {
            BlockOperator<C> s = a;
            for (Eigen::Index i = 0; i < s.macro.rows(); ++i)
                s.macro.coeffRef(i, i) += lambda;
            s.macro.makeCompressed();
            for (auto& t : s.cells)
                for (auto& d : t.diag)
                    d += lambda;
            block_ = std::make_unique<BlockFactorization<C>>(s);
        }
    } catch (const Error& e) {
        std::ostringstream os;
        os << "singular shift lambda = " << lambda << " (" << e.what() << ")";
        throw Error(os.str());
    }
}

Eigen::VectorXcd Resolvent::solve(const Eigen::VectorXcd& rhs) const
{
    if (rhs.size() != static_cast<Eigen::Index>(op_->size()))
        throw Error("resolvent right-hand side has the wrong size");
    if (!two_stage_)
        return block_->solve(rhs);
    const auto na = static_cast<Eigen::Index>(op_->macro_unknowns());
    const auto nc = static_cast<Eigen::Index>(op_->cell_unknowns());
    Eigen::VectorXcd x(rhs.size());
    // u = R(λ, A_1) f
    x.head(na) = macro_.solve(rhs.head(na));
    // λ(U - Ru) + B(U - Ru) = g - λRu, then U = (U - Ru) + Ru
    parallel_for(static_cast<std::size_t>(na), [&](std::size_t a) {
        const auto ia = static_cast<Eigen::Index>(a);
        const std::complex<double> u = x(ia);
        auto seg = x.segment(na + ia * nc, nc);
        seg = rhs.segment(na + ia * nc, nc).array() - lambda_ * u;
        cells_[a].solve_in_place(seg);
        seg.array() += u;
    });
    return x;
}

Eigen::VectorXcd apply_resolvent(const CoupledOperator& op, std::complex<double> lambda,
                                 const Eigen::VectorXcd& rhs)
{
    return Resolvent(op, lambda).solve(rhs);
}

TwoScaleState apply_resolvent(const CoupledOperator& op, double lambda, const TwoScaleState& rhs)
{
    const Eigen::VectorXcd x = apply_resolvent(op, {lambda, 0.0}, op.gather(rhs).cast<std::complex<double>>());
    return op.scatter(x.real(), 0.0);
}

} // namespace mmsim
