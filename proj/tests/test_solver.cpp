#include "mmsim/analysis.hpp"
#include "mmsim/error.hpp"
#include "mmsim/parallel.hpp"
#include "mmsim/solver.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mmsim;

namespace {

const CellMap general = CellMap::general_1d(Coefficient::affine(1.0, 0.2), Coefficient::constant(0.1));

double general_dpsi(double x, double y) { return 1.0 + 0.2 * x + 0.2 * y; }

std::shared_ptr<const CoupledOperator> desk(Coupling mode, std::size_t n = 5, std::size_t m = 5)
{
    const bool dirichlet = mode != Coupling::AN;
    const auto tag = dirichlet ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    return std::make_shared<const CoupledOperator>(
        assemble_coupled(build_interval_mesh(1.0, n, tag, tag), dirichlet ? MacroBc::dirichlet : MacroBc::neumann,
                         build_cell_mesh(1, CellMesh::Mode::interval, m), general, mode));
}

TwoScaleState bump(const CoupledOperator& op)
{
    auto w = op.zero_state();
    const auto& mesh = op.macro_mesh();
    for (std::size_t n = 0; n < mesh.size(); ++n)
        if (op.macro().active_index[n] >= 0)
            w.u(static_cast<Eigen::Index>(n)) = std::sin(M_PI * mesh.x[n]) + 0.3 * mesh.x[n];
    w.enforce_matching(op.cell_mesh());
    for (Eigen::Index c = 0; c < w.cells.cols(); ++c)
        for (std::size_t j : op.cell_mesh().interior_ids)
            w.cells(static_cast<Eigen::Index>(j), c) += 0.5 * (1.0 - std::pow(op.cell_mesh().nodes[j], 2));
    return w;
}

} // namespace

TEST_CASE("step counts")
{
    CHECK(step_count(1.0, 0.1) == 10);
    CHECK(step_count(1.0, 0.3) == 4);
    CHECK(step_count(0.0, 0.1) == 0);
    CHECK(step_count(5.0, 0.01) == 500);
}

TEST_CASE("zero state stays at rest")
{
    const auto op = desk(Coupling::Aq);
    const auto w = step_theta(*op, op->zero_state(), 0.1, 0.5);
    CHECK(w.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.cells.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constants are steady under the Neumann operator")
{
    const auto op = desk(Coupling::AN);
    auto c = op->zero_state();
    c.u.setConstant(1.25);
    c.cells.setConstant(1.25);
    const auto w = step_theta(*op, c, 0.1, 0.5);
    CHECK((w.u.array() - 1.25).abs().maxCoeff() < 1e-14);
    CHECK((w.cells.array() - 1.25).abs().maxCoeff() < 1e-14);
}

TEST_CASE("one theta step matches the dense solve")
{
    for (auto mode : {Coupling::A, Coupling::Aq, Coupling::AN, Coupling::detached}) {
        const auto op = desk(mode);
        const bool dirichlet = mode != Coupling::AN;
        const auto ref = oracle::coupled_interval(1.0, 5, dirichlet, 5, general_dpsi, mode);
        const auto w = bump(*op);
        for (double theta : {0.5, 1.0}) {
            CAPTURE(to_string(mode));
            CAPTURE(theta);
            const auto next = step_theta(*op, w, 0.05, theta);
            const Eigen::VectorXd x = oracle::theta_step(ref, op->gather(w), 0.05, theta);
            CHECK((op->gather(next) - x).cwiseAbs().maxCoeff() < 1e-11);
        }
    }
}

TEST_CASE("stepper with a source and a reaction")
{
    const auto op = desk(Coupling::Aq);
    const auto f = make_forcing(op->macro_mesh(), Reaction::parse("linear(0.5)"), Coefficient::constant(1.0));
    REQUIRE(f);
    CHECK_FALSE(make_forcing(op->macro_mesh(), Reaction{}, Coefficient::constant(0.0)));
    const auto ref = oracle::coupled_interval(1.0, 5, true, 5, general_dpsi, Coupling::Aq);
    const auto w = bump(*op);
    const double dt = 0.02;
    const auto next = step_theta(*op, w, dt, 1.0, f, 0.0);
    // Galerkin load of (0.5 u + 1, 0): W (0.5 u + 1) on macro rows, cells zero
    Eigen::VectorXd load = Eigen::VectorXd::Zero(ref.m.size());
    for (Eigen::Index a = 0; a < 3; ++a)
        load(a) = 0.25 * (0.5 * w.u(a + 1) + 1.0);
    const Eigen::MatrixXd lhs = Eigen::MatrixXd(ref.m.asDiagonal()) + dt * ref.k;
    const Eigen::VectorXd x = lhs.partialPivLu().solve(ref.m.cwiseProduct(op->gather(w)) + dt * load);
    CHECK((op->gather(next) - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Dirichlet run decays in the weighted norm")
{
    const auto op = desk(Coupling::Aq, 9, 9);
    Scenario s;
    s.op = op;
    s.dt = 0.01;
    s.t_end = 0.5;
    s.w0 = bump(*op);
    const auto tr = run(s);
    REQUIRE(tr.steps() == 50);
    CHECK_FALSE(tr.halted);
    for (std::size_t k = 1; k < tr.norm_yg.size(); ++k)
        CHECK(tr.norm_yg[k] < tr.norm_yg[k - 1]);
}

TEST_CASE("Neumann run conserves the total mass")
{
    const auto op = desk(Coupling::AN, 9, 9);
    Scenario s;
    s.op = op;
    s.dt = 0.01;
    s.t_end = 1.0;
    s.w0 = bump(*op);
    s.cadence = 25;
    const auto tr = run(s);
    for (double m : tr.mass)
        CHECK(std::abs(m - tr.mass[0]) <= 1e-10 * std::abs(tr.mass[0]));
    CHECK(tr.snapshots.size() == 5);
    CHECK(tr.snapshots.back().first == 100);
    CHECK(mass_S(*op, tr.final_state) == doctest::Approx(tr.mass.back()).epsilon(1e-15));
}

TEST_CASE("blow-up guard halts the run")
{
    const auto op = desk(Coupling::Aq, 9, 5);
    Scenario s;
    s.op = op;
    s.dt = 0.01;
    s.t_end = 10.0;
    s.w0 = bump(*op);
    s.w0.u *= 20.0;
    s.w0.enforce_matching(op->cell_mesh());
    s.forcing = make_forcing(op->macro_mesh(), Reaction::parse("quadratic(5)"), std::nullopt);
    s.guard = 100.0;
    const auto tr = run(s);
    CHECK(tr.halted);
    CHECK_FALSE(tr.diagnostic.empty());
    CHECK(tr.steps() < 1000);
}

TEST_CASE("scenario validation")
{
    const auto op = desk(Coupling::Aq);
    Scenario s;
    s.op = op;
    s.dt = 0.1;
    s.t_end = 1.0;
    s.w0 = op->zero_state();
    CHECK_NOTHROW(validate(s));
    s.theta = 0.3;
    CHECK_THROWS_AS(validate(s), Error);
    s.theta = 0.5;
    s.dt = -1.0;
    CHECK_THROWS_AS(validate(s), Error);
    s.dt = 0.1;
    s.w0.cells(0, 2) = 1.0;
    CHECK_THROWS_AS(run(s), Error);
}

TEST_CASE("resolvent against the dense solve")
{
    for (auto mode : {Coupling::A, Coupling::Aq, Coupling::detached}) {
        const auto op = desk(mode);
        const auto ref = oracle::coupled_interval(1.0, 5, true, 5, general_dpsi, mode);
        std::mt19937_64 rng(7);
        std::normal_distribution<double> d;
        Eigen::VectorXcd rhs(ref.m.size());
        for (Eigen::Index i = 0; i < rhs.size(); ++i)
            rhs(i) = {d(rng), d(rng)};
        for (std::complex<double> lambda : {std::complex<double>{0.0, 0.0}, {1.0, 0.0}, {10.0, 0.0}, {-2.0, 3.0}}) {
            CAPTURE(to_string(mode));
            CAPTURE(lambda);
            const Eigen::VectorXcd x = apply_resolvent(*op, lambda, rhs);
            const Eigen::VectorXcd y = oracle::resolvent(ref, lambda, rhs);
            CHECK((x - y).cwiseAbs().maxCoeff() < 1e-11 * (1.0 + y.cwiseAbs().maxCoeff()));
        }
        CHECK(apply_resolvent(*op, 1.0, op->zero_state()).u.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("real resolvent on states inverts the operator")
{
    const auto op = desk(Coupling::Aq, 7, 7);
    const auto w = bump(*op);
    const auto z = apply_resolvent(*op, 2.0, w);
    // (2 + A) z = w on the unknowns
    const Eigen::VectorXd back = 2.0 * op->gather(z) + op->apply(op->gather(z));
    CHECK((back - op->gather(w)).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(z.u(0) == 0.0);
}

TEST_CASE("trajectories do not depend on the thread count")
{
    const auto op = desk(Coupling::Aq, 17, 9);
    Scenario s;
    s.op = op;
    s.dt = 0.01;
    s.t_end = 0.2;
    s.w0 = bump(*op);
    set_thread_count(1);
    const auto a = run(s);
    set_thread_count(4);
    const auto b = run(s);
    set_thread_count(1);
    CHECK(a.norm_yg == b.norm_yg);
    CHECK(a.mass == b.mass);
    CHECK((a.final_state.cells - b.final_state.cells).cwiseAbs().maxCoeff() == 0.0);
}
