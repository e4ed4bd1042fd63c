#include "mmsim/analysis.hpp"
#include "mmsim/error.hpp"
#include "mmsim/gravity.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mmsim;

namespace {

std::shared_ptr<const CoupledOperator> strip(const Coefficient& f, std::size_t nx = 8, std::size_t ny = 9,
                                             const CellMap& map = CellMap::identity())
{
    return std::make_shared<const CoupledOperator>(assemble_coupled(build_strip_mesh(StripProfile(f), nx, ny),
                                                                    MacroBc::mixed,
                                                                    build_cell_mesh(1, CellMesh::Mode::interval, 5),
                                                                    map, Coupling::Aq));
}

GravityScenario scenario(std::shared_ptr<const CoupledOperator> op, double rho0, bool shifted = false)
{
    GravityScenario s;
    s.op = std::move(op);
    s.rho0 = rho0;
    s.shifted = shifted;
    s.dt = 0.01;
    s.t_end = 0.1;
    s.w0 = gravity_rest_state(s);
    return s;
}

/// u = a y + b with the Γ₀ condition and u(1) = ρ₀ (flat strip).
TwoScaleState closed_form(const GravityScenario& s, double a, double b)
{
    const auto& mesh = s.op->macro_mesh();
    auto w = s.op->zero_state();
    for (std::size_t k = 0; k < mesh.size(); ++k)
        w.u(static_cast<Eigen::Index>(k)) = a * mesh.y[k] + b - s.shift();
    w.cells = w.u.transpose().replicate(static_cast<Eigen::Index>(s.op->cell_mesh().size()), 1);
    return w;
}

TwoScaleState random_matching(const CoupledOperator& op, double top, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    auto w = op.zero_state();
    for (Eigen::Index k = 0; k < w.u.size(); ++k)
        w.u(k) = op.macro().essential[static_cast<std::size_t>(k)] ? top : d(rng);
    for (Eigen::Index c = 0; c < w.cells.cols(); ++c)
        for (Eigen::Index j = 0; j < w.cells.rows(); ++j)
            w.cells(j, c) = d(rng);
    w.enforce_matching(op.cell_mesh());
    return w;
}

} // namespace

TEST_CASE("boundary nonlinearity")
{
    const auto op = strip(Coefficient::constant(1.0));
    const BoundaryNonlinearity g(*op, 0.5, GravityConvention::coordinate);
    CHECK(g.nodes().size() == 8);
    CHECK(g.value(1.0) == -2.25);
    CHECK(g.derivative(1.0) == -3.0);
    CHECK(g.normal_derivative(1.0) == 2.25);
    const BoundaryNonlinearity n(*op, 0.0, GravityConvention::normal);
    CHECK(n.normal_derivative(2.0) == -4.0);
    CHECK(parse_convention("normal") == GravityConvention::normal);
    CHECK_THROWS_AS(parse_convention("up"), Error);
}

TEST_CASE("steady flat profile")
{
    auto s = scenario(strip(Coefficient::constant(1.0)), 0.2);
    const auto r = steady_newton(s);
    CHECK(r.iterations <= 10);
    CHECK(r.residual <= 1e-11);
    const double b = oracle::gravity_root(0.2);
    CHECK(b == doctest::Approx(0.2763932).epsilon(1e-7));
    const auto exact = closed_form(s, -b * b, b);
    CHECK((r.w.u - exact.u).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.w.cells - exact.cells).cwiseAbs().maxCoeff() < 1e-10);
    for (std::size_t k = 0; k < 8; ++k)
        CHECK(r.w.u(static_cast<Eigen::Index>(k)) == doctest::Approx(b).epsilon(1e-10));

    const auto zero = steady_newton(scenario(strip(Coefficient::constant(1.0)), 0.0));
    CHECK(zero.w.u.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("steady profile under the normal-derivative convention")
{
    auto s = scenario(strip(Coefficient::constant(1.0)), 0.2);
    s.convention = GravityConvention::normal;
    const auto r = steady_newton(s);
    // ∂_ν u = -u'(0) = -u(0)² gives u = b² y + b with b² + b = ρ₀
    const double b = 0.5 * (std::sqrt(1.0 + 0.8) - 1.0);
    CHECK((r.w.u - closed_form(s, b * b, b).u).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("weak residual of the steady state")
{
    for (bool shifted : {false, true}) {
        auto s = scenario(strip(Coefficient::constant(1.0)), 0.2, shifted);
        const double b = oracle::gravity_root(0.2);
        const auto w = closed_form(s, -b * b, b);
        const auto zero = s.op->zero_state();
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            auto test = random_matching(*s.op, 0.0, seed);
            CHECK(std::abs(residual_weak(s, w, zero, test)) <= 1e-10);
        }
    }
    auto s0 = scenario(strip(Coefficient::constant(1.0)), 0.0);
    const auto z = s0.op->zero_state();
    CHECK(residual_weak(s0, z, z, random_matching(*s0.op, 0.0, 9)) == 0.0);
    auto bad = random_matching(*s0.op, 1.0, 9);
    CHECK_THROWS_AS(residual_weak(s0, z, z, bad), Error);
}

TEST_CASE("weak residual reproduces the assembled rows")
{
    auto s = scenario(strip(Coefficient::sinusoidal(1.0, 0.2), 8, 5,
                            CellMap::scaled_ball(Coefficient::sinusoidal(1.0, 0.3))),
                      0.1);
    s.source = Coefficient::sinusoidal(0.2, 0.1);
    const auto& op = *s.op;
    const auto w = random_matching(op, s.top_value(), 4);
    const auto wdot = random_matching(op, 0.0, 5);
    const BoundaryNonlinearity g(op, s.shift(), s.convention);
    auto h = op.zero_state();
    for (std::size_t k = 0; k < op.macro_mesh().size(); ++k)
        h.u(static_cast<Eigen::Index>(k)) = s.source->value(op.macro_mesh().x[k]);
    const Eigen::VectorXd x = op.gather(w);
    const Eigen::VectorXd rows = op.mass().cwiseProduct(op.gather(wdot)) + op.stiffness() * x
                                 + op.essential_load(w) - op.load(h) - g.load(x);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(rows.size());
        e(i) = 1.0;
        const double r = residual_weak(s, w, wdot, op.scatter(e));
        worst = std::max(worst, std::abs(r - rows(i)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("steps at the steady state and at rest")
{
    auto s = scenario(strip(Coefficient::constant(1.0)), 0.2);
    const double b = oracle::gravity_root(0.2);
    const auto w = closed_form(s, -b * b, b);
    for (int newton : {1, 3}) {
        s.newton = newton;
        const auto next = step_gravity(s, w);
        CHECK((next.u - w.u).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((next.cells - w.cells).cwiseAbs().maxCoeff() < 1e-10);
    }
    auto z = scenario(strip(Coefficient::constant(1.0)), 0.0);
    const auto rest = step_gravity(z, z.op->zero_state());
    CHECK(rest.u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("x-independent data stays x-independent")
{
    auto s = scenario(strip(Coefficient::constant(1.0), 16, 9), 0.2);
    const auto& mesh = s.op->macro_mesh();
    for (std::size_t k = 0; k < mesh.size(); ++k)
        s.w0.u(static_cast<Eigen::Index>(k)) += 0.3 * std::cos(M_PI * mesh.y[k] / 2.0);
    s.w0.enforce_matching(s.op->cell_mesh());
    s.t_end = 0.2;
    const auto out = run_gravity(s);
    const auto& u = out.trajectory.final_state.u;
    double spread = 0.0;
    for (std::size_t j = 0; j < mesh.ny; ++j)
        for (std::size_t i = 1; i < mesh.nx; ++i)
            spread = std::max(spread, std::abs(u(static_cast<Eigen::Index>(mesh.index(i, j)))
                                               - u(static_cast<Eigen::Index>(mesh.index(0, j)))));
    CHECK(spread <= 1e-12);
    CHECK(out.trace.size() == out.trajectory.t.size());
    CHECK(out.trace_x.size() == 16);
}

TEST_CASE("original and shifted variables agree")
{
    const auto op = strip(Coefficient::sinusoidal(1.0, 0.2), 16, 9, CellMap::scaled_ball(Coefficient::sinusoidal(1.0, 0.5)));
    auto p = scenario(op, 0.2, false);
    auto q = scenario(op, 0.2, true);
    p.source = q.source = Coefficient::sinusoidal(0.0, 0.5);
    p.t_end = q.t_end = 0.5;
    const auto a = run_gravity(p);
    const auto b = run_gravity(q);
    REQUIRE(a.trace.size() == b.trace.size());
    double worst = 0.0;
    for (std::size_t r = 0; r < a.trace.size(); ++r)
        for (std::size_t i = 0; i < a.trace[r].size(); ++i)
            worst = std::max(worst, std::abs(a.trace[r][i] - b.trace[r][i]));
    CHECK(worst <= 1e-12);
    CHECK((a.trajectory.final_state.u.array() - b.trajectory.final_state.u.array() - 0.2).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("gravity scenario validation")
{
    auto s = scenario(strip(Coefficient::constant(1.0)), 0.2);
    s.rho0 = -0.1;
    CHECK_THROWS_AS(validate(s), Error);
    s.rho0 = 0.2;
    s.newton = 0;
    CHECK_THROWS_AS(validate(s), Error);
    const auto line = std::make_shared<const CoupledOperator>(assemble_coupled(
        build_interval_mesh(1.0, 5, BoundaryTag::dirichlet, BoundaryTag::dirichlet), MacroBc::dirichlet,
        build_cell_mesh(1, CellMesh::Mode::interval, 5), CellMap::identity(), Coupling::Aq));
    GravityScenario t;
    t.op = line;
    t.dt = 0.1;
    CHECK_THROWS_AS(validate(t), Error);
}

TEST_CASE("finite-time blow-up ends the run with a diagnostic")
{
    auto s = scenario(strip(Coefficient::constant(1.0)), 0.2);
    s.source = Coefficient::constant(3.0);
    s.dt = 0.01;
    s.t_end = 50.0;
    s.cadence = 1000;
    const auto out = run_gravity(s);
    CHECK(out.trajectory.halted);
    CHECK_FALSE(out.trajectory.diagnostic.empty());
    CHECK(out.trajectory.steps() < 5000);
    REQUIRE_FALSE(out.trajectory.snapshots.empty());
    CHECK(out.trajectory.snapshots.back().first == out.trajectory.steps());
    CHECK_THROWS_AS(steady_newton(s), Error);
}

TEST_CASE("nearby gravity runs stay inside the Gronwall envelope")
{
    auto s = scenario(strip(Coefficient::sinusoidal(1.0, 0.2), 16, 5), 0.2);
    s.source = Coefficient::sinusoidal(0.0, 0.5);
    s.dt = 0.002;
    s.t_end = 0.2;
    s.newton = 3;
    auto r = s;
    const auto& mesh = s.op->macro_mesh();
    for (std::size_t k = 0; k < mesh.size(); ++k)
        if (!s.op->macro().essential[k])
            r.w0.u(static_cast<Eigen::Index>(k)) += 1e-3 * std::cos(mesh.x[k]) * (1.0 - mesh.eta[k / mesh.nx]);
    r.w0.enforce_matching(s.op->cell_mesh());

    std::vector<TwoScaleState> a, b;
    const auto pa = run_gravity(s, [&](std::size_t, double, const TwoScaleState& w) { a.push_back(w); });
    run_gravity(r, [&](std::size_t, double, const TwoScaleState& w) { b.push_back(w); });
    double bound = 0.0;
    for (const auto& row : pa.trace)
        for (double v : row)
            bound = std::max(bound, std::abs(v));
    const double lip = boundary_lipschitz(s, 1.1 * bound + 1e-3);
    CHECK(lip > 0.0);
    auto gap = [&](const TwoScaleState& x, const TwoScaleState& y) {
        TwoScaleState d = x;
        d.u -= y.u;
        d.cells -= y.cells;
        return yg_norm(*s.op, d);
    };
    const double d0 = gap(a[0], b[0]);
    double worst = 0.0;
    for (std::size_t k = 1; k < a.size(); ++k)
        worst = std::max(worst, gap(a[k], b[k]) / (std::exp(lip * s.dt * static_cast<double>(k)) * d0));
    CHECK(worst <= 1.0);
}
