#include "mmsim/error.hpp"
#include "mmsim/operators.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace mmsim;

namespace {

MacroMesh line(std::size_t n, bool dirichlet, double length = 1.0)
{
    const auto tag = dirichlet ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    return build_interval_mesh(length, n, tag, tag);
}

const CellMap general = CellMap::general_1d(Coefficient::affine(1.0, 0.2), Coefficient::constant(0.1));

double general_dpsi(double x, double y) { return 1.0 + 0.2 * x + 0.2 * y; }

TwoScaleState random_state(const CoupledOperator& op, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    auto w = op.zero_state();
    for (Eigen::Index n = 0; n < w.u.size(); ++n)
        if (op.macro().active_index[static_cast<std::size_t>(n)] >= 0)
            w.u(n) = d(rng);
    for (Eigen::Index c = 0; c < w.cells.cols(); ++c)
        for (Eigen::Index j = 0; j < w.cells.rows(); ++j)
            w.cells(j, c) = d(rng);
    w.enforce_matching(op.cell_mesh());
    return w;
}

} // namespace

TEST_CASE("macro Dirichlet spectrum on [0, pi]")
{
    const auto mesh = line(101, true, M_PI);
    const auto op = assemble_macro(mesh, MacroBc::dirichlet);
    CHECK(op.active_size() == 99);
    const Eigen::MatrixXd a = Eigen::MatrixXd(op.laplacian());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const double h = M_PI / 100;
    const double exact = 4.0 / (h * h) * std::pow(std::sin(h / 2), 2);
    CHECK(es.eigenvalues()(0) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(exact == doctest::Approx(0.99992).epsilon(1e-5));
}

TEST_CASE("macro Neumann rows conserve")
{
    const auto op = assemble_macro(line(11, false), MacroBc::neumann);
    CHECK(op.active_size() == 11);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(11);
    CHECK((op.stiffness * ones).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(op.weights.sum() == doctest::Approx(1.0));
    CHECK_THROWS_AS(assemble_macro(line(11, false), MacroBc::dirichlet), Error);
}

TEST_CASE("flat strip operator is the 5-point Laplacian")
{
    const auto mesh = build_strip_mesh(StripProfile(Coefficient::constant(1.0)), 8, 5);
    const auto op = assemble_macro(mesh, MacroBc::mixed);
    CHECK(op.active_size() == 32);
    const Eigen::MatrixXd k = Eigen::MatrixXd(op.stiffness);
    const Eigen::MatrixXd ref = oracle::flat_strip_stiffness(8, 5);
    CHECK((k - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(assemble_macro(mesh, MacroBc::neumann).active_size() == 40);
    CHECK(assemble_macro(mesh, MacroBc::dirichlet).active_size() == 24);
}

TEST_CASE("curved strip stiffness is symmetric and energy-consistent")
{
    const auto mesh = build_strip_mesh(StripProfile(Coefficient::sinusoidal(1.0, 0.3)), 16, 9);
    const auto op = assemble_macro(mesh, MacroBc::neumann);
    const Eigen::SparseMatrix<double> k = op.stiffness_full;
    CHECK(Eigen::MatrixXd(k - Eigen::SparseMatrix<double>(k.transpose())).norm() < 1e-13);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh.size()));
    CHECK((k * ones).cwiseAbs().maxCoeff() < 1e-12);
    // the physical coordinate y has Dirichlet energy |Ω| = 2π, reached at second order
    auto energy_gap = [](std::size_t nx, std::size_t ny) {
        const auto m = build_strip_mesh(StripProfile(Coefficient::sinusoidal(1.0, 0.3)), nx, ny);
        Eigen::VectorXd y(static_cast<Eigen::Index>(m.size()));
        for (std::size_t n = 0; n < m.size(); ++n)
            y(static_cast<Eigen::Index>(n)) = m.y[n];
        const double e = macro_energy(m, y, y);
        const auto k = assemble_macro(m, MacroBc::neumann).stiffness_full;
        CHECK(y.dot(k * y) == doctest::Approx(e).epsilon(1e-12));
        return std::abs(e - 2.0 * M_PI);
    };
    const double coarse = energy_gap(16, 9);
    const double fine = energy_gap(32, 17);
    CHECK(coarse < 1e-2);
    CHECK(fine / coarse == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("cell operator reduces to the 3-point stencil")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 11);
    Eigen::VectorXd v(11);
    for (Eigen::Index j = 0; j < 11; ++j)
        v(j) = std::pow(cell.nodes[static_cast<std::size_t>(j)], 2);
    const auto id = assemble_cell(cell, CellMap::identity(), 0.0);
    CHECK((id.apply(v).array() + 2.0).abs().maxCoeff() < 1e-12);
    const auto two = assemble_cell(cell, CellMap::scaled_ball(Coefficient::constant(2.0)), 0.0);
    CHECK((two.apply(v).array() + 0.5).abs().maxCoeff() < 1e-12);

    const auto t = id.interior_matrix();
    CHECK(t.size() == 9);
    CHECK(t.diag[0] == doctest::Approx(2.0 / 0.04));
    CHECK(t.upper[0] == doctest::Approx(-1.0 / 0.04));
}

TEST_CASE("constant lifting lies in the kernel")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 9);
    CHECK(lift_boundary(cell, 0.0).cwiseAbs().maxCoeff() == 0.0);
    const auto three = lift_boundary(cell, 3.0);
    CHECK((three.array() == 3.0).all());
    CHECK(assemble_cell(cell, general, 0.4).apply(three).cwiseAbs().maxCoeff() < 1e-12);
    const auto scaled = assemble_cell(cell, CellMap::scaled_ball(Coefficient::constant(2.0)), 0.0);
    const auto neg = lift_boundary(cell, -1.5);
    CHECK((neg.array() == -1.5).all());
    CHECK(scaled.apply(neg).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exchange flux of y squared")
{
    auto flux = [](const CellMap& map, std::size_t m) {
        const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, m);
        const auto op = assemble_cell(cell, map, 0.0);
        Eigen::VectorXd v(static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < m; ++j)
            v(static_cast<Eigen::Index>(j)) = cell.nodes[j] * cell.nodes[j];
        CHECK(exchange_flux(op, v) == doctest::Approx(boundary_flux(op, v)).epsilon(1e-12));
        return exchange_flux(op, v);
    };
    // continuum: -(V'(1) + V'(-1)·(-1)) = -4, and -c^{n-2}·4 in physical coordinates
    const double e201 = std::abs(flux(CellMap::identity(), 201) + 4.0);
    const double e401 = std::abs(flux(CellMap::identity(), 401) + 4.0);
    CHECK(e201 < 0.05);
    CHECK(e401 < 0.6 * e201);
    const double s = flux(CellMap::scaled_ball(Coefficient::constant(2.0)), 401);
    CHECK(s == doctest::Approx(-2.0).epsilon(0.01));

    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 21);
    const auto op = assemble_cell(cell, general, 0.3);
    CHECK(exchange_flux(op, lift_boundary(cell, 2.0)) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("exchange flux bound")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 17);
    const auto op = assemble_cell(cell, general, 0.7);
    const double c = exchange_flux_bound(op);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd v(17);
        for (Eigen::Index j = 0; j < 17; ++j)
            v(j) = d(rng);
        CHECK(std::abs(exchange_flux(op, v)) <= c * std::sqrt(op.energy(v)) * (1 + 1e-12));
    }
}

TEST_CASE("radial exchange flux matches the physical surface integral")
{
    // V = r² on the 3-ball scaled by c = 2: q = -|S| c^{n-2} V'(1) = -4π · 2 · 2
    const auto cell = build_cell_mesh(3, CellMesh::Mode::radial, 401);
    const auto op = assemble_cell(cell, CellMap::scaled_ball(Coefficient::constant(2.0)), 0.0);
    Eigen::VectorXd v(401);
    for (Eigen::Index j = 0; j < 401; ++j)
        v(j) = std::pow(cell.nodes[static_cast<std::size_t>(j)], 2);
    CHECK(exchange_flux(op, v) == doctest::Approx(-16.0 * M_PI).epsilon(0.01));
    CHECK(exchange_flux(op, v) == doctest::Approx(boundary_flux(op, v)).epsilon(1e-12));
}

TEST_CASE("coupled operator matches the dense oracle")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 5);
    for (auto mode : {Coupling::A, Coupling::Aq, Coupling::detached, Coupling::AN}) {
        const bool dirichlet = mode != Coupling::AN;
        const auto mesh = line(5, dirichlet);
        const auto op = assemble_coupled(mesh, dirichlet ? MacroBc::dirichlet : MacroBc::neumann, cell, general, mode);
        const auto ref = oracle::coupled_interval(1.0, 5, dirichlet, 5, general_dpsi, mode);
        CAPTURE(to_string(mode));
        REQUIRE(op.size() == static_cast<std::size_t>(ref.m.size()));
        CHECK((op.mass() - ref.m).cwiseAbs().maxCoeff() < 1e-13);
        const Eigen::MatrixXd k = Eigen::MatrixXd(op.stiffness());
        CHECK((k - ref.k).cwiseAbs().maxCoeff() < 1e-11);

        const auto w = random_state(op, 11);
        const Eigen::VectorXd x = op.gather(w);
        const Eigen::VectorXd ax = ref.a() * x;
        CHECK((op.apply(x) - ax).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((op.gather(op.apply(w)) - ax).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("exchange modes are symmetric in the weighted product")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 9);
    const auto op = assemble_coupled(line(9, true), MacroBc::dirichlet, cell, general, Coupling::Aq);
    const Eigen::SparseMatrix<double> k = op.stiffness();
    const Eigen::SparseMatrix<double> kt = k.transpose();
    CHECK(Eigen::MatrixXd(k - kt).norm() / Eigen::MatrixXd(k).norm() < 1e-14);
    const auto a = random_state(op, 1);
    const auto b = random_state(op, 2);
    const double ab = weighted_inner(op, op.apply(a), b);
    const double ba = weighted_inner(op, a, op.apply(b));
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
}

TEST_CASE("zero and constant states")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 7);
    const auto op = assemble_coupled(line(7, false), MacroBc::neumann, cell, general, Coupling::AN);
    const auto zero = op.apply(op.zero_state());
    CHECK(zero.u.cwiseAbs().maxCoeff() == 0.0);
    auto c = op.zero_state();
    c.u.setConstant(2.5);
    c.cells.setConstant(2.5);
    const auto r = op.apply(c);
    CHECK(r.u.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.cells.cwiseAbs().maxCoeff() < 1e-12);
    for (std::size_t n = 0; n < 7; ++n)
        CHECK(std::abs(op.exchange_flux_at(c, n)) < 1e-12);
}

TEST_CASE("weighted inner product of constants")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 9);
    const auto mesh = line(9, true);
    auto ones = [](const CoupledOperator& op) {
        auto w = op.zero_state();
        w.u.setOnes();
        w.cells.setOnes();
        return w;
    };
    const auto id = assemble_coupled(mesh, MacroBc::dirichlet, cell, CellMap::identity(), Coupling::Aq);
    CHECK(weighted_inner(id, ones(id), ones(id)) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(weighted_inner(id, id.zero_state(), id.zero_state()) == 0.0);
    const auto two = assemble_coupled(mesh, MacroBc::dirichlet, cell, CellMap::scaled_ball(Coefficient::constant(2.0)),
                                      Coupling::Aq);
    CHECK(weighted_inner(two, ones(two), ones(two)) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("gather and scatter round trip")
{
    const auto cell = build_cell_mesh(2, CellMesh::Mode::radial, 6);
    const auto op = assemble_coupled(line(6, true), MacroBc::dirichlet, cell,
                                     CellMap::scaled_ball(Coefficient::affine(1.0, 0.5)), Coupling::Aq);
    const auto w = random_state(op, 5);
    const auto back = op.scatter(op.gather(w));
    CHECK((back.u - w.u).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t n : op.macro().active_nodes)
        CHECK((back.cells.col(static_cast<Eigen::Index>(n)) - w.cells.col(static_cast<Eigen::Index>(n))).cwiseAbs().maxCoeff()
              == 0.0);
    const auto lifted = op.scatter(op.gather(w), 0.7);
    CHECK(lifted.u(0) == 0.7);
    CHECK((lifted.cells.col(0).array() == 0.7).all());
}

TEST_CASE("coupled assembly rejects inconsistent inputs")
{
    const auto cell = build_cell_mesh(2, CellMesh::Mode::radial, 6);
    CHECK_THROWS_AS(assemble_coupled(line(5, true), MacroBc::dirichlet, cell, general, Coupling::Aq), Error);
    const auto icell = build_cell_mesh(1, CellMesh::Mode::interval, 6);
    CHECK_THROWS_AS(assemble_coupled(line(5, true), MacroBc::dirichlet, icell, general, Coupling::AN), Error);
    CHECK_THROWS_AS(parse_coupling("B"), Error);
    CHECK(parse_macro_bc("mixed") == MacroBc::mixed);
}
