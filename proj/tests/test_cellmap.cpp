#include "mmsim/cellmap.hpp"
#include "mmsim/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace mmsim;

TEST_CASE("metric of catalog maps")
{
    const auto id = eval_metric(CellMap::identity(), 0.3, 0.2);
    CHECK(id.g(0, 0) == 1.0);
    CHECK(id.sqrt_det == 1.0);
    CHECK(id.g_inv(0, 0) == 1.0);

    const auto two = eval_metric(CellMap::scaled_ball(Coefficient::constant(2.0)), 0.0, -0.5);
    CHECK(two.g(0, 0) == 4.0);
    CHECK(two.sqrt_det == 2.0);
    CHECK(two.g_inv(0, 0) == 0.25);

    const auto gen = eval_metric(CellMap::general_1d(Coefficient::affine(1.0, 0.1), Coefficient::constant(0.0)), 1.0, 0.4);
    CHECK(gen.g(0, 0) == doctest::Approx(1.21));
    CHECK(gen.sqrt_det == doctest::Approx(1.1));
    CHECK(gen.g_inv(0, 0) == doctest::Approx(1.0 / 1.21));
}

TEST_CASE("metric of a scaled ball in three dimensions")
{
    const auto m = eval_metric(CellMap::scaled_ball(Coefficient::constant(2.0)), 0.0, 0.5, 3);
    CHECK(m.g.rows() == 3);
    CHECK(m.sqrt_det == doctest::Approx(8.0));
    CHECK(m.conductivity() == doctest::Approx(2.0));
    CHECK((m.g * m.g_inv - Eigen::Matrix3d::Identity()).norm() < 1e-15);
}

TEST_CASE("map evaluation rejects degenerate and unsupported cases")
{
    CHECK_THROWS_AS(eval_metric(CellMap::scaled_ball(Coefficient::constant(0.0)), 0.0, 0.0), Error);
    CHECK_THROWS_AS(eval_metric(CellMap::general_1d(Coefficient::constant(1.0), Coefficient::constant(0.1)), 0.0, 0.0, 2),
                    Error);
    CHECK(parse_family("scaled-ball") == CellMap::Family::scaled_ball);
    CHECK_THROWS_AS(parse_family("sphere"), Error);
}

TEST_CASE("general map derivatives")
{
    const auto m = CellMap::general_1d(Coefficient::constant(1.0), Coefficient::constant(0.1));
    CHECK(m.psi(0.0, 0.5) == doctest::Approx(0.525));
    CHECK(m.dpsi_dy(0.0, 0.5) == doctest::Approx(1.1));
    CHECK(m.d2psi_dy2(0.0, 0.5) == doctest::Approx(0.2));
    CHECK(m.name() == "general-1d");
}

TEST_CASE("map validation")
{
    const auto cell = build_cell_mesh(1, CellMesh::Mode::interval, 9);
    const auto strip = build_strip_mesh(StripProfile(Coefficient::constant(1.0)), 64, 5);

    const auto id = validate_map(CellMap::identity(), strip, cell);
    CHECK(id.pass);
    CHECK(id.c1 == 1.0);
    CHECK(id.c2 == 1.0);

    // x = π/2 and 3π/2 are strip nodes when nx is a multiple of 4
    const auto sb = validate_map(CellMap::scaled_ball(Coefficient::sinusoidal(1.0, 0.5)), strip, cell);
    CHECK(sb.pass);
    CHECK(sb.c1 == doctest::Approx(1.0 / 2.25));
    CHECK(sb.c2 == doctest::Approx(4.0));

    const auto line = build_interval_mesh(2.0, 5, BoundaryTag::dirichlet, BoundaryTag::dirichlet);
    const auto bad = validate_map(CellMap::scaled_ball(Coefficient::affine(-1.0, 1.0)), line, cell);
    CHECK_FALSE(bad.pass);
    REQUIRE_FALSE(bad.failures.empty());
    CHECK(bad.failures.front().find("degenerate") != std::string::npos);
}
