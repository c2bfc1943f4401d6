// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "thinhom/geometry_mesh.hpp"
#include "thinhom/quadrature.hpp"

using namespace thinhom;

namespace {

Geometry geom2(double eps = 0.125)
{
    Geometry g;
    g.d = 2;
    g.omega_extent = {1.0};
    g.eps = eps;
    return g;
}

Geometry geom3(double eps = 0.25)
{
    Geometry g;
    g.d = 3;
    g.omega_extent = {1.0, 1.0};
    g.eps = eps;
    return g;
}

template <class F>
Errc code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::io_error;
}

} // namespace

TEST(Quadrature, GaussExactness)
{
    for (int n = 1; n <= 6; ++n) {
        const GaussRule r = gauss_legendre(n);
        for (int deg = 0; deg <= 2 * n - 1; ++deg) {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q)
                s += r.weights[q] * std::pow(r.points[q], deg);
            EXPECT_NEAR(s, 1.0 / (deg + 1), 1e-14) << "n=" << n << " deg=" << deg;
        }
    }
}

TEST(Quadrature, CompositeIntegratesSine)
{
    const GaussRule r = composite_gauss(0.0, 1.0, 8, 3);
    double s = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q)
        s += r.weights[q] * std::pow(std::sin(2.0 * std::numbers::pi * r.points[q]), 2);
    EXPECT_NEAR(s, 0.5, 1e-12);
}

TEST(Quadrature, LagrangePartitionOfUnity)
{
    for (int p : {1, 2}) {
        LagrangeBasis1D b{p};
        for (double t : {0.0, 0.1, 0.37, 0.5, 1.0}) {
            double s = 0.0, ds = 0.0;
            for (int a = 0; a < b.size(); ++a) {
                s += b.value(a, t);
                ds += b.derivative(a, t);
            }
            EXPECT_NEAR(s, 1.0, 1e-15);
            EXPECT_NEAR(ds, 0.0, 1e-14);
        }
        for (int a = 0; a < b.size(); ++a)
            for (int c = 0; c < b.size(); ++c)
                EXPECT_NEAR(b.value(a, b.node(c)), a == c ? 1.0 : 0.0, 1e-15);
    }
}

TEST(CellMesh, CountsAndPeriodicity2D)
{
    const auto m = build_cell_mesh<2>(geom2(), 4, 8);
    EXPECT_EQ(m.n_elements(), 32u);
    EXPECT_EQ(m.n_vertices(), 5u * 9u);
    EXPECT_EQ(m.periodic_pairs().size(), 9u);
    EXPECT_EQ(m.distinct_vertex_count(), 4u * 9u);
    EXPECT_TRUE(m.periodic(0));
    EXPECT_FALSE(m.periodic(1));
    EXPECT_DOUBLE_EQ(m.volume(), 2.0);
    m.check_invariants();
}

TEST(CellMesh, CountsAndPeriodicity3D)
{
    const auto m = build_cell_mesh<3>(geom3(), 2, 4);
    EXPECT_EQ(m.n_elements(), 16u);
    EXPECT_EQ(m.distinct_vertex_count(), 2u * 2u * 5u);
    EXPECT_DOUBLE_EQ(m.volume(), 2.0);
    m.check_invariants();
}

TEST(CellMesh, RejectsBadResolution)
{
    EXPECT_EQ(code_of([] { build_cell_mesh<2>(geom2(), 0, 8); }), Errc::invalid_resolution);
    EXPECT_EQ(code_of([] { build_cell_mesh<2>(geom2(), 4, 3); }), Errc::invalid_resolution);
    EXPECT_EQ(code_of([] { build_cell_mesh<2>(geom2(), 4, 0); }), Errc::invalid_resolution);
}

TEST(ThinMesh, ExtentAndCells)
{
    const auto m = build_thin_mesh<2>(geom2(0.125), 4, 4);
    EXPECT_EQ(m.cells(0), 32);
    EXPECT_EQ(m.cells(1), 4);
    EXPECT_NEAR(m.extent(0), 1.0, 1e-15);
    EXPECT_NEAR(m.lower(1), -0.125, 1e-15);
    EXPECT_NEAR(m.volume(), 0.25, 1e-15);
    EXPECT_TRUE(m.periodic_pairs().empty());
    m.check_invariants();
}

TEST(ThinMesh, ThinDomainViolated)
{
    EXPECT_EQ(code_of([] { build_thin_mesh<2>(geom2(1.0), 4, 4); }), Errc::thin_domain_violated);
    EXPECT_EQ(code_of([] { build_thin_mesh<2>(geom2(2.0), 4, 4); }), Errc::thin_domain_violated);
    EXPECT_EQ(code_of([] { build_thin_mesh<2>(geom2(0.25), 1, 4); }), Errc::invalid_resolution);
}

TEST(ThinMesh, NonDividingEpsRounds)
{
    const auto m = build_thin_mesh<2>(geom2(0.3), 4, 2);
    EXPECT_EQ(m.cells(0), 12);
    EXPECT_NEAR(m.extent(0), 0.9, 1e-14);
}

TEST(ThinMesh, LateralPeriodicOption)
{
    Geometry g = geom2(0.25);
    g.lateral_periodic = true;
    const auto m = build_thin_mesh<2>(g, 4, 2);
    EXPECT_TRUE(m.periodic(0));
    EXPECT_EQ(m.periodic_pairs().size(), 3u);
    m.check_invariants();
}

TEST(MacroMesh, DimensionAndFaces)
{
    const auto m1 = build_macro_mesh<1>(geom2(), 16);
    EXPECT_EQ(m1.n_elements(), 16u);
    EXPECT_EQ(m1.face(0, 0).kind, FaceKind::neumann);
    const auto m2 = build_macro_mesh<2>(geom3(), 8);
    EXPECT_EQ(m2.n_elements(), 64u);
    m2.check_invariants();
    EXPECT_EQ(code_of([] { build_macro_mesh<1>(geom3(), 8); }), Errc::invalid_geometry);
    EXPECT_EQ(code_of([] { build_macro_mesh<1>(geom2(), 0); }), Errc::invalid_resolution);
}

TEST(Mesh, NormalsCloseAndVolumesSum)
{
    const auto m = build_thin_mesh<3>(geom3(0.25), 2, 2);
    EXPECT_LT(m.normal_sum().norm(), 1e-12);
    double v = 0.0;
    for (std::size_t e = 0; e < m.n_elements(); ++e)
        v += m.jacobian(e);
    EXPECT_NEAR(v, m.volume(), 1e-14);
}

TEST(Mesh, Locate)
{
    const auto m = build_cell_mesh<2>(geom2(), 4, 4);
    const auto loc = m.locate(Point<2>(0.3, 0.1));
    ASSERT_TRUE(loc.has_value());
    EXPECT_EQ(loc->cell[0], 1);
    EXPECT_EQ(loc->cell[1], 2);
    EXPECT_NEAR(loc->local[0], 0.2, 1e-12);
    EXPECT_NEAR(loc->local[1], 0.2, 1e-12);
    const auto top = m.locate(Point<2>(1.0, 1.0));
    ASSERT_TRUE(top.has_value());
    EXPECT_EQ(top->cell[0], 3);
    EXPECT_DOUBLE_EQ(top->local[0], 1.0);
    EXPECT_FALSE(m.locate(Point<2>(0.5, 1.5)).has_value());
}

TEST(Mesh, InvalidGeometry)
{
    Geometry g = geom2();
    g.d = 4;
    EXPECT_EQ(code_of([&] { g.validate(); }), Errc::invalid_geometry);
    g = geom2();
    g.omega_extent = {1.0, 2.0};
    EXPECT_EQ(code_of([&] { g.validate(); }), Errc::invalid_geometry);
}
