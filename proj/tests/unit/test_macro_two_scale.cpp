// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "thinhom/two_scale.hpp"
#include "thinhom/upscaling.hpp"

using namespace thinhom;

namespace {

constexpr double pi = std::numbers::pi;

template <int MDim>
std::shared_ptr<const StructuredMesh<MDim>> macro_mesh(int n, bool periodic = false)
{
    Geometry g;
    g.d = MDim + 1;
    g.omega_extent.assign(MDim, 1.0);
    g.lateral_periodic = periodic;
    return std::make_shared<const StructuredMesh<MDim>>(build_macro_mesh<MDim>(g, n));
}

Forcing wavy_forcing()
{
    return [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 1.0 + 0.5 * std::sin(2 * pi * x[0])); };
}

Eigen::Matrix2d aniso()
{
    Eigen::Matrix2d a;
    a << 2.0, 0.5, 0.5, 1.0;
    return a;
}

// p = cos(pi x) cos(pi y) plus a divergence-free flux curl(sin(pi x) sin(pi y)) tangent to the boundary
Forcing manufactured_forcing()
{
    const Eigen::Matrix2d inv = aniso().inverse();
    return [inv](const Eigen::VectorXd& x) {
        const double cx = std::cos(pi * x[0]), sx = std::sin(pi * x[0]);
        const double cy = std::cos(pi * x[1]), sy = std::sin(pi * x[1]);
        const Eigen::Vector2d grad(-pi * sx * cy, -pi * cx * sy);
        const Eigen::Vector2d curl(pi * sx * cy, -pi * cx * sy);
        return Eigen::VectorXd(grad + inv * curl);
    };
}

double manufactured_pressure(const Point<2>& x) { return std::cos(pi * x[0]) * std::cos(pi * x[1]); }

} // namespace

TEST(Macro, OneDimensionalWallsGiveZeroFlux)
{
    // natural conditions force u' = 0, so p0' = f1 and p0 = x - 1/2 - cos(2 pi x) / (4 pi)
    const auto s = solve_macro<1>(Eigen::MatrixXd::Identity(1, 1), wavy_forcing(), macro_mesh<1>(256), Regime::I);
    auto exact = [](const Point<1>& x) { return x[0] - 0.5 - std::cos(2 * pi * x[0]) / (4 * pi); };
    EXPECT_LT(pressure_l2_error(s, exact), 1e-5);
    for (const auto& u : s.u_prime)
        EXPECT_LT(std::abs(u[0]), 1e-3);
    EXPECT_LT(s.conservation_residual, 1e-8);
}

TEST(Macro, ConstantForcingIsExact)
{
    const auto s = solve_macro<1>(Eigen::MatrixXd::Constant(1, 1, 0.7), constant_forcing(Eigen::VectorXd::Constant(1, 2.0)),
                                  macro_mesh<1>(16), Regime::I);
    EXPECT_LT(pressure_l2_error(s, [](const Point<1>& x) { return 2.0 * (x[0] - 0.5); }), 1e-12);
    EXPECT_LT(boundary_flux_residual(s), 1e-12);
    for (const auto& u : s.u_prime)
        EXPECT_LT(std::abs(u[0]), 1e-12);
}

TEST(Macro, WallFluxIsFirstOrder)
{
    double prev = 0.0;
    for (int n : {64, 128, 256}) {
        const double flux = boundary_flux_residual(
            solve_macro<1>(Eigen::MatrixXd::Identity(1, 1), wavy_forcing(), macro_mesh<1>(n), Regime::I));
        if (prev > 0.0) {
            EXPECT_NEAR(std::log2(prev / flux), 1.0, 0.05);
        }
        prev = flux;
    }
}

TEST(Macro, RecoveredGradientIsSecondOrder)
{
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        const auto s = solve_macro<1>(Eigen::MatrixXd::Identity(1, 1), wavy_forcing(), macro_mesh<1>(n), Regime::I);
        double err = 0.0;
        // away from the walls, where the nodal average is one-sided
        for (int i = 5; i <= 45; ++i) {
            const Point<1> x(i / 50.0);
            err = std::max(err, std::abs(s.grad_p(x)[0] - (1.0 + 0.5 * std::sin(2 * pi * x[0]))));
        }
        if (prev > 0.0) {
            EXPECT_GT(std::log2(prev / err), 1.8) << "n = " << n;
        }
        prev = err;
    }
}

TEST(Macro, PeriodicOmegaKeepsMeanFlux)
{
    const auto s = solve_macro<1>(Eigen::MatrixXd::Identity(1, 1), wavy_forcing(), macro_mesh<1>(128, true), Regime::I);
    auto exact = [](const Point<1>& x) { return -std::cos(2 * pi * x[0]) / (4 * pi); };
    EXPECT_LT(pressure_l2_error(s, exact), 1e-4);
    EXPECT_NEAR(s.velocity(Point<1>(0.3))[0], 1.0, 1e-3);
}

TEST(Macro, ManufacturedTwoDimensionalOrderTwo)
{
    double prev = 0.0;
    for (int n : {8, 16, 32}) {
        const auto s = solve_macro<2>(aniso(), manufactured_forcing(), macro_mesh<2>(n), Regime::I);
        const double err = pressure_l2_error(s, manufactured_pressure);
        if (prev > 0.0) {
            EXPECT_GT(std::log2(prev / err), 1.9) << "n = " << n;
        }
        prev = err;
        EXPECT_LT(s.conservation_residual, 1e-8);
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Macro, RegimeIIHasNoDrive)
{
    const auto s = solve_macro<1>(Eigen::MatrixXd::Identity(1, 1), wavy_forcing(), macro_mesh<1>(16), Regime::II);
    EXPECT_FALSE(s.driven_by_forcing);
    EXPECT_EQ(s.p0.lpNorm<Eigen::Infinity>(), 0.0);
    for (const auto& u : s.u_prime)
        EXPECT_EQ(u[0], 0.0);
}

TEST(Macro, RejectsInvalidMatrix)
{
    try {
        solve_macro<1>(Eigen::MatrixXd::Constant(1, 1, -1.0), wavy_forcing(), macro_mesh<1>(8), Regime::I);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_effective_matrix);
    }
    Eigen::MatrixXd ns = aniso();
    ns(0, 1) = 0.0;
    EXPECT_THROW(solve_macro<2>(ns, manufactured_forcing(), macro_mesh<2>(4), Regime::I), Error);
    EXPECT_THROW(solve_macro<2>(Eigen::MatrixXd::Identity(1, 1), manufactured_forcing(), macro_mesh<2>(4), Regime::I), Error);
}

TEST(Macro, RegimeOfMatrixMustMatch)
{
    EffectiveMatrix em;
    em.regime = Regime::III;
    em.table = Eigen::Matrix2d::Identity();
    try {
        solve_macro<1>(em, wavy_forcing(), macro_mesh<1>(8), Regime::I);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::regime_mismatch);
    }
}

class TwoScale : public ::testing::Test {
protected:
    void SetUp() override
    {
        Geometry g;
        cells = std::make_unique<CellSolution<2>>(
            solve_cell_regime_i<2>(A, 1.0, 1.0, std::make_shared<const StructuredMesh<2>>(build_cell_mesh<2>(g, 4, 16))));
        em = effective_matrix(classify_regime(1.0, 2.0), *cells, A, 1.0, 1.0);
        macro = std::make_unique<MacroSolution<1>>(solve_macro<1>(em, wavy_forcing(), macro_mesh<1>(64, true), Regime::I));
    }

    CoefficientField A = CoefficientField::identity(2);
    std::unique_ptr<CellSolution<2>> cells;
    EffectiveMatrix em;
    std::unique_ptr<MacroSolution<1>> macro;
};

TEST_F(TwoScale, ReconstructionIsCellTimesDrive)
{
    const auto u0 = reconstruct_two_scale_velocity(*cells, *macro);
    Eigen::VectorXd x(1);
    x << 0.37;
    const Point<2> y(0.2, -0.4);
    const double D = macro->drive(Point<1>(x))[0];
    EXPECT_NEAR(u0(x, y)[0], D * cells->eval_w(0, y)[0], 1e-14);
    EXPECT_NEAR(u0(x, Point<2>(3.2, -0.4))[0], u0(x, y)[0], 1e-14);
    // the cell mean reproduces the macro velocity
    EXPECT_NEAR(u0.thin_mean(x)[0], macro->velocity(Point<1>(x))[0], 1e-8);
}

TEST_F(TwoScale, VerticalMeanAndFluxVanish)
{
    const auto u0 = reconstruct_two_scale_velocity(*cells, *macro);
    const VerticalMeanReport r = vertical_mean_check(u0);
    EXPECT_LT(r.vertical_mean, 1e-9);
    EXPECT_LT(r.boundary_flux, 1e-8);
    std::vector<Eigen::VectorXd> xs{Eigen::VectorXd::Constant(1, 0.1), Eigen::VectorXd::Constant(1, 0.8)};
    EXPECT_LT(vertical_mean<2>([&](const Eigen::VectorXd& xb, const Point<2>& y) { return u0(xb, y); }, xs), 1e-9);
}

TEST_F(TwoScale, RegimeMismatch)
{
    const auto other = solve_macro<1>(Eigen::MatrixXd::Identity(1, 1), wavy_forcing(), macro_mesh<1>(8), Regime::III);
    try {
        reconstruct_two_scale_velocity(*cells, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::regime_mismatch);
    }
}
