// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "thinhom/upscaling.hpp"

using namespace thinhom;

namespace {

template <int Dim>
std::shared_ptr<const StructuredMesh<Dim>> cell_mesh(int nx, int nz)
{
    Geometry g;
    g.d = Dim;
    g.omega_extent.assign(Dim - 1, 1.0);
    return std::make_shared<const StructuredMesh<Dim>>(build_cell_mesh<Dim>(g, nx, nz));
}

// -(w')' + lambda^2 w = 1 on (-1,1), w(+-1) = 0:  int w = 2 (1 - tanh(lambda)/lambda) / lambda^2
double layer_integral(double lambda) { return 2.0 * (1.0 - std::tanh(lambda) / lambda) / (lambda * lambda); }

// mu int w^2 for -(1/n^2) w'' + mu w = 1
double level_value(double mu, int n)
{
    const double l = n * std::sqrt(mu);
    const double sech = 1.0 / std::cosh(l);
    return (2.0 - 3.0 * std::tanh(l) / l + sech * sech) / mu;
}

EffectiveMatrix regime_i(const CoefficientField& A, double mu, double K, int nx, int nz)
{
    const auto cells = solve_cell_regime_i<2>(A, mu, K, cell_mesh<2>(nx, nz));
    return effective_matrix(classify_regime(K, 2.0), cells, A, mu, K);
}

CoefficientField oscillatory()
{
    MatrixMode m{{1}, Eigen::Matrix2d::Identity(), Trig::sin, 0.0};
    return CoefficientField(2, 2.0 * Eigen::Matrix2d::Identity(), {m}, {1.0}, std::nullopt, 1.0, 3.0);
}

} // namespace

TEST(CellRegimeI, IdentityMatchesLayerFormula)
{
    const auto A = CoefficientField::identity(2);
    const double exact = 2.0 * (1.0 - std::tanh(1.0));
    EXPECT_NEAR(exact, 0.47681168808, 1e-10);
    const EffectiveMatrix em = regime_i(A, 1.0, 1.0, 8, 32);
    EXPECT_NEAR(em.table(0, 0), exact, 1e-3);
    EXPECT_NEAR(em.table(0, 0), exact, 1e-7);
    EXPECT_LT(em.extended_max(), 1e-12);
    EXPECT_LT(em.dual_gap(), 1e-8);
}

TEST(CellRegimeI, RefinementOrder)
{
    const auto A = CoefficientField::identity(2);
    const double exact = 2.0 * (1.0 - std::tanh(1.0));
    double prev = 0.0;
    for (int nz : {4, 8, 16}) {
        const double err = std::abs(regime_i(A, 1.0, 1.0, 2, nz).table(0, 0) - exact);
        if (prev > 0.0) {
            EXPECT_GE(std::log2(prev / err), 1.9) << "nz = " << nz;
        }
        prev = err;
    }
}

TEST(CellRegimeI, ScalesWithKOverMu)
{
    const auto A = CoefficientField::identity(2);
    const double mu = 2.0, K = 0.5;
    EXPECT_NEAR(regime_i(A, mu, K, 2, 32).table(0, 0), layer_integral(std::sqrt(mu / K)), 1e-7);
}

TEST(CellRegimeI, LargeAndSmallPermeability)
{
    const auto A = CoefficientField::identity(2);
    // K -> infinity recovers the Stokes value 2/3
    EXPECT_NEAR(regime_i(A, 1.0, 1e3, 2, 32).table(0, 0), 2.0 / 3.0, 0.01 * 2.0 / 3.0);
    // K -> 0: 2K/mu (1 - sqrt(K/mu)) exactly up to exp(-2/sqrt(K))
    const double K = 1e-3;
    const double v = regime_i(A, 1.0, K, 2, 128).table(0, 0);
    EXPECT_NEAR(v, layer_integral(1.0 / std::sqrt(K)), 1e-5 * v);
    EXPECT_NEAR(v / (2.0 * K), 1.0 - std::sqrt(K), 1e-4);
}

TEST(CellRegimeI, StructureForOscillatingA)
{
    const auto A = oscillatory();
    const EffectiveMatrix em = regime_i(A, 1.0, 1.0, 8, 16);
    EXPECT_LT(em.symmetry_error(), 1e-10);
    EXPECT_GT(em.min_eigenvalue(), 0.0);
    EXPECT_LT(em.extended_max(), 1e-9);
    EXPECT_LT(em.dual_gap(), 1e-8);
    EXPECT_NO_THROW(em.require_spd());
    // a whole-period shift leaves the cell problem unchanged
    Eigen::VectorXd s(1);
    s << 1.0;
    const EffectiveMatrix sh = regime_i(A.shifted(s), 1.0, 1.0, 8, 16);
    EXPECT_LT((sh.table - em.table).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CellRegimeI, AsymptoticFieldUsesPeriodicPart)
{
    const auto P = oscillatory();
    DecayMode dm{0.5 * Eigen::Matrix2d::Identity(), Eigen::VectorXd::Constant(1, 0.5), 0.2};
    const CoefficientField A(2, P.base(), P.modes(), {1.0}, dm, 1.0, 3.5);
    const EffectiveMatrix a = regime_i(A, 1.0, 1.0, 8, 8);
    const EffectiveMatrix b = regime_i(P, 1.0, 1.0, 8, 8);
    EXPECT_LT((a.table - b.table).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(CellRegimeI, ThreeDimensionalIdentity)
{
    const auto A = CoefficientField::identity(3);
    const auto cells = solve_cell_regime_i<3>(A, 1.0, 1.0, cell_mesh<3>(1, 16));
    const EffectiveMatrix em = effective_matrix(classify_regime(1.0, 2.0), cells, A, 1.0, 1.0);
    const double exact = 2.0 * (1.0 - std::tanh(1.0));
    EXPECT_NEAR(em.table(0, 0), exact, 1e-6);
    EXPECT_NEAR(em.table(1, 1), exact, 1e-6);
    EXPECT_LT(std::abs(em.table(0, 1)), 1e-12);
    EXPECT_LT(em.extended_max(), 1e-12);
}

TEST(CellRegimeI, RejectsBadParameters)
{
    const auto A = CoefficientField::identity(2);
    EXPECT_THROW(solve_cell_regime_i<2>(A, 0.0, 1.0, cell_mesh<2>(2, 4)), Error);
    EXPECT_THROW(solve_cell_regime_i<2>(A, 1.0, -1.0, cell_mesh<2>(2, 4)), Error);
    try {
        solve_cell_regime_i<2>(CoefficientField::identity(3), 1.0, 1.0, cell_mesh<2>(2, 4));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::shape_error);
    }
}

TEST(CellRegimeIII, ParabolicProfile)
{
    const auto A = CoefficientField::identity(2);
    const auto cells = solve_cell_regime_iii<2>(A, cell_mesh<2>(2, 16));
    const EffectiveMatrix em = effective_matrix(classify_regime(1.0, 1.0), cells, A, 1.0, 1.0);
    EXPECT_NEAR(em.table(0, 0), 2.0 / 3.0, 1e-4);
    // quadratic profile is in the Q2 space
    EXPECT_NEAR(em.table(0, 0), 2.0 / 3.0, 1e-11);
    EXPECT_NEAR(cells.eval_w(0, Point<2>(0.3, 0.5))[0], 0.5 * (1 - 0.25), 1e-12);
    EXPECT_NEAR(cells.eval_w(0, Point<2>(7.3, 0.5))[0], 0.5 * (1 - 0.25), 1e-12);
    EXPECT_LT(em.dual_gap(), 1e-10);
}

TEST(CellRegimeIII, VerticalProfileCoefficient)
{
    // A = (1 + zeta^2) I gives w = (ln 2 - ln(1 + zeta^2)) / 2 and int w = 2 - pi/2
    const CoefficientField A(2, Eigen::Matrix2d::Identity(), {}, {1.0, 0.0, 1.0});
    const auto cells = solve_cell_regime_iii<2>(A, cell_mesh<2>(2, 32));
    const EffectiveMatrix em = effective_matrix(classify_regime(1.0, 1.0), cells, A, 1.0, 1.0);
    EXPECT_NEAR(em.table(0, 0), 2.0 - std::numbers::pi / 2.0, 1e-3);
    EXPECT_NEAR(em.table(0, 0), 2.0 - std::numbers::pi / 2.0, 1e-6);
}

TEST(CellRegimeIII, ThreeDimensionalIdentity)
{
    const auto A = CoefficientField::identity(3);
    const auto cells = solve_cell_regime_iii<3>(A, cell_mesh<3>(1, 4));
    const EffectiveMatrix em = effective_matrix(classify_regime(1.0, 0.5), cells, A, 1.0, 1.0);
    EXPECT_LT((em.hat() - (2.0 / 3.0) * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(CellRegimeIII, AsymptoticUnsupported)
{
    DecayMode dm{Eigen::Matrix2d::Identity(), Eigen::VectorXd::Zero(1), 1.0};
    const CoefficientField A(2, 2.0 * Eigen::Matrix2d::Identity(), {}, {1.0}, dm);
    try {
        solve_cell_regime_iii<2>(A, cell_mesh<2>(2, 4));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::unsupported_regime_coefficient);
    }
}

TEST(CellRegimeII, LevelsMatchClosedForm)
{
    const double mu = 2.0;
    const auto cells = solve_cell_regime_ii<2>(mu, cell_mesh<2>(1, 64), {1, 2, 4});
    for (std::size_t k = 0; k < cells.n_list.size(); ++k)
        EXPECT_NEAR(cells.level_matrix[k](0, 0), level_value(mu, cells.n_list[k]), 1e-6) << "n = " << cells.n_list[k];
}

TEST(CellRegimeII, ExtrapolatesToIdentity)
{
    const double mu = 2.0;
    const auto cells = solve_cell_regime_ii<2>(mu, cell_mesh<2>(2, 32));
    const EffectiveMatrix em = effective_matrix(classify_regime(1.0, 3.0), cells, CoefficientField::identity(2), mu, 1.0);
    EXPECT_NEAR(em.table(0, 0), 1.0, 1e-3);
    EXPECT_LT(em.symmetry_error(), 1e-12);
    // |w_n| + (1/n)|grad w_n| stays bounded along the levels
    const double b0 = cells.level_bound.front()[0];
    for (const auto& b : cells.level_bound)
        EXPECT_LE(b[0], 1.1 * b0);
}

TEST(CellRegimeII, Validation)
{
    EXPECT_THROW(solve_cell_regime_ii<2>(0.0, cell_mesh<2>(1, 4)), Error);
    EXPECT_THROW(solve_cell_regime_ii<2>(1.0, cell_mesh<2>(1, 4), {4, 8}), Error);
    EXPECT_THROW(solve_cell_regime_ii<2>(1.0, cell_mesh<2>(1, 4), {4, 4, 8}), Error);
}

TEST(Extrapolation, WeightsReproduceQuadraticsInOneOverN)
{
    const auto w = extrapolation_weights(8, 16, 32);
    EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-14);
    auto v = [](double n) { return 0.7 - 1.3 / n + 4.0 / (n * n); };
    EXPECT_NEAR(w[0] * v(8) + w[1] * v(16) + w[2] * v(32), 0.7, 1e-13);
}

TEST(Upscaling, RegimeMismatch)
{
    const auto A = CoefficientField::identity(2);
    const auto cells = solve_cell_regime_i<2>(A, 1.0, 1.0, cell_mesh<2>(2, 4));
    try {
        effective_matrix(classify_regime(1.0, 3.0), cells, A, 1.0, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::regime_mismatch);
    }
}

TEST(Upscaling, RequireSpdRejects)
{
    EffectiveMatrix em;
    em.table = Eigen::Matrix2d::Zero();
    em.table(0, 0) = -1.0;
    EXPECT_THROW(em.require_spd(), Error);
    em.table(0, 0) = std::nan("");
    EXPECT_THROW(em.require_spd(), Error);
}
