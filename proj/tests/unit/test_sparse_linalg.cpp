// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "thinhom/sparse_linalg.hpp"

using namespace thinhom;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

/// Small Stokes problem on the periodic cell: -lap u + u + grad p = e_1.
SaddleSystem cell_stokes(int nx, int nz, bool with_gauge = true)
{
    Geometry g;
    auto m = std::make_shared<StructuredMesh<2>>(build_cell_mesh<2>(g, nx, nz));
    const auto V = FunctionSpace<2>::velocity(m);
    const auto Q = FunctionSpace<2>::pressure(m);
    SaddleSystem s;
    s.K = assemble_diffusion(V, [](const Point<2>&) { return Eigen::Matrix2d::Identity().eval(); }, 1.0);
    s.K += assemble_mass(V, 1.0);
    s.B = assemble_divergence(V, Q);
    if (with_gauge)
        s.g = gauge_vector(Q);
    s.f = assemble_load(V, [](const Point<2>& y) { return Eigen::Vector2d(1.0 + y[0], std::sin(3 * y[1])).eval(); });
    return s;
}

} // namespace

TEST(Solve, IdentityNoCoupling)
{
    SaddleSystem s;
    s.K = dense_to_sparse(Eigen::MatrixXd::Identity(4, 4));
    s.B = SparseMatrix(0, 4);
    s.f = Eigen::Vector4d(1, -2, 3, 0.5);
    const auto x = solve_sparse(s, 1e-12);
    EXPECT_LT((x.u - s.f).norm(), 1e-15);
    EXPECT_EQ(x.p.size(), 0);
}

TEST(Solve, TwoByTwo)
{
    SaddleSystem s;
    Eigen::Matrix2d k;
    k << 2, 1, 1, 2;
    s.K = dense_to_sparse(k);
    s.B = SparseMatrix(0, 2);
    s.f = Eigen::Vector2d(3, 3);
    const auto x = solve_sparse(s, 1e-12);
    EXPECT_NEAR(x.u[0], 1.0, 1e-14);
    EXPECT_NEAR(x.u[1], 1.0, 1e-14);
}

TEST(Solve, StokesGaugedAndResidualRechecked)
{
    const SaddleSystem s = cell_stokes(4, 8);
    const auto x = solve_sparse(s, 1e-10);
    EXPECT_LE(residual(s, x), 1e-10);
    EXPECT_NEAR(x.residual, residual(s, x), 1e-16);
    EXPECT_LT(std::abs(s.g.dot(x.p)), 1e-12);
    EXPECT_LT((s.B * x.u).norm(), 1e-9 * x.u.norm());
}

TEST(Solve, MissingGaugeIsSingular)
{
    const SaddleSystem s = cell_stokes(2, 4, false);
    try {
        solve_sparse(s, 1e-10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::singular_system);
    }
    SaddleSystem z = cell_stokes(2, 4);
    z.g.setZero();
    EXPECT_THROW(solve_sparse(z, 1e-10), Error);
}

TEST(Solve, BadTolerance)
{
    const SaddleSystem s = cell_stokes(2, 4);
    EXPECT_THROW(solve_sparse(s, 0.0), Error);
    EXPECT_THROW(solve_sparse(s, 1.0), Error);
}

TEST(Solve, MinresMatchesDirect)
{
    const SaddleSystem s = cell_stokes(4, 8);
    SolverOptions o;
    o.kind = SolverKind::minres;
    o.tol = 1e-8;
    const auto xi = solve_sparse(s, o);
    const auto xd = solve_sparse(s, 1e-10);
    EXPECT_LE(xi.residual, 1e-8);
    EXPECT_LT((xi.u - xd.u).norm(), 1e-5 * xd.u.norm());
}

TEST(Solve, MinresNonConvergenceCarriesResidual)
{
    const SaddleSystem s = cell_stokes(4, 8);
    SolverOptions o;
    o.kind = SolverKind::minres;
    o.tol = 1e-12;
    o.max_iterations = 3;
    try {
        solve_sparse(s, o);
        FAIL();
    } catch (const ConvergenceFailure& e) {
        EXPECT_EQ(e.code(), Errc::convergence_failure);
        EXPECT_GT(e.final_residual(), 1e-12);
    }
}

TEST(Residual, Normalization)
{
    const SaddleSystem s = cell_stokes(2, 4);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(s.n_velocity());
    const Eigen::VectorXd p0 = Eigen::VectorXd::Zero(s.n_pressure());
    EXPECT_NEAR(residual(s, u0, p0), 1.0, 1e-15);
    const auto x = solve_sparse(s, 1e-12);
    EXPECT_LT(residual(s, x), 1e-12);
}

TEST(Residual, LinearInPerturbation)
{
    const SaddleSystem s = cell_stokes(3, 4);
    const auto x = solve_sparse(s, 1e-13);
    Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(s.n_velocity(), -1.0, 1.0);
    const double r1 = residual(s, Eigen::VectorXd(x.u + 1e-4 * d), x.p, x.lambda);
    const double r2 = residual(s, Eigen::VectorXd(x.u + 2e-4 * d), x.p, x.lambda);
    const double r4 = residual(s, Eigen::VectorXd(x.u + 4e-4 * d), x.p, x.lambda);
    EXPECT_NEAR(r2 / r1, 2.0, 1e-5);
    EXPECT_NEAR(r4 / r2, 2.0, 1e-5);
}

TEST(Solve, MultipleRightHandSides)
{
    const SaddleSystem s = cell_stokes(3, 6);
    SaddleFactorization fac(s);
    const auto a = fac.solve(s.f, Eigen::VectorXd(), 1e-10);
    const auto b = fac.solve(Eigen::VectorXd(2.0 * s.f), Eigen::VectorXd(), 1e-10);
    EXPECT_LT((b.u - 2.0 * a.u).norm(), 1e-12 * b.u.norm());
}

TEST(Solve, Deterministic)
{
    const SaddleSystem s = cell_stokes(4, 8);
    const auto a = solve_sparse(s, 1e-10), b = solve_sparse(s, 1e-10);
    EXPECT_EQ(0, std::memcmp(a.u.data(), b.u.data(), sizeof(double) * a.u.size()));
}
