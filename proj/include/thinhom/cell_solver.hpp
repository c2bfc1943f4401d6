// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/coefficients.hpp"
#include "thinhom/error.hpp"
#include "thinhom/fem_assembly.hpp"
#include "thinhom/geometry_mesh.hpp"
#include "thinhom/sparse_linalg.hpp"

namespace thinhom {

/// Cell responses w_i, pi_i to the unit forcings e_i, i = 0..Dim-1 (the last one is vertical).
template <int Dim>
struct CellSolution {
    CellSolution(Regime r, std::shared_ptr<const StructuredMesh<Dim>> m)
        : regime(r), mesh(m), V(FunctionSpace<Dim>::velocity(m)), Q(FunctionSpace<Dim>::pressure(m))
    {}

    Regime regime;
    std::shared_ptr<const StructuredMesh<Dim>> mesh;
    FunctionSpace<Dim> V;
    FunctionSpace<Dim> Q;
    std::vector<Eigen::VectorXd> w;
    std::vector<Eigen::VectorXd> pi;
    std::vector<double> div_residual;
    double tol = 1e-10;
    double mu = 1.0;
    double K = std::numeric_limits<double>::quiet_NaN();

    // vanishing-viscosity levels (regime II only)
    std::vector<int> n_list;
    std::vector<std::vector<Eigen::VectorXd>> w_levels;
    std::vector<std::vector<Eigen::VectorXd>> pi_levels;
    std::vector<Eigen::MatrixXd> level_matrix;      //!< mu int w_i . w_j per level
    std::vector<Eigen::MatrixXd> level_load;        //!< int w_j . e_i per level
    std::vector<Eigen::VectorXd> level_bound;       //!< (1/n)|grad w_i| + |w_i| per level
    Eigen::MatrixXd extrapolated_matrix;
    double extrapolation_residual = 0.0;

    int dim() const { return Dim; }

    /// Value of w_i at a cell point; y' is reduced modulo the period.
    Eigen::VectorXd eval_w(int i, Point<Dim> y) const
    {
        for (int k = 0; k + 1 < Dim; ++k)
            y[k] -= std::floor(y[k]);
        return V.evaluate(w[i], y);
    }
};

namespace detail {

template <int Dim>
Eigen::VectorXd unit_load(const FunctionSpace<Dim>& V, int i)
{
    return assemble_load(V, [i](const Point<Dim>&) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(Dim);
        e[i] = 1.0;
        return e;
    });
}

/// Solves K w - B^T pi = e_i, -B w = 0, g^T pi = 0 for all i with one factorization.
template <int Dim>
void solve_unit_forcings(const FunctionSpace<Dim>& V, const FunctionSpace<Dim>& Q, const SparseMatrix& K, double tol,
                         std::vector<Eigen::VectorXd>& w, std::vector<Eigen::VectorXd>& pi, std::vector<double>& div_res)
{
    SaddleSystem sys;
    sys.K = K;
    sys.B = assemble_divergence(V, Q);
    sys.g = gauge_vector(Q);
    sys.f = Eigen::VectorXd::Zero(V.n_dofs());
    SaddleFactorization fac(sys);
    w.assign(Dim, {});
    pi.assign(Dim, {});
    div_res.assign(Dim, 0.0);
    for (int i = 0; i < Dim; ++i) {
        const Eigen::VectorXd F = unit_load(V, i);
        const SaddleSolution s = fac.solve(F, Eigen::VectorXd(), tol);
        w[i] = s.u;
        pi[i] = s.p;
        div_res[i] = (sys.B * s.u).norm() / std::max(s.u.norm(), F.norm());
    }
}

template <int Dim>
auto cell_coefficient(const CoefficientField& A)
{
    if (A.dim() != Dim)
        throw Error(Errc::shape_error, "coefficient dimension does not match the cell mesh");
    return [&A](const Point<Dim>& y) { return A.eval<Dim>(y); };
}

} // namespace detail

/// Regime I: -div(A grad w) + (mu/K) w + grad pi = e_i on Y' x I.
template <int Dim>
CellSolution<Dim> solve_cell_regime_i(const CoefficientField& A, double mu, double K,
                                      std::shared_ptr<const StructuredMesh<Dim>> cell_mesh, double tol = 1e-10)
{
    if (!(mu > 0.0) || !(K > 0.0) || !std::isfinite(K))
        throw Error(Errc::invalid_parameter, "regime I needs mu > 0 and a finite K > 0");
    // the C_0 part of an asymptotic-periodic field has zero mean and drops out of the cell problem
    const CoefficientField Ap = A.periodic_part();
    check_ellipticity(A, 512);
    CellSolution<Dim> s(Regime::I, std::move(cell_mesh));
    s.tol = tol;
    s.mu = mu;
    s.K = K;
    SparseMatrix Kmat = assemble_diffusion(s.V, detail::cell_coefficient<Dim>(Ap), 1.0);
    Kmat += assemble_mass(s.V, mu / K);
    detail::solve_unit_forcings(s.V, s.Q, Kmat, tol, s.w, s.pi, s.div_residual);
    return s;
}

/// Regime III: -div(A grad w) + grad pi = e_j; periodic coefficients only.
template <int Dim>
CellSolution<Dim> solve_cell_regime_iii(const CoefficientField& A, std::shared_ptr<const StructuredMesh<Dim>> cell_mesh,
                                        double tol = 1e-10)
{
    if (A.cls() == CoefficientClass::asymptotic_periodic)
        throw Error(Errc::unsupported_regime_coefficient,
                    "the regime III cell problem is solvable for periodic coefficients only");
    check_ellipticity(A, 512);
    CellSolution<Dim> s(Regime::III, std::move(cell_mesh));
    s.tol = tol;
    const SparseMatrix Kmat = assemble_diffusion(s.V, detail::cell_coefficient<Dim>(A), 1.0);
    detail::solve_unit_forcings(s.V, s.Q, Kmat, tol, s.w, s.pi, s.div_residual);
    return s;
}

/// Weights of the exact fit v = v_inf + c1/n + c2/n^2 through three levels, evaluated at n = infinity.
inline std::array<double, 3> extrapolation_weights(double n1, double n2, double n3)
{
    const double h[3] = {1.0 / n1, 1.0 / n2, 1.0 / n3};
    std::array<double, 3> wts{};
    for (int k = 0; k < 3; ++k) {
        double l = 1.0;
        for (int m = 0; m < 3; ++m)
            if (m != k)
                l *= h[m] / (h[m] - h[k]);
        wts[k] = l;
    }
    return wts;
}

/// Regime II via the regularized problems -(1/n^2) lap w + mu w + grad pi = e_i, extrapolated in n.
template <int Dim>
CellSolution<Dim> solve_cell_regime_ii(double mu, std::shared_ptr<const StructuredMesh<Dim>> cell_mesh,
                                       const std::vector<int>& n_list = {4, 8, 16, 32}, double tol = 1e-10)
{
    if (!(mu > 0.0))
        throw Error(Errc::invalid_parameter, "mu must be positive");
    if (n_list.size() < 3)
        throw Error(Errc::invalid_parameter, "regularization needs at least three levels");
    for (std::size_t k = 0; k < n_list.size(); ++k)
        if (n_list[k] < 1 || (k > 0 && n_list[k] <= n_list[k - 1]))
            throw Error(Errc::invalid_parameter, "regularization levels must be positive and strictly increasing");
    CellSolution<Dim> s(Regime::II, std::move(cell_mesh));
    s.tol = tol;
    s.mu = mu;
    s.n_list = n_list;
    const SparseMatrix lap = assemble_diffusion(s.V, [](const Point<Dim>&) {
        return Eigen::Matrix<double, Dim, Dim>::Identity().eval();
    }, 1.0);
    const SparseMatrix mass = assemble_mass(s.V, 1.0);
    std::vector<Eigen::VectorXd> loads;
    for (int i = 0; i < Dim; ++i)
        loads.push_back(detail::unit_load(s.V, i));
    for (int n : n_list) {
        const SparseMatrix Kmat = (1.0 / (double(n) * n)) * lap + mu * mass;
        std::vector<Eigen::VectorXd> w, pi;
        std::vector<double> dr;
        detail::solve_unit_forcings(s.V, s.Q, Kmat, tol, w, pi, dr);
        Eigen::MatrixXd m(Dim, Dim), l(Dim, Dim);
        Eigen::VectorXd bound(Dim);
        for (int i = 0; i < Dim; ++i) {
            for (int j = 0; j < Dim; ++j) {
                m(i, j) = mu * w[i].dot(mass * w[j]);
                l(i, j) = loads[i].dot(w[j]);
            }
            bound[i] = std::sqrt(w[i].dot(lap * w[i])) / n + std::sqrt(w[i].dot(mass * w[i]));
        }
        s.w_levels.push_back(std::move(w));
        s.pi_levels.push_back(std::move(pi));
        s.level_matrix.push_back(m);
        s.level_load.push_back(l);
        s.level_bound.push_back(bound);
        s.div_residual = dr;
    }
    const std::size_t L = n_list.size();
    const auto wt = extrapolation_weights(n_list[L - 3], n_list[L - 2], n_list[L - 1]);
    auto extrap = [&](const auto& a, const auto& b, const auto& c) { return (wt[0] * a + wt[1] * b + wt[2] * c).eval(); };
    s.w.resize(Dim);
    s.pi.resize(Dim);
    for (int i = 0; i < Dim; ++i) {
        s.w[i] = extrap(s.w_levels[L - 3][i], s.w_levels[L - 2][i], s.w_levels[L - 1][i]);
        s.pi[i] = extrap(s.pi_levels[L - 3][i], s.pi_levels[L - 2][i], s.pi_levels[L - 1][i]);
    }
    s.extrapolated_matrix = extrap(s.level_matrix[L - 3], s.level_matrix[L - 2], s.level_matrix[L - 1]);
    // two-level c/n estimate as the model check
    const double n2 = n_list[L - 2], n3 = n_list[L - 1];
    const Eigen::MatrixXd two = (n3 * s.level_matrix[L - 1] - n2 * s.level_matrix[L - 2]) / (n3 - n2);
    s.extrapolation_residual = (s.extrapolated_matrix - two).cwiseAbs().maxCoeff();
    return s;
}

} // namespace thinhom
