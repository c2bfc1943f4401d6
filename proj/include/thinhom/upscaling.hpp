// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "thinhom/cell_solver.hpp"
#include "thinhom/coefficients.hpp"
#include "thinhom/error.hpp"

namespace thinhom {

/// Upscaled matrix A-hat together with the full d x d table (last row/column = vertical direction).
struct EffectiveMatrix {
    Regime regime = Regime::I;
    Eigen::MatrixXd table;  //!< regime formula, d x d
    Eigen::MatrixXd dual;   //!< int M(w_j) . e_i, d x d (Galerkin form)

    int d() const { return static_cast<int>(table.rows()); }

    /// The (d-1) x (d-1) horizontal block.
    Eigen::MatrixXd hat() const { return table.topLeftCorner(d() - 1, d() - 1); }

    double symmetry_error() const
    {
        const Eigen::MatrixXd h = hat();
        const double scale = h.norm();
        return scale > 0.0 ? (h - h.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    }

    double min_eigenvalue() const
    {
        const Eigen::MatrixXd h = hat();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
        return eig.eigenvalues().minCoeff();
    }

    /// max_i |a_id|, |a_di| over horizontal i.
    double extended_max() const
    {
        const int n = d();
        double m = 0.0;
        for (int i = 0; i + 1 < n; ++i)
            m = std::max({m, std::abs(table(i, n - 1)), std::abs(table(n - 1, i))});
        return m;
    }

    /// Largest relative gap between the regime formula and the Galerkin form on the horizontal block.
    double dual_gap() const
    {
        const Eigen::MatrixXd h = hat();
        const Eigen::MatrixXd g = dual.topLeftCorner(d() - 1, d() - 1);
        return (h - g).cwiseAbs().maxCoeff() / std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    }

    /// Throws invalid-effective-matrix unless the horizontal block is symmetric positive definite.
    void require_spd(double sym_tol = 1e-10) const
    {
        if (!hat().allFinite())
            throw Error(Errc::invalid_effective_matrix, "effective matrix has non-finite entries");
        if (symmetry_error() > sym_tol)
            throw Error(Errc::invalid_effective_matrix, "effective matrix is not symmetric");
        if (!(min_eigenvalue() > 0.0))
            throw Error(Errc::invalid_effective_matrix, "effective matrix is not positive definite");
    }
};

/// Effective matrix from cell solutions by the regime's formula:
///   I:   int M(A grad w_i : grad w_j) + (mu/K) int M(w_i . w_j)
///   II:  mu int M(w_i . w_j)  (extrapolated in the regularization level)
///   III: int M(A grad w_i : grad w_j), cross-checked against int M(w_j) . e_i
template <int Dim>
EffectiveMatrix effective_matrix(const RegimeSpec& regime, const CellSolution<Dim>& cells, const CoefficientField& A,
                                 double mu, double K)
{
    if (regime.regime != cells.regime)
        throw Error(Errc::regime_mismatch, "cell solutions were computed for regime " + to_string(cells.regime)
                                               + " but regime " + to_string(regime.regime) + " was requested");
    if (static_cast<int>(cells.w.size()) != Dim)
        throw Error(Errc::shape_error, "cell solution is incomplete");
    EffectiveMatrix em;
    em.regime = regime.regime;
    em.table.resize(Dim, Dim);
    em.dual.resize(Dim, Dim);
    const auto& V = cells.V;
    if (regime.regime == Regime::II) {
        em.table = cells.extrapolated_matrix;
        const std::size_t L = cells.n_list.size();
        const auto wt = extrapolation_weights(cells.n_list[L - 3], cells.n_list[L - 2], cells.n_list[L - 1]);
        em.dual = wt[0] * cells.level_load[L - 3] + wt[1] * cells.level_load[L - 2] + wt[2] * cells.level_load[L - 1];
        return em;
    }
    const CoefficientField Ap = A.periodic_part();
    SparseMatrix E = assemble_diffusion(V, detail::cell_coefficient<Dim>(Ap), 1.0);
    if (regime.regime == Regime::I)
        E += assemble_mass(V, mu / K);
    for (int i = 0; i < Dim; ++i) {
        const Eigen::VectorXd Ew = E * cells.w[i];
        const Eigen::VectorXd Fi = detail::unit_load(V, i);
        for (int j = 0; j < Dim; ++j) {
            em.table(j, i) = cells.w[j].dot(Ew);
            em.dual(i, j) = Fi.dot(cells.w[j]);
        }
    }
    return em;
}

} // namespace thinhom
