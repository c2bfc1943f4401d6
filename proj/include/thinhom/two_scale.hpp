// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "thinhom/cell_solver.hpp"
#include "thinhom/macro_solver.hpp"

namespace thinhom {

/// u0(xbar, y) = sum_{j < d-1} w_j(y) (f1 - grad p0)_j(xbar), the two-scale limit velocity.
template <int Dim>
class TwoScaleVelocity {
public:
    static constexpr int MDim = Dim - 1;

    TwoScaleVelocity(const CellSolution<Dim>& cells, const MacroSolution<MDim>& macro) : cells_(&cells), macro_(&macro)
    {
        if (static_cast<int>(cells.w.size()) != Dim)
            throw Error(Errc::shape_error, "cell solution is incomplete");
        cell_means_.resize(Dim, MDim);
        for (int i = 0; i < Dim; ++i) {
            const Eigen::VectorXd Fi = detail::unit_load(cells.V, i);
            for (int j = 0; j < MDim; ++j)
                cell_means_(i, j) = Fi.dot(cells.w[j]);
        }
    }

    const CellSolution<Dim>& cells() const { return *cells_; }
    const MacroSolution<MDim>& macro() const { return *macro_; }

    Eigen::Matrix<double, MDim, 1> drive(const Eigen::VectorXd& xbar) const { return macro_->drive(Point<MDim>(xbar)); }

    /// u0 at macro point xbar and cell point y (y' taken modulo the period).
    Eigen::VectorXd operator()(const Eigen::VectorXd& xbar, const Point<Dim>& y) const
    {
        return evaluate(drive(xbar), y);
    }

    /// u0 for a precomputed driving force.
    Eigen::VectorXd evaluate(const Eigen::Matrix<double, MDim, 1>& D, const Point<Dim>& y) const
    {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(Dim);
        for (int j = 0; j < MDim; ++j)
            if (D[j] != 0.0)
                u += D[j] * cells_->eval_w(j, y);
        return u;
    }

    /// int_{-1}^{1} M(u0(xbar, .)) dzeta, all d components.
    Eigen::VectorXd thin_mean(const Eigen::VectorXd& xbar) const { return cell_means_ * drive(xbar); }

    /// int M(w_j) . e_i, the d x (d-1) table of cell means.
    const Eigen::MatrixXd& cell_means() const { return cell_means_; }

private:
    const CellSolution<Dim>* cells_;
    const MacroSolution<MDim>* macro_;
    Eigen::MatrixXd cell_means_;
};

template <int Dim>
TwoScaleVelocity<Dim> reconstruct_two_scale_velocity(const CellSolution<Dim>& cells, const MacroSolution<Dim - 1>& macro)
{
    if (cells.regime != macro.regime)
        throw Error(Errc::regime_mismatch, "cell and macro solutions belong to different regimes");
    return TwoScaleVelocity<Dim>(cells, macro);
}

/// Vertical-mean and boundary-flux checks of a reconstructed limit.
template <int Dim>
VerticalMeanReport vertical_mean_check(const TwoScaleVelocity<Dim>& u0, int samples_per_axis = 9)
{
    constexpr int MDim = Dim - 1;
    const auto& mesh = *u0.macro().mesh;
    VerticalMeanReport r;
    std::size_t total = 1;
    for (int k = 0; k < MDim; ++k)
        total *= static_cast<std::size_t>(samples_per_axis);
    for (std::size_t i = 0; i < total; ++i) {
        Eigen::VectorXd x(MDim);
        std::size_t q = i;
        for (int k = 0; k < MDim; ++k) {
            const double t = (static_cast<double>(q % samples_per_axis) + 0.5) / samples_per_axis;
            x[k] = mesh.lower(k) + t * mesh.extent(k);
            q /= samples_per_axis;
        }
        r.vertical_mean = std::max(r.vertical_mean, std::abs(u0.thin_mean(x)[Dim - 1]));
    }
    r.boundary_flux = boundary_flux_residual(u0.macro());
    return r;
}

} // namespace thinhom
