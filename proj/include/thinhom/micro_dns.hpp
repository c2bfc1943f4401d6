// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/coefficients.hpp"
#include "thinhom/error.hpp"
#include "thinhom/fem_assembly.hpp"
#include "thinhom/macro_solver.hpp"
#include "thinhom/sparse_linalg.hpp"

namespace thinhom {

struct NormRecord {
    double u_l2 = 0.0;
    double grad_l2 = 0.0;
    double u_l4 = 0.0;
    double p_l2 = 0.0;
    double r2 = std::numeric_limits<double>::quiet_NaN();  //!< |u|_2 / (eps |grad u|_2)
    double r4 = std::numeric_limits<double>::quiet_NaN();  //!< |u|_4 / (eps^(1/2) |grad u|_2)
};

struct DnsOptions {
    double picard_tol = 1e-10;
    int max_iters = 50;
    double tol = 1e-10;
};

/// Discrete (u_eps, p_eps) on the thin layer and the bookkeeping of the fixed-point solve.
template <int Dim>
struct MicroSolution {
    explicit MicroSolution(std::shared_ptr<const StructuredMesh<Dim>> m)
        : mesh(m), V(FunctionSpace<Dim>::velocity(m)), Q(FunctionSpace<Dim>::pressure(m))
    {}

    std::shared_ptr<const StructuredMesh<Dim>> mesh;
    FunctionSpace<Dim> V;
    FunctionSpace<Dim> Q;
    Eigen::VectorXd u;
    Eigen::VectorXd p;
    double eps = 0.0;
    double K_eps = 0.0;
    int picard_iterations = 0;
    double final_update = 0.0;
    std::vector<double> update_history;
    double solver_residual = 0.0;
    double div_residual = 0.0;
    double pressure_mean = 0.0;  //!< int p_eps
    double alpha_ell = 0.0;      //!< sampled ellipticity constant of A
    double energy_diffusion = 0.0;  //!< int A grad u : grad u
    double energy_reaction = 0.0;   //!< (mu/K_eps) int |u|^2
    double work = 0.0;              //!< int f . u
    double convection_work = 0.0;   //!< (rho/phi^2) int ((u . grad) u) . u
    NormRecord norms;
};

/// A(x/eps) on the thin layer, with zeta clamped against round-off at the walls.
template <int Dim>
auto thin_coefficient(const CoefficientField& A, double eps)
{
    return [&A, eps](const Point<Dim>& x) {
        Point<Dim> y = x / eps;
        y[Dim - 1] = std::clamp(y[Dim - 1], -1.0, 1.0);
        return A.eval<Dim>(y);
    };
}

/// Quadrature-exact norms of a discrete pair (u, p) and the Sobolev ratios at thickness eps.
template <int Dim>
NormRecord field_norms(const FunctionSpace<Dim>& V, const Eigen::VectorXd& u, const FunctionSpace<Dim>& Q,
                       const Eigen::VectorXd& p, double eps)
{
    NormRecord n;
    n.u_l2 = std::sqrt(integrate_field(V, u, [](const Point<Dim>&, const Eigen::VectorXd& v, const Eigen::MatrixXd&) {
        return v.squaredNorm();
    }));
    n.grad_l2 = std::sqrt(integrate_field(V, u, [](const Point<Dim>&, const Eigen::VectorXd&, const Eigen::MatrixXd& g) {
        return g.squaredNorm();
    }));
    n.u_l4 = std::pow(integrate_field(V, u, [](const Point<Dim>&, const Eigen::VectorXd& v, const Eigen::MatrixXd&) {
        return std::pow(v.squaredNorm(), 2);
    }), 0.25);
    if (p.size() > 0)
        n.p_l2 = std::sqrt(integrate_field(Q, p, [](const Point<Dim>&, const Eigen::VectorXd& v, const Eigen::MatrixXd&) {
            return v[0] * v[0];
        }));
    if (n.grad_l2 > 0.0) {
        n.r2 = n.u_l2 / (eps * n.grad_l2);
        n.r4 = n.u_l4 / (std::sqrt(eps) * n.grad_l2);
    }
    return n;
}

template <int Dim>
NormRecord apriori_norms(const MicroSolution<Dim>& s)
{
    return field_norms(s.V, s.u, s.Q, s.p, s.eps);
}

/// Picard (Oseen) iteration for
///   -div(A(x/eps) grad u) + (mu/K_eps) u + (rho/phi^2)(u . grad) u + grad p = (f1, 0),  div u = 0,
/// with u = 0 on the walls, started from u = 0.
template <int Dim>
MicroSolution<Dim> solve_dlb(std::shared_ptr<const StructuredMesh<Dim>> thin_mesh, const CoefficientField& A,
                             const FluidParams& params, double eps, double K_eps, const DnsOptions& opt = {})
{
    params.validate();
    if (!(K_eps > 0.0))
        throw Error(Errc::invalid_parameter, "K_eps must be positive");
    if (!(eps > 0.0))
        throw Error(Errc::invalid_parameter, "eps must be positive");
    if (A.dim() != Dim)
        throw Error(Errc::shape_error, "coefficient dimension does not match the thin mesh");
    if (opt.max_iters < 1)
        throw Error(Errc::invalid_parameter, "max_iters must be positive");
    if (!A.horizontally_constant())
        for (int k = 0; k + 1 < Dim; ++k) {
            const double per_period = thin_mesh->cells(k) * eps / thin_mesh->extent(k);
            if (per_period < 4.0 - 1e-9)
                throw Error(Errc::invalid_resolution, "the thin mesh must resolve each coefficient period with >= 4 elements");
        }
    MicroSolution<Dim> s(std::move(thin_mesh));
    s.eps = eps;
    s.K_eps = K_eps;
    s.alpha_ell = check_ellipticity(A, 512).alpha;
    const SparseMatrix KA = assemble_diffusion(s.V, thin_coefficient<Dim>(A, eps), 1.0);
    const SparseMatrix M = assemble_mass(s.V, params.mu / K_eps);
    SaddleSystem sys;
    sys.K = KA + M;
    sys.B = assemble_divergence(s.V, s.Q);
    sys.g = gauge_vector(s.Q);
    sys.f = assemble_load(s.V, [&](const Point<Dim>& x) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(Dim);
        f.head(Dim - 1) = params.f1(Eigen::VectorXd(x.head(Dim - 1)));
        return f;
    });
    const double factor = params.convection_factor();
    s.u = Eigen::VectorXd::Zero(s.V.n_dofs());
    s.p = Eigen::VectorXd::Zero(s.Q.n_dofs());
    bool converged = false;
    for (int it = 1; it <= opt.max_iters; ++it) {
        sys.N = factor != 0.0 ? assemble_convection(s.V, s.u, factor) : SparseMatrix();
        const SaddleSolution sol = solve_sparse(sys, opt.tol);
        const double un = sol.u.norm();
        const double update = un > 0.0 ? (sol.u - s.u).norm() / un : (sol.u - s.u).norm();
        s.update_history.push_back(update);
        s.u = sol.u;
        s.p = sol.p;
        s.solver_residual = sol.residual;
        s.picard_iterations = it;
        s.final_update = update;
        if (update <= opt.picard_tol || factor == 0.0) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw PicardDivergence("Picard iteration did not reach the update tolerance in "
                                   + std::to_string(opt.max_iters) + " iterations",
                               s.update_history);
    s.div_residual = (sys.B * s.u).norm() / std::max(s.u.norm(), sys.f.norm());
    s.pressure_mean = sys.g.dot(s.p);
    s.energy_diffusion = s.u.dot(KA * s.u);
    s.energy_reaction = s.u.dot(M * s.u);
    s.work = sys.f.dot(s.u);
    if (factor != 0.0)
        s.convection_work = s.u.dot(assemble_convection(s.V, s.u, factor) * s.u);
    s.norms = apriori_norms(s);
    return s;
}

} // namespace thinhom
