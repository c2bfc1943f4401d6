// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/coefficients.hpp"
#include "thinhom/error.hpp"
#include "thinhom/fem_assembly.hpp"
#include "thinhom/geometry_mesh.hpp"
#include "thinhom/sparse_linalg.hpp"
#include "thinhom/upscaling.hpp"

namespace thinhom {

/// Limit pressure p0 (continuous Q1, mean zero) and the effective horizontal velocity on Omega.
template <int MDim>
struct MacroSolution {
    using Vec = Eigen::Matrix<double, MDim, 1>;
    using Mat = Eigen::Matrix<double, MDim, MDim>;

    MacroSolution(std::shared_ptr<const StructuredMesh<MDim>> m)
        : mesh(m), P(FunctionSpace<MDim>::pressure(m)), G(m, 1, MDim, false)
    {}

    Regime regime = Regime::I;
    std::shared_ptr<const StructuredMesh<MDim>> mesh;
    FunctionSpace<MDim> P;
    FunctionSpace<MDim> G;          //!< continuous Q1 vector space of the recovered gradient
    Mat Ahat = Mat::Identity();
    Forcing f1;
    bool driven_by_forcing = true;  //!< false in regime II, where u' = -A-hat grad p0
    Eigen::VectorXd p0;
    Eigen::VectorXd grad_p0;        //!< nodal averages of the element gradients of p0
    std::vector<Vec> u_prime;       //!< per element, at the element centre
    double residual = 0.0;
    double conservation_residual = 0.0;

    static Eigen::VectorXd as_dynamic(const Point<MDim>& x) { return Eigen::VectorXd(x); }

    Vec forcing(const Point<MDim>& x) const
    {
        if (!driven_by_forcing || !f1)
            return Vec::Zero();
        return Vec(f1(as_dynamic(x)));
    }

    double pressure(const Point<MDim>& x) const { return P.evaluate(p0, x)[0]; }

    /// Recovered (nodally averaged) gradient; second order on uniform meshes.
    Vec grad_p(const Point<MDim>& x) const
    {
        if (grad_p0.size() == 0)
            return Vec(P.evaluate_gradient(p0, x).row(0).transpose());
        return Vec(G.evaluate(grad_p0, x));
    }

    /// Piecewise-constant-per-direction gradient of the discrete p0 itself.
    Vec grad_p_raw(const Point<MDim>& x) const { return Vec(P.evaluate_gradient(p0, x).row(0).transpose()); }

    /// f1 - grad p0 (regimes I and III) or -grad p0 (regime II).
    Vec drive(const Point<MDim>& x) const { return forcing(x) - grad_p(x); }

    Vec velocity(const Point<MDim>& x) const { return Ahat * drive(x); }
};

/// Averages the element gradients of p0 at shared vertices into grad_p0.
template <int MDim>
void recover_gradient(MacroSolution<MDim>& s)
{
    const auto& mesh = *s.mesh;
    s.grad_p0 = Eigen::VectorXd::Zero(s.G.n_dofs());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(s.G.n_scalar_dofs());
    const int nl = s.G.local_size();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const int* ld = s.G.element_dofs(e);
        for (int a = 0; a < nl; ++a) {
            Point<MDim> t;
            int r = a;
            for (int k = 0; k < MDim; ++k) {
                t[k] = r % 2;
                r /= 2;
            }
            const Eigen::MatrixXd g = s.P.gradient_at(s.p0, e, t);
            for (int k = 0; k < MDim; ++k)
                s.grad_p0[s.G.dof(k, ld[a])] += g(0, k);
            count[ld[a]] += 1.0;
        }
    }
    for (int k = 0; k < MDim; ++k)
        for (Eigen::Index i = 0; i < count.size(); ++i)
            s.grad_p0[s.G.dof(k, static_cast<int>(i))] /= count[i];
}

/// Solves int A-hat grad p0 . grad q = int A-hat f1 . grad q (zero right side in regime II) with
/// natural boundary conditions and the mean-zero gauge; u' is evaluated per element.
template <int MDim>
MacroSolution<MDim> solve_macro(const Eigen::MatrixXd& Ahat, const Forcing& f1,
                                std::shared_ptr<const StructuredMesh<MDim>> macro_mesh, Regime regime, double tol = 1e-10)
{
    if (Ahat.rows() != MDim || Ahat.cols() != MDim)
        throw Error(Errc::shape_error, "effective matrix must be (d-1) x (d-1)");
    {
        EffectiveMatrix check;
        check.table = Eigen::MatrixXd::Zero(MDim + 1, MDim + 1);
        check.table.topLeftCorner(MDim, MDim) = Ahat;
        check.require_spd();
    }
    MacroSolution<MDim> s(std::move(macro_mesh));
    s.regime = regime;
    s.Ahat = Ahat;
    s.f1 = f1;
    s.driven_by_forcing = regime != Regime::II;
    const typename MacroSolution<MDim>::Mat A = s.Ahat;
    const SparseMatrix K = assemble_diffusion(s.P, [&A](const Point<MDim>&) { return A; }, 1.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.P.n_dofs());
    if (s.driven_by_forcing) {
        if (!f1)
            throw Error(Errc::invalid_parameter, "forcing f1 is not set");
        rhs = assemble_gradient_load(s.P, [&](const Point<MDim>& x) { return (A * s.forcing(x)).eval(); });
    }
    const Eigen::VectorXd g = gauge_vector(s.P);
    if (rhs.lpNorm<Eigen::Infinity>() == 0.0) {
        s.p0 = Eigen::VectorXd::Zero(s.P.n_dofs());
    } else {
        const GaugedSolution sol = solve_gauged(K, g, rhs, tol);
        s.p0 = sol.x;
        s.residual = sol.residual;
        project_gauge(g, s.p0);
    }
    recover_gradient(s);
    // weak conservation of u' against every pressure test function
    const Eigen::VectorXd flux = assemble_gradient_load(s.P, [&](const Point<MDim>& x) {
        return (s.Ahat * (s.forcing(x) - s.grad_p_raw(x))).eval();
    });
    s.conservation_residual = flux.norm() / std::max(rhs.norm(), 1.0);
    const auto& mesh = *s.mesh;
    s.u_prime.resize(mesh.n_elements());
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point<MDim> c = mesh.element_lower(e) + 0.5 * mesh.element_size(e);
        s.u_prime[e] = s.Ahat * (s.forcing(c) - Eigen::Matrix<double, MDim, 1>(
                                                    s.P.gradient_at(s.p0, e, Point<MDim>::Constant(0.5)).row(0).transpose()));
    }
    return s;
}

template <int MDim>
MacroSolution<MDim> solve_macro(const EffectiveMatrix& Ahat, const Forcing& f1,
                                std::shared_ptr<const StructuredMesh<MDim>> macro_mesh, Regime regime, double tol = 1e-10)
{
    if (Ahat.regime != regime)
        throw Error(Errc::regime_mismatch, "effective matrix belongs to another regime");
    return solve_macro<MDim>(Eigen::MatrixXd(Ahat.hat()), f1, std::move(macro_mesh), regime, tol);
}

/// Integral of a scalar kernel(x, value, gradient) of a discrete field by tensor Gauss quadrature.
template <int Dim, class Kernel>
double integrate_field(const FunctionSpace<Dim>& V, const Eigen::VectorXd& coeffs, Kernel&& kernel, int order = 5)
{
    const ElementRule<Dim> rule = element_rule<Dim>(order);
    const auto& mesh = V.mesh();
    Eigen::VectorXd phi;
    Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi;
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point<Dim> lo = mesh.element_lower(e);
        const Point<Dim> h = mesh.element_size(e);
        const double jac = h.prod();
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            V.shape(e, rule.points[q], phi, dphi);
            const Point<Dim> x = lo + h.cwiseProduct(rule.points[q]);
            sum += rule.weights[q] * jac * kernel(x, V.gather_value(coeffs, e, phi), V.gather_gradient(coeffs, e, dphi));
        }
    }
    return sum;
}

/// L2 distance between the discrete p0 and a reference function.
template <int MDim, class F>
double pressure_l2_error(const MacroSolution<MDim>& s, F&& exact)
{
    return std::sqrt(integrate_field(s.P, s.p0, [&](const Point<MDim>& x, const Eigen::VectorXd& v, const Eigen::MatrixXd&) {
        const double d = v[0] - exact(x);
        return d * d;
    }));
}

struct VerticalMeanReport {
    double vertical_mean = 0.0;   //!< max over sampled x of |int M(u0 . e_d) dzeta|
    double boundary_flux = 0.0;   //!< max over boundary test functions of |int u' . nu q|
};

/// Boundary flux functional of u' (no-flux condition) over all macro boundary facets.
template <int MDim>
double boundary_flux_residual(const MacroSolution<MDim>& s)
{
    const auto& mesh = *s.mesh;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.P.n_dofs());
    const GaussRule g = gauss_legendre(3);
    Eigen::VectorXd phi;
    Eigen::Matrix<double, Eigen::Dynamic, MDim> dphi;
    for (const auto& f : mesh.boundary_facets()) {
        if (mesh.face(f.axis, f.side).kind == FaceKind::periodic)
            continue;
        const int* ld = s.P.element_dofs(f.element);
        const Point<MDim> lo = mesh.element_lower(f.element), h = mesh.element_size(f.element);
        const int n_tan = MDim - 1;
        const int npts = n_tan == 0 ? 1 : static_cast<int>(std::pow(g.size(), n_tan));
        for (int q = 0; q < npts; ++q) {
            Point<MDim> t;
            double w = 1.0;
            int r = q;
            for (int k = 0; k < MDim; ++k) {
                if (k == f.axis) {
                    t[k] = f.side;
                    continue;
                }
                t[k] = g.points[r % g.size()];
                w *= g.weights[r % g.size()];
                r /= static_cast<int>(g.size());
            }
            s.P.shape(f.element, t, phi, dphi);
            const Point<MDim> x = lo + h.cwiseProduct(t);
            const Eigen::Matrix<double, MDim, 1> grad = s.P.gather_gradient(s.p0, f.element, dphi).row(0).transpose();
            const Eigen::Matrix<double, MDim, 1> u = s.Ahat * (s.forcing(x) - grad);
            const double un = u.dot(f.normal);
            for (int a = 0; a < s.P.local_size(); ++a)
                acc[ld[a]] += w * f.area * un * phi[a];
        }
    }
    return acc.lpNorm<Eigen::Infinity>();
}

/// Max over sample points of |int_{-1}^{1} M(u0 . e_d) dzeta| for a two-scale field
/// u0(xbar, y) given as a callable, with the cell integral done by tensor Gauss quadrature.
template <int Dim, class U0>
double vertical_mean(U0&& u0, const std::vector<Eigen::VectorXd>& samples, int cell_panels = 8, int order = 3)
{
    const GaussRule gh = composite_gauss(0.0, 1.0, cell_panels, order);
    const GaussRule gz = composite_gauss(-1.0, 1.0, 2 * cell_panels, order);
    double worst = 0.0;
    for (const auto& xbar : samples) {
        double acc = 0.0;
        const std::size_t nh = gh.size();
        std::size_t total = 1;
        for (int k = 0; k + 1 < Dim; ++k)
            total *= nh;
        for (std::size_t i = 0; i < total; ++i) {
            Point<Dim> y;
            double w = 1.0;
            std::size_t r = i;
            for (int k = 0; k + 1 < Dim; ++k) {
                y[k] = gh.points[r % nh];
                w *= gh.weights[r % nh];
                r /= nh;
            }
            for (std::size_t qz = 0; qz < gz.size(); ++qz) {
                y[Dim - 1] = gz.points[qz];
                acc += w * gz.weights[qz] * u0(xbar, y)[Dim - 1];
            }
        }
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

} // namespace thinhom
