// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "thinhom/error.hpp"
#include "thinhom/geometry_mesh.hpp"
#include "thinhom/quadrature.hpp"

namespace thinhom {

/// Compressed row storage; column indices sorted and unique after assembly.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t)
{
    SparseMatrix m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

/// Continuous tensor Lagrange space (Q1 or Q2) with `components` copies of the scalar space.
/// Periodic faces are identified; Dirichlet faces are eliminated (homogeneous data) when asked.
template <int Dim>
class FunctionSpace {
public:
    using Mesh = StructuredMesh<Dim>;

    FunctionSpace(std::shared_ptr<const Mesh> mesh, int degree, int components, bool eliminate_dirichlet = true)
        : mesh_(std::move(mesh)), basis_{degree}, components_(components), eliminate_(eliminate_dirichlet)
    {
        if (!mesh_)
            throw Error(Errc::invalid_parameter, "function space needs a mesh");
        if (degree != 1 && degree != 2)
            throw Error(Errc::invalid_parameter, "only degrees 1 and 2 are supported");
        if (components < 1)
            throw Error(Errc::invalid_parameter, "components must be positive");
        number_dofs();
    }

    /// Taylor-Hood velocity space (Q2, d components, walls eliminated).
    static FunctionSpace velocity(std::shared_ptr<const Mesh> mesh) { return FunctionSpace(std::move(mesh), 2, Dim, true); }

    /// Continuous Q1 pressure space (no boundary constraint).
    static FunctionSpace pressure(std::shared_ptr<const Mesh> mesh) { return FunctionSpace(std::move(mesh), 1, 1, false); }

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    int degree() const { return basis_.degree; }
    const LagrangeBasis1D& basis() const { return basis_; }
    int components() const { return components_; }
    bool eliminates_dirichlet() const { return eliminate_; }
    Eigen::Index n_scalar_dofs() const { return static_cast<Eigen::Index>(dof_to_grid_.size()); }
    Eigen::Index n_dofs() const { return n_scalar_dofs() * components_; }

    static constexpr int pow_int(int b)
    {
        int r = 1;
        for (int k = 0; k < Dim; ++k)
            r *= b;
        return r;
    }

    int local_size() const { return pow_int(basis_.size()); }

    /// Number of lattice points along axis k (before periodic identification).
    int grid_count(int k) const { return mesh_->cells(k) * basis_.degree + 1; }

    double grid_coordinate(int k, int i) const
    {
        const int p = basis_.degree;
        const int c = std::min(i / p, mesh_->cells(k) - 1);
        const auto& ax = mesh_->axis(k);
        return ax[c] + (ax[c + 1] - ax[c]) * static_cast<double>(i - c * p) / p;
    }

    /// Scalar DOF numbers of element e in local lexicographic order (axis 0 fastest); -1 = eliminated.
    const int* element_dofs(std::size_t e) const { return &element_dofs_[e * static_cast<std::size_t>(local_size())]; }

    Eigen::Index dof(int component, int scalar) const
    {
        return scalar < 0 ? -1 : static_cast<Eigen::Index>(component) * n_scalar_dofs() + scalar;
    }

    /// Coordinates of the lattice point representing a scalar DOF.
    Point<Dim> dof_point(Eigen::Index scalar) const
    {
        std::size_t g = dof_to_grid_[static_cast<std::size_t>(scalar)];
        Point<Dim> x;
        for (int k = 0; k < Dim; ++k) {
            x[k] = grid_coordinate(k, static_cast<int>(g % grid_count(k)));
            g /= grid_count(k);
        }
        return x;
    }

    /// Nodal interpolant of f : Point -> R^components.
    template <class F>
    Eigen::VectorXd interpolate(F&& f) const
    {
        Eigen::VectorXd out(n_dofs());
        for (Eigen::Index s = 0; s < n_scalar_dofs(); ++s) {
            const Eigen::VectorXd v = f(dof_point(s));
            for (int c = 0; c < components_; ++c)
                out[dof(c, static_cast<int>(s))] = v[c];
        }
        return out;
    }

    /// Reference basis value and gradient (in physical units) at local point t of element e.
    void shape(std::size_t e, const Point<Dim>& t, Eigen::VectorXd& phi, Eigen::Matrix<double, Eigen::Dynamic, Dim>& dphi) const
    {
        const int n1 = basis_.size();
        const int nl = local_size();
        const Point<Dim> h = mesh_->element_size(e);
        std::array<std::array<double, 3>, Dim> v{}, dv{};
        for (int k = 0; k < Dim; ++k)
            for (int a = 0; a < n1; ++a) {
                v[k][a] = basis_.value(a, t[k]);
                dv[k][a] = basis_.derivative(a, t[k]) / h[k];
            }
        phi.resize(nl);
        dphi.resize(nl, Dim);
        for (int a = 0; a < nl; ++a) {
            std::array<int, Dim> ai{};
            int r = a;
            for (int k = 0; k < Dim; ++k) {
                ai[k] = r % n1;
                r /= n1;
            }
            double val = 1.0;
            for (int k = 0; k < Dim; ++k)
                val *= v[k][ai[k]];
            phi[a] = val;
            for (int k = 0; k < Dim; ++k) {
                double g = dv[k][ai[k]];
                for (int j = 0; j < Dim; ++j)
                    if (j != k)
                        g *= v[j][ai[j]];
                dphi(a, k) = g;
            }
        }
    }

    /// Field value (components) at local point t of element e.
    Eigen::VectorXd value_at(const Eigen::VectorXd& coeffs, std::size_t e, const Point<Dim>& t) const
    {
        Eigen::VectorXd phi;
        Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi;
        shape(e, t, phi, dphi);
        return gather_value(coeffs, e, phi);
    }

    /// Gradient (components x Dim) at local point t of element e.
    Eigen::MatrixXd gradient_at(const Eigen::VectorXd& coeffs, std::size_t e, const Point<Dim>& t) const
    {
        Eigen::VectorXd phi;
        Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi;
        shape(e, t, phi, dphi);
        return gather_gradient(coeffs, e, dphi);
    }

    Eigen::VectorXd gather_value(const Eigen::VectorXd& coeffs, std::size_t e, const Eigen::VectorXd& phi) const
    {
        check_length(coeffs);
        const int* ld = element_dofs(e);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(components_);
        for (int a = 0; a < phi.size(); ++a) {
            if (ld[a] < 0)
                continue;
            for (int c = 0; c < components_; ++c)
                u[c] += coeffs[dof(c, ld[a])] * phi[a];
        }
        return u;
    }

    Eigen::MatrixXd gather_gradient(const Eigen::VectorXd& coeffs, std::size_t e,
                                    const Eigen::Matrix<double, Eigen::Dynamic, Dim>& dphi) const
    {
        check_length(coeffs);
        const int* ld = element_dofs(e);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(components_, Dim);
        for (int a = 0; a < dphi.rows(); ++a) {
            if (ld[a] < 0)
                continue;
            for (int c = 0; c < components_; ++c)
                g.row(c) += coeffs[dof(c, ld[a])] * dphi.row(a);
        }
        return g;
    }

    /// Value at a physical point; throws out-of-domain outside the mesh.
    Eigen::VectorXd evaluate(const Eigen::VectorXd& coeffs, const Point<Dim>& x) const
    {
        const auto loc = mesh_->locate(x);
        if (!loc)
            throw Error(Errc::out_of_domain, "evaluation point outside the mesh");
        return value_at(coeffs, loc->element, loc->local);
    }

    Eigen::MatrixXd evaluate_gradient(const Eigen::VectorXd& coeffs, const Point<Dim>& x) const
    {
        const auto loc = mesh_->locate(x);
        if (!loc)
            throw Error(Errc::out_of_domain, "evaluation point outside the mesh");
        return gradient_at(coeffs, loc->element, loc->local);
    }

    void check_length(const Eigen::VectorXd& coeffs) const
    {
        if (coeffs.size() != n_dofs())
            throw Error(Errc::shape_error, "coefficient vector does not match the space");
    }

private:
    void number_dofs()
    {
        std::array<int, Dim> n{};
        std::size_t total = 1;
        for (int k = 0; k < Dim; ++k) {
            n[k] = grid_count(k);
            total *= static_cast<std::size_t>(n[k]);
        }
        grid_to_dof_.assign(total, -1);
        for (std::size_t g = 0; g < total; ++g) {
            std::size_t r = g;
            bool keep = true;
            for (int k = 0; k < Dim; ++k) {
                const int i = static_cast<int>(r % n[k]);
                r /= n[k];
                const bool low = i == 0, high = i == n[k] - 1;
                if (mesh_->periodic(k) && high)
                    keep = false;
                if (eliminate_ && ((low && mesh_->face(k, 0).kind == FaceKind::dirichlet)
                                   || (high && mesh_->face(k, 1).kind == FaceKind::dirichlet)))
                    keep = false;
            }
            if (keep) {
                grid_to_dof_[g] = static_cast<int>(dof_to_grid_.size());
                dof_to_grid_.push_back(g);
            }
        }
        // periodic images (and eliminated points) inherit from their canonical lattice point
        auto canonical = [&](std::array<int, Dim> idx) {
            for (int k = 0; k < Dim; ++k)
                if (mesh_->periodic(k) && idx[k] == n[k] - 1)
                    idx[k] = 0;
            std::size_t g = 0;
            for (int k = Dim - 1; k >= 0; --k)
                g = g * n[k] + idx[k];
            return g;
        };
        const int p = basis_.degree;
        const int n1 = basis_.size();
        const int nl = local_size();
        element_dofs_.resize(mesh_->n_elements() * static_cast<std::size_t>(nl));
        for (std::size_t e = 0; e < mesh_->n_elements(); ++e) {
            const auto ei = mesh_->element_index(e);
            for (int a = 0; a < nl; ++a) {
                std::array<int, Dim> idx{};
                int r = a;
                for (int k = 0; k < Dim; ++k) {
                    idx[k] = ei[k] * p + r % n1;
                    r /= n1;
                }
                element_dofs_[e * nl + a] = grid_to_dof_[canonical(idx)];
            }
        }
    }

    std::shared_ptr<const Mesh> mesh_;
    LagrangeBasis1D basis_;
    int components_;
    bool eliminate_;
    std::vector<int> grid_to_dof_;
    std::vector<std::size_t> dof_to_grid_;
    std::vector<int> element_dofs_;
};

/// Tensor Gauss rule on the reference element [0,1]^Dim.
template <int Dim>
struct ElementRule {
    std::vector<Point<Dim>> points;
    std::vector<double> weights;
};

template <int Dim>
ElementRule<Dim> element_rule(int order)
{
    const GaussRule g = gauss_legendre(order);
    const int n = static_cast<int>(g.size());
    int total = 1;
    for (int k = 0; k < Dim; ++k)
        total *= n;
    ElementRule<Dim> r;
    r.points.resize(total);
    r.weights.resize(total);
    for (int q = 0; q < total; ++q) {
        int s = q;
        double w = 1.0;
        for (int k = 0; k < Dim; ++k) {
            r.points[q][k] = g.points[s % n];
            w *= g.weights[s % n];
            s /= n;
        }
        r.weights[q] = w;
    }
    return r;
}

inline constexpr int default_assembly_order = 3;

namespace detail {

/// Adds a scalar element matrix to every component block of a vector space.
template <int Dim>
void scatter_blocks(const FunctionSpace<Dim>& V, std::size_t e, const Eigen::MatrixXd& ke, Triplets& t)
{
    const int* ld = V.element_dofs(e);
    const int nl = static_cast<int>(ke.rows());
    for (int c = 0; c < V.components(); ++c)
        for (int a = 0; a < nl; ++a) {
            if (ld[a] < 0)
                continue;
            for (int b = 0; b < nl; ++b) {
                if (ld[b] < 0 || ke(a, b) == 0.0)
                    continue;
                t.emplace_back(V.dof(c, ld[a]), V.dof(c, ld[b]), ke(a, b));
            }
        }
}

} // namespace detail

namespace detail {

/// Element-by-element scalar assembly; kernel(e, x, w, phi, dphi, ke) accumulates into ke.
/// Symmetric kernels fill the upper triangle only and are mirrored exactly.
template <int Dim, class Kernel>
SparseMatrix assemble_scalar_blocks(const FunctionSpace<Dim>& V, int order, bool symmetric, Kernel&& kernel)
{
    const int nl = V.local_size();
    const ElementRule<Dim> rule = element_rule<Dim>(order);
    const auto& mesh = V.mesh();
    Triplets t;
    t.reserve(mesh.n_elements() * static_cast<std::size_t>(nl * nl * V.components()));
    Eigen::MatrixXd ke(nl, nl);
    Eigen::VectorXd phi;
    Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point<Dim> lo = mesh.element_lower(e);
        const Point<Dim> h = mesh.element_size(e);
        const double jac = h.prod();
        ke.setZero();
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            V.shape(e, rule.points[q], phi, dphi);
            kernel(e, Point<Dim>(lo + h.cwiseProduct(rule.points[q])), rule.weights[q] * jac, phi, dphi, ke);
        }
        if (symmetric)
            ke.template triangularView<Eigen::StrictlyLower>() = ke.transpose();
        scatter_blocks(V, e, ke, t);
    }
    return from_triplets(V.n_dofs(), V.n_dofs(), t);
}

} // namespace detail

/// scaling * int A grad u : grad v, with A(x) evaluated at physical quadrature points.
template <int Dim, class AEval>
SparseMatrix assemble_diffusion(const FunctionSpace<Dim>& V, AEval&& A_eval, double scaling,
                                int order = default_assembly_order)
{
    const int nl = V.local_size();
    return detail::assemble_scalar_blocks(
        V, order, true,
        [&](std::size_t, const Point<Dim>& x, double w, const Eigen::VectorXd&,
            const Eigen::Matrix<double, Eigen::Dynamic, Dim>& dphi, Eigen::MatrixXd& ke) {
            const Eigen::Matrix<double, Dim, Dim> A = A_eval(x);
            const Eigen::Matrix<double, Eigen::Dynamic, Dim> adphi = dphi * A;
            const double sw = scaling * w;
            for (int a = 0; a < nl; ++a)
                for (int b = a; b < nl; ++b)
                    ke(a, b) += sw * adphi.row(a).dot(dphi.row(b));
        });
}

/// int weight * u . v
template <int Dim, class WEval>
SparseMatrix assemble_mass(const FunctionSpace<Dim>& V, WEval&& weight, int order = default_assembly_order)
{
    const int nl = V.local_size();
    return detail::assemble_scalar_blocks(
        V, order, true,
        [&](std::size_t, const Point<Dim>& x, double w, const Eigen::VectorXd& phi,
            const Eigen::Matrix<double, Eigen::Dynamic, Dim>&, Eigen::MatrixXd& ke) {
            const double ww = w * weight(x);
            for (int a = 0; a < nl; ++a)
                for (int b = a; b < nl; ++b)
                    ke(a, b) += ww * phi[a] * phi[b];
        });
}

template <int Dim>
SparseMatrix assemble_mass(const FunctionSpace<Dim>& V, double weight = 1.0, int order = default_assembly_order)
{
    return assemble_mass(V, [weight](const Point<Dim>&) { return weight; }, order);
}

/// factor * int ((u_current . grad) u) . v, rows = test functions v.
template <int Dim>
SparseMatrix assemble_convection(const FunctionSpace<Dim>& V, const Eigen::VectorXd& u_current, double factor,
                                 int order = default_assembly_order)
{
    V.check_length(u_current);
    if (V.components() != Dim)
        throw Error(Errc::shape_error, "convection needs a vector velocity space");
    const int nl = V.local_size();
    if (factor == 0.0 || u_current.lpNorm<Eigen::Infinity>() == 0.0)
        return SparseMatrix(V.n_dofs(), V.n_dofs());
    return detail::assemble_scalar_blocks(
        V, order, false,
        [&](std::size_t e, const Point<Dim>&, double w, const Eigen::VectorXd& phi,
            const Eigen::Matrix<double, Eigen::Dynamic, Dim>& dphi, Eigen::MatrixXd& ke) {
            const Eigen::VectorXd uc = V.gather_value(u_current, e, phi);
            const Eigen::VectorXd adv = dphi * uc;  // u_current . grad phi_b
            for (int a = 0; a < nl; ++a)
                for (int b = 0; b < nl; ++b)
                    ke(a, b) += factor * w * phi[a] * adv[b];
        });
}

/// B with (B u)_q = int q div u for every pressure basis function q.
template <int Dim>
SparseMatrix assemble_divergence(const FunctionSpace<Dim>& V, const FunctionSpace<Dim>& Q,
                                 int order = default_assembly_order)
{
    if (V.mesh_ptr() != Q.mesh_ptr() && !V.mesh().same_structure(Q.mesh()))
        throw Error(Errc::space_mismatch, "velocity and pressure spaces live on different meshes");
    if (V.components() != Dim || Q.components() != 1)
        throw Error(Errc::space_mismatch, "divergence needs a vector velocity and a scalar pressure space");
    const ElementRule<Dim> rule = element_rule<Dim>(order);
    const auto& mesh = V.mesh();
    const int nv = V.local_size(), np = Q.local_size();
    Triplets t;
    t.reserve(mesh.n_elements() * static_cast<std::size_t>(nv * np * Dim));
    Eigen::VectorXd phi, psi;
    Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi, dpsi;
    Eigen::MatrixXd be(np, nv * Dim);
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const double jac = mesh.jacobian(e);
        be.setZero();
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            V.shape(e, rule.points[q], phi, dphi);
            Q.shape(e, rule.points[q], psi, dpsi);
            const double w = rule.weights[q] * jac;
            for (int a = 0; a < np; ++a)
                for (int c = 0; c < Dim; ++c)
                    for (int b = 0; b < nv; ++b)
                        be(a, c * nv + b) += w * psi[a] * dphi(b, c);
        }
        const int* pd = Q.element_dofs(e);
        const int* vd = V.element_dofs(e);
        for (int a = 0; a < np; ++a)
            for (int c = 0; c < Dim; ++c)
                for (int b = 0; b < nv; ++b)
                    if (vd[b] >= 0 && be(a, c * nv + b) != 0.0)
                        t.emplace_back(pd[a], V.dof(c, vd[b]), be(a, c * nv + b));
    }
    return from_triplets(Q.n_dofs(), V.n_dofs(), t);
}

/// Load vector int f . v with f : Point -> R^components.
template <int Dim, class FEval>
Eigen::VectorXd assemble_load(const FunctionSpace<Dim>& V, FEval&& f_eval, int order = default_assembly_order)
{
    const ElementRule<Dim> rule = element_rule<Dim>(order);
    const auto& mesh = V.mesh();
    const int nl = V.local_size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(V.n_dofs());
    Eigen::VectorXd phi;
    Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point<Dim> lo = mesh.element_lower(e);
        const Point<Dim> h = mesh.element_size(e);
        const double jac = h.prod();
        const int* ld = V.element_dofs(e);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Point<Dim> x = lo + h.cwiseProduct(rule.points[q]);
            V.shape(e, rule.points[q], phi, dphi);
            const Eigen::VectorXd fx = f_eval(x);
            if (fx.size() != V.components())
                throw Error(Errc::shape_error, "load function must return one value per component");
            const double w = rule.weights[q] * jac;
            for (int a = 0; a < nl; ++a) {
                if (ld[a] < 0)
                    continue;
                for (int c = 0; c < V.components(); ++c)
                    out[V.dof(c, ld[a])] += w * fx[c] * phi[a];
            }
        }
    }
    return out;
}

/// Scalar-space load int F . grad q with F : Point -> R^Dim.
template <int Dim, class FEval>
Eigen::VectorXd assemble_gradient_load(const FunctionSpace<Dim>& Q, FEval&& F, int order = default_assembly_order)
{
    if (Q.components() != 1)
        throw Error(Errc::shape_error, "gradient loads need a scalar space");
    const ElementRule<Dim> rule = element_rule<Dim>(order);
    const auto& mesh = Q.mesh();
    const int nl = Q.local_size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Q.n_dofs());
    Eigen::VectorXd phi;
    Eigen::Matrix<double, Eigen::Dynamic, Dim> dphi;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point<Dim> lo = mesh.element_lower(e);
        const Point<Dim> h = mesh.element_size(e);
        const double jac = h.prod();
        const int* ld = Q.element_dofs(e);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Point<Dim> x = lo + h.cwiseProduct(rule.points[q]);
            Q.shape(e, rule.points[q], phi, dphi);
            const Eigen::Matrix<double, Dim, 1> fx = F(x);
            const double w = rule.weights[q] * jac;
            for (int a = 0; a < nl; ++a)
                if (ld[a] >= 0)
                    out[ld[a]] += w * dphi.row(a).dot(fx);
        }
    }
    return out;
}

/// Gauge row g_q = int q of a scalar space.
template <int Dim>
Eigen::VectorXd gauge_vector(const FunctionSpace<Dim>& Q)
{
    return assemble_load(Q, [](const Point<Dim>&) { return Eigen::VectorXd::Ones(1); });
}

} // namespace thinhom
