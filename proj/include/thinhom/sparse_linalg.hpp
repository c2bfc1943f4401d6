// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "thinhom/error.hpp"
#include "thinhom/fem_assembly.hpp"

namespace thinhom {

/// Bordered saddle-point system with unknowns ordered [u; p; lambda]:
///
///   [ K+N  -B^T  0 ] [u]   [f]
///   [ -B    0    g ] [p] = [h]
///   [ 0    g^T   0 ] [l]   [0]
///
/// The multiplier row enforces the gauge g^T p = 0.
struct SaddleSystem {
    SparseMatrix K;       //!< symmetric velocity block
    SparseMatrix B;       //!< coupling, rows = pressure DOFs (may have zero rows)
    SparseMatrix N;       //!< optional convection block (empty = absent)
    Eigen::VectorXd g;    //!< gauge row (typically int q), required whenever B has rows
    Eigen::VectorXd f;    //!< velocity right-hand side
    Eigen::VectorXd h;    //!< pressure right-hand side (zero when empty)

    Eigen::Index n_velocity() const { return K.rows(); }
    Eigen::Index n_pressure() const { return B.rows(); }
    bool has_pressure() const { return B.rows() > 0; }
    bool has_convection() const { return N.rows() > 0 && N.nonZeros() > 0; }

    void check_shapes() const
    {
        const Eigen::Index nv = K.rows();
        if (K.cols() != nv)
            throw Error(Errc::shape_error, "velocity block must be square");
        if (has_pressure() && B.cols() != nv)
            throw Error(Errc::shape_error, "coupling block columns must match the velocity block");
        if (N.rows() > 0 && (N.rows() != nv || N.cols() != nv))
            throw Error(Errc::shape_error, "convection block must match the velocity block");
        if (f.size() != nv)
            throw Error(Errc::shape_error, "velocity right-hand side has the wrong length");
        if (h.size() != 0 && h.size() != n_pressure())
            throw Error(Errc::shape_error, "pressure right-hand side has the wrong length");
        if (has_pressure() && g.size() != 0 && g.size() != n_pressure())
            throw Error(Errc::shape_error, "gauge vector has the wrong length");
    }
};

struct SaddleSolution {
    Eigen::VectorXd u;
    Eigen::VectorXd p;
    double lambda = 0.0;
    double residual = 0.0;  //!< independently recomputed relative residual
};

enum class SolverKind { direct, minres };

struct SolverOptions {
    SolverKind kind = SolverKind::direct;
    double tol = 1e-10;
    int refinement_steps = 4;
    int max_iterations = 20000;
};

namespace detail {

/// Sparse LU of D M D with D = diag(1/sqrt(max_j |m_ij|)); solves M x = b.
/// Without the scaling the unit-diagonal-preferring pivoting loses several digits on thin saddle systems.
class ScaledLU {
public:
    void factorize(const Eigen::SparseMatrix<double>& m)
    {
        scale_ = Eigen::VectorXd::Zero(m.rows());
        for (Eigen::Index k = 0; k < m.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
                scale_[it.row()] = std::max(scale_[it.row()], std::abs(it.value()));
        for (Eigen::Index i = 0; i < scale_.size(); ++i)
            scale_[i] = scale_[i] > 0.0 ? 1.0 / std::sqrt(scale_[i]) : 1.0;
        const Eigen::SparseMatrix<double> scaled = scale_.asDiagonal() * m * scale_.asDiagonal();
        lu_.analyzePattern(scaled);
        lu_.factorize(scaled);
        if (lu_.info() != Eigen::Success)
            throw Error(Errc::singular_system, "sparse LU factorization failed: " + lu_.lastErrorMessage());
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const
    {
        return scale_.asDiagonal() * lu_.solve((scale_.asDiagonal() * b).eval());
    }

private:
    Eigen::VectorXd scale_;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

inline Eigen::VectorXd pressure_rhs(const SaddleSystem& s)
{
    return s.h.size() == 0 ? Eigen::VectorXd::Zero(s.n_pressure()) : s.h;
}

inline Eigen::VectorXd stack(const SaddleSystem& s, const Eigen::VectorXd& f, const Eigen::VectorXd& h)
{
    const Eigen::Index nv = s.n_velocity(), np = s.n_pressure();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nv + (np > 0 ? np + 1 : 0));
    b.head(nv) = f;
    if (np > 0)
        b.segment(nv, np) = h;
    return b;
}

} // namespace detail

/// Assembles the bordered block matrix in column-major storage.
inline Eigen::SparseMatrix<double> bordered_matrix(const SaddleSystem& s)
{
    s.check_shapes();
    const Eigen::Index nv = s.n_velocity(), np = s.n_pressure();
    const Eigen::Index n = nv + (np > 0 ? np + 1 : 0);
    Triplets t;
    t.reserve(static_cast<std::size_t>(s.K.nonZeros() + s.N.nonZeros() + 2 * s.B.nonZeros() + 2 * np));
    for (Eigen::Index r = 0; r < s.K.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(s.K, r); it; ++it)
            t.emplace_back(it.row(), it.col(), it.value());
    if (s.N.rows() > 0)
        for (Eigen::Index r = 0; r < s.N.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(s.N, r); it; ++it)
                t.emplace_back(it.row(), it.col(), it.value());
    if (np > 0) {
        for (Eigen::Index r = 0; r < s.B.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(s.B, r); it; ++it) {
                t.emplace_back(nv + it.row(), it.col(), -it.value());
                t.emplace_back(it.col(), nv + it.row(), -it.value());
            }
        for (Eigen::Index q = 0; q < np; ++q)
            if (s.g.size() == np && s.g[q] != 0.0) {
                t.emplace_back(nv + q, nv + np, s.g[q]);
                t.emplace_back(nv + np, nv + q, s.g[q]);
            }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

/// Relative Euclidean residual |b - M x| / |b| of the bordered system for right-hand sides (f, h);
/// the plain norm |r| when b = 0.
inline double residual(const SaddleSystem& s, const Eigen::VectorXd& f, const Eigen::VectorXd& h,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& p, double lambda)
{
    if (u.size() != s.n_velocity() || p.size() != s.n_pressure() || f.size() != s.n_velocity())
        throw Error(Errc::shape_error, "solution does not match the system");
    Eigen::VectorXd ru = f - s.K * u;
    if (s.N.rows() > 0)
        ru -= s.N * u;
    double b2 = f.squaredNorm();
    double r2 = 0.0;
    if (s.has_pressure()) {
        ru += s.B.transpose() * p;
        const Eigen::VectorXd hh = h.size() == 0 ? Eigen::VectorXd::Zero(s.n_pressure()) : h;
        Eigen::VectorXd rp = hh + s.B * u;
        if (s.g.size() == s.n_pressure())
            rp -= s.g * lambda;
        const double rg = s.g.size() == s.n_pressure() ? s.g.dot(p) : 0.0;
        r2 += rp.squaredNorm() + rg * rg;
        b2 += hh.squaredNorm();
    }
    r2 += ru.squaredNorm();
    const double rn = std::sqrt(r2);
    const double bn = std::sqrt(b2);
    return bn > 0.0 ? rn / bn : rn;
}

inline double residual(const SaddleSystem& s, const Eigen::VectorXd& u, const Eigen::VectorXd& p, double lambda = 0.0)
{
    s.check_shapes();
    return residual(s, s.f, s.h, u, p, lambda);
}

inline double residual(const SaddleSystem& s, const SaddleSolution& x) { return residual(s, x.u, x.p, x.lambda); }

/// Shifts p by a constant so that g^T p = 0 (constants lie in the kernel of B^T for closed flows).
inline void project_gauge(const Eigen::VectorXd& g, Eigen::VectorXd& p)
{
    if (p.size() == 0 || g.size() != p.size())
        return;
    const double gs = g.sum();
    if (gs != 0.0)
        p.array() -= g.dot(p) / gs;
}

/// Sparse LU factorization of a bordered system, reusable for several right-hand sides.
class SaddleFactorization {
public:
    explicit SaddleFactorization(const SaddleSystem& s) : system_(s)
    {
        s.check_shapes();
        if (s.has_pressure() && (s.g.size() != s.n_pressure() || s.g.lpNorm<Eigen::Infinity>() == 0.0))
            throw Error(Errc::singular_system, "saddle system without a pressure gauge");
        matrix_ = bordered_matrix(s);
        lu_ = std::make_unique<detail::ScaledLU>();
        lu_->factorize(matrix_);
    }

    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

    /// Solves with right-hand sides (f, h); iterative refinement until the relative residual <= tol.
    SaddleSolution solve(const Eigen::VectorXd& f, const Eigen::VectorXd& h, double tol = 1e-10,
                         int refinement_steps = 4) const
    {
        check_tol(tol);
        if (f.size() != system_.n_velocity() || (h.size() != 0 && h.size() != system_.n_pressure()))
            throw Error(Errc::shape_error, "right-hand side does not match the system");
        const Eigen::VectorXd b = detail::stack(system_, f, h.size() == 0 ? Eigen::VectorXd::Zero(system_.n_pressure()) : h);
        Eigen::VectorXd x = lu_->solve(b);
        if (!x.allFinite())
            throw Error(Errc::singular_system, "factorization produced non-finite values");
        const double bn = b.norm();
        for (int k = 0; k < refinement_steps; ++k) {
            const Eigen::VectorXd r = b - matrix_ * x;
            if (r.norm() <= 1e-3 * tol * std::max(bn, 1e-300))
                break;
            x += lu_->solve(r);
        }
        SaddleSolution out = unpack(x);
        project_gauge(system_.g, out.p);
        out.residual = residual(system_, f, h, out.u, out.p, out.lambda);
        if (!(out.residual <= tol))
            throw ConvergenceFailure("direct solve residual above tolerance",
                                     out.residual);
        return out;
    }

    static void check_tol(double tol)
    {
        if (!(tol > 0.0 && tol < 1.0))
            throw Error(Errc::invalid_parameter, "tolerance must lie in (0,1)");
    }

private:
    SaddleSolution unpack(const Eigen::VectorXd& x) const
    {
        const Eigen::Index nv = system_.n_velocity(), np = system_.n_pressure();
        SaddleSolution s;
        s.u = x.head(nv);
        s.p = x.segment(nv, np);
        s.lambda = np > 0 ? x[nv + np] : 0.0;
        return s;
    }

    SaddleSystem system_;
    Eigen::SparseMatrix<double> matrix_;
    std::unique_ptr<detail::ScaledLU> lu_;
};

struct GaugedSolution {
    Eigen::VectorXd x;
    double lambda = 0.0;
    double residual = 0.0;
};

/// Singular symmetric problem K x = b with the gauge g^T x = 0, solved as [[K, g], [g^T, 0]].
/// Used for pure Neumann and fully periodic scalar problems whose kernel is the constants.
inline GaugedSolution solve_gauged(const SparseMatrix& K, const Eigen::VectorXd& g, const Eigen::VectorXd& b,
                                   double tol = 1e-10)
{
    SaddleFactorization::check_tol(tol);
    const Eigen::Index n = K.rows();
    if (K.cols() != n || g.size() != n || b.size() != n)
        throw Error(Errc::shape_error, "gauged system blocks do not conform");
    if (g.lpNorm<Eigen::Infinity>() == 0.0)
        throw Error(Errc::singular_system, "gauge vector is zero");
    Triplets t;
    t.reserve(static_cast<std::size_t>(K.nonZeros() + 2 * n));
    for (Eigen::Index r = 0; r < K.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(K, r); it; ++it)
            t.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < n; ++i)
        if (g[i] != 0.0) {
            t.emplace_back(i, n, g[i]);
            t.emplace_back(n, i, g[i]);
        }
    Eigen::SparseMatrix<double> m(n + 1, n + 1);
    m.setFromTriplets(t.begin(), t.end());
    detail::ScaledLU lu;
    lu.factorize(m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs.head(n) = b;
    Eigen::VectorXd y = lu.solve(rhs);
    for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd r = rhs - m * y;
        if (r.norm() <= 1e-3 * tol * std::max(rhs.norm(), 1e-300))
            break;
        y += lu.solve(r);
    }
    if (!y.allFinite())
        throw Error(Errc::singular_system, "factorization produced non-finite values");
    GaugedSolution out;
    out.x = y.head(n);
    out.lambda = y[n];
    // normwise backward error: the raw residual of a stiffness matrix with entries ~1/h cannot fall
    // below ~|K||x| u_round, which exceeds |b| u_round by the condition number on fine meshes
    Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(n);
    for (Eigen::Index r = 0; r < K.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(K, r); it; ++it)
            row_abs[it.row()] += std::abs(it.value());
    const double scale = std::max(b.norm(), row_abs.maxCoeff() * out.x.norm());
    const Eigen::VectorXd r = b - K * out.x - g * out.lambda;
    const double rr = std::sqrt(r.squaredNorm() + std::pow(g.dot(out.x), 2));
    out.residual = scale > 0.0 ? rr / scale : rr;
    if (!(out.residual <= tol))
        throw ConvergenceFailure("gauged solve residual above tolerance", out.residual);
    return out;
}

/// Symmetric positive diagonal preconditioner with prescribed inverse entries.
class BlockDiagonalPreconditioner {
public:
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    BlockDiagonalPreconditioner() = default;

    void set_inverse_diagonal(Eigen::VectorXd d) { inv_ = std::move(d); }

    template <class M>
    BlockDiagonalPreconditioner& analyzePattern(const M&) { return *this; }
    template <class M>
    BlockDiagonalPreconditioner& factorize(const M&) { return *this; }
    template <class M>
    BlockDiagonalPreconditioner& compute(const M&) { return *this; }

    template <class Rhs>
    Eigen::VectorXd solve(const Rhs& b) const { return inv_.cwiseProduct(b); }

    Eigen::ComputationInfo info() const { return Eigen::Success; }
    Eigen::Index rows() const { return inv_.size(); }
    Eigen::Index cols() const { return inv_.size(); }

private:
    Eigen::VectorXd inv_;
};

/// Preconditioned MINRES on the bordered system: diag(K) on velocities, the diagonal of
/// B diag(K)^-1 B^T on pressures and the induced scalar on the multiplier.
inline SaddleSolution solve_minres(const SaddleSystem& s, double tol, int max_iterations)
{
    SaddleFactorization::check_tol(tol);
    s.check_shapes();
    if (s.has_convection())
        throw Error(Errc::invalid_parameter, "MINRES needs a symmetric system (no convection block)");
    if (s.has_pressure() && (s.g.size() != s.n_pressure() || s.g.lpNorm<Eigen::Infinity>() == 0.0))
        throw Error(Errc::singular_system, "saddle system without a pressure gauge");
    const Eigen::SparseMatrix<double> m = bordered_matrix(s);
    const Eigen::Index nv = s.n_velocity(), np = s.n_pressure();
    Eigen::VectorXd inv(m.rows());
    const Eigen::VectorXd kd = s.K.diagonal();
    for (Eigen::Index i = 0; i < nv; ++i)
        inv[i] = kd[i] > 0.0 ? 1.0 / kd[i] : 1.0;
    if (np > 0) {
        // Schur complement diagonal of B diag(K)^-1 B^T
        Eigen::VectorXd sd = Eigen::VectorXd::Zero(np);
        for (Eigen::Index r = 0; r < s.B.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(s.B, r); it; ++it)
                sd[r] += it.value() * it.value() * inv[it.col()];
        double lam = 0.0;
        for (Eigen::Index q = 0; q < np; ++q) {
            inv[nv + q] = sd[q] > 0.0 ? 1.0 / sd[q] : 1.0;
            lam += s.g[q] * s.g[q] * inv[nv + q];
        }
        inv[nv + np] = lam > 0.0 ? 1.0 / lam : 1.0;
    }
    Eigen::MINRES<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, BlockDiagonalPreconditioner> solver;
    solver.setTolerance(tol * 0.5);
    solver.setMaxIterations(max_iterations);
    solver.compute(m);
    solver.preconditioner().set_inverse_diagonal(inv);
    const Eigen::VectorXd b = detail::stack(s, s.f, detail::pressure_rhs(s));
    const Eigen::VectorXd x = solver.solve(b);
    SaddleSolution out;
    out.u = x.head(nv);
    out.p = x.segment(nv, np);
    out.lambda = np > 0 ? x[nv + np] : 0.0;
    project_gauge(s.g, out.p);
    out.residual = residual(s, out);
    if (!(out.residual <= tol))
        throw ConvergenceFailure("MINRES stopped after " + std::to_string(solver.iterations()) + " iterations", out.residual);
    return out;
}

/// Solves the saddle system to relative residual tol; the residual is re-checked independently.
inline SaddleSolution solve_sparse(const SaddleSystem& s, const SolverOptions& opt = {})
{
    if (opt.kind == SolverKind::minres)
        return solve_minres(s, opt.tol, opt.max_iterations);
    SaddleFactorization fac(s);
    return fac.solve(s.f, s.h, opt.tol, opt.refinement_steps);
}

inline SaddleSolution solve_sparse(const SaddleSystem& s, double tol)
{
    SolverOptions opt;
    opt.tol = tol;
    return solve_sparse(s, opt);
}

} // namespace thinhom
