// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/coefficients.hpp"
#include "thinhom/error.hpp"
#include "thinhom/fem_assembly.hpp"
#include "thinhom/quadrature.hpp"

namespace thinhom {

/// f(xbar, y', zeta) = g0(xbar) g1(y') g2(zeta), paired with one component of a vector field.
struct OscillatingTestFunction {
    int d = 2;
    std::function<double(const Eigen::VectorXd&)> macro;  //!< g0 on Omega (empty = 1)
    AlgebraField micro = AlgebraField::constant(1, 1.0);  //!< g1, periodic or asymptotic-periodic
    std::function<double(double)> vertical;               //!< g2 on I (empty = 1)
    int component = 0;
    double micro_sup = std::numeric_limits<double>::quiet_NaN();  //!< declared sup |g1|, sampled when NaN

    double g0(const Eigen::VectorXd& xbar) const { return macro ? macro(xbar) : 1.0; }
    double g2(double zeta) const { return vertical ? vertical(zeta) : 1.0; }

    double operator()(const Eigen::VectorXd& xbar, const Eigen::VectorXd& yp, double zeta) const
    {
        return g0(xbar) * micro(yp) * g2(zeta);
    }

    void check(int field_dim) const
    {
        if (d != 2 && d != 3)
            throw Error(Errc::shape_error, "test function dimension must be 2 or 3");
        if (micro.dim != d - 1)
            throw Error(Errc::shape_error, "micro factor must live on R^{d-1}");
        if (field_dim != d)
            throw Error(Errc::shape_error, "test function and field dimensions differ");
        if (component < 0 || component >= d)
            throw Error(Errc::shape_error, "component index out of range");
    }

    /// sup |g1| by the declared value or by dense sampling of one period (plus the decay window).
    double sup_micro() const
    {
        if (!std::isnan(micro_sup))
            return micro_sup;
        const int m = d - 1;
        const int n = m == 1 ? 8192 : 512;
        double s = 0.0;
        Eigen::VectorXd y(m);
        std::size_t total = 1;
        for (int k = 0; k < m; ++k)
            total *= n;
        for (std::size_t i = 0; i < total; ++i) {
            std::size_t r = i;
            for (int k = 0; k < m; ++k) {
                y[k] = static_cast<double>(r % n) / n;
                r /= n;
            }
            s = std::max(s, std::abs(micro(y)));
            if (micro.decaying_part)
                s = std::max(s, std::abs(micro.periodic_part(y)));
        }
        return s;
    }
};

/// Field on G_eps = Omega x (-eps, eps): x (length d) -> vector value.
using ThinField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ThinGradient = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
/// Two-scale field (xbar, y) -> vector value, y = (y', zeta).
using TwoScaleField = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Composite Gauss rule on G_eps resolving the eps-oscillation.
struct ThinQuadrature {
    int panels_per_period = 8;
    int vertical_panels = 8;
    int order = 3;
};

/// Composite Gauss rule on Omega x Y' x I for limit functionals.
struct LimitQuadrature {
    int macro_panels = 32;
    int cell_panels = 16;
    int vertical_panels = 16;
    int order = 3;
};

namespace detail {

/// Visits the tensor Gauss points of G_eps column by column: column(xbar, w_h, zs, wz).
template <class Column>
void for_each_thin_column(const std::vector<double>& extent, double eps, const ThinQuadrature& q, Column&& column)
{
    const int m = static_cast<int>(extent.size());
    std::vector<GaussRule> rules;
    for (int k = 0; k < m; ++k) {
        const int panels = std::max(1, static_cast<int>(std::lround(extent[k] / eps * q.panels_per_period)));
        rules.push_back(composite_gauss(0.0, extent[k], panels, q.order));
    }
    const GaussRule gz = composite_gauss(-eps, eps, q.vertical_panels, q.order);
    std::size_t total = 1;
    for (const auto& r : rules)
        total *= r.size();
    Eigen::VectorXd xbar(m);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t r = i;
        double w = 1.0;
        for (int k = 0; k < m; ++k) {
            const std::size_t n = rules[k].size();
            xbar[k] = rules[k].points[r % n];
            w *= rules[k].weights[r % n];
            r /= n;
        }
        column(xbar, w, gz);
    }
}

inline Eigen::VectorXd join(const Eigen::VectorXd& xbar, double z)
{
    Eigen::VectorXd x(xbar.size() + 1);
    x.head(xbar.size()) = xbar;
    x[xbar.size()] = z;
    return x;
}

} // namespace detail

/// eps^{-1} int_{G_eps} u_eps(x)_c f(xbar, xbar/eps, x_d/eps) dx.
inline double sigma_pairing(const ThinField& u_eps, const OscillatingTestFunction& f, double eps,
                            const std::vector<double>& extent, const ThinQuadrature& q = {})
{
    f.check(static_cast<int>(extent.size()) + 1);
    double sum = 0.0;
    detail::for_each_thin_column(extent, eps, q, [&](const Eigen::VectorXd& xbar, double wh, const GaussRule& gz) {
        const double g0 = f.g0(xbar);
        const double g1 = f.micro(Eigen::VectorXd(xbar / eps));
        for (std::size_t k = 0; k < gz.size(); ++k) {
            const Eigen::VectorXd u = u_eps(detail::join(xbar, gz.points[k]));
            if (u.size() <= f.component)
                throw Error(Errc::shape_error, "field has fewer components than the test function expects");
            sum += wh * gz.weights[k] * u[f.component] * g0 * g1 * f.g2(gz.points[k] / eps);
        }
    });
    return sum / eps;
}

/// int_Omega int_I M(u0(xbar, ., zeta)_c f(xbar, ., zeta)) dzeta dxbar; the decaying part of the
/// micro factor has zero mean and is dropped.
inline double limit_pairing(const TwoScaleField& u0, const OscillatingTestFunction& f, const std::vector<double>& extent,
                            const LimitQuadrature& q = {})
{
    f.check(static_cast<int>(extent.size()) + 1);
    const int m = static_cast<int>(extent.size());
    std::vector<GaussRule> rx;
    for (int k = 0; k < m; ++k)
        rx.push_back(composite_gauss(0.0, extent[k], q.macro_panels, q.order));
    const GaussRule ry = composite_gauss(0.0, 1.0, q.cell_panels, q.order);
    const GaussRule rz = composite_gauss(-1.0, 1.0, q.vertical_panels, q.order);
    auto micro = [&](const Eigen::VectorXd& y) { return f.micro.periodic_part ? f.micro.periodic_part(y) : 0.0; };
    std::size_t nx = 1, ny = 1;
    for (int k = 0; k < m; ++k) {
        nx *= rx[k].size();
        ny *= ry.size();
    }
    double sum = 0.0;
    Eigen::VectorXd xbar(m), y(m + 1), yp(m);
    for (std::size_t i = 0; i < nx; ++i) {
        std::size_t r = i;
        double wx = 1.0;
        for (int k = 0; k < m; ++k) {
            xbar[k] = rx[k].points[r % rx[k].size()];
            wx *= rx[k].weights[r % rx[k].size()];
            r /= rx[k].size();
        }
        const double g0 = f.g0(xbar);
        for (std::size_t j = 0; j < ny; ++j) {
            std::size_t s = j;
            double wy = 1.0;
            for (int k = 0; k < m; ++k) {
                yp[k] = ry.points[s % ry.size()];
                wy *= ry.weights[s % ry.size()];
                s /= ry.size();
            }
            const double g1 = micro(yp);
            y.head(m) = yp;
            for (std::size_t k = 0; k < rz.size(); ++k) {
                y[m] = rz.points[k];
                sum += wx * wy * rz.weights[k] * u0(xbar, y)[f.component] * g0 * g1 * f.g2(rz.points[k]);
            }
        }
    }
    return sum;
}

/// eps^{-1/p} |u_eps - u0(xbar, x/eps)|_{L^p(G_eps)} with the Euclidean norm on values.
inline double strong_sigma_error(const ThinField& u_eps, const TwoScaleField& u0, double eps, double p,
                                 const std::vector<double>& extent, const ThinQuadrature& q = {})
{
    if (!(p >= 1.0))
        throw Error(Errc::invalid_parameter, "p must be >= 1");
    double sum = 0.0;
    const int m = static_cast<int>(extent.size());
    detail::for_each_thin_column(extent, eps, q, [&](const Eigen::VectorXd& xbar, double wh, const GaussRule& gz) {
        Eigen::VectorXd y(m + 1);
        y.head(m) = xbar / eps;
        for (std::size_t k = 0; k < gz.size(); ++k) {
            y[m] = gz.points[k] / eps;
            const Eigen::VectorXd diff = u_eps(detail::join(xbar, gz.points[k])) - u0(xbar, y);
            sum += wh * gz.weights[k] * std::pow(diff.norm(), p);
        }
    });
    return std::pow(sum / eps, 1.0 / p);
}

/// M_eps u(xbar) = (2 eps)^{-1} int_{-eps}^{eps} u(xbar, t) dt.
inline Eigen::VectorXd thin_average(const ThinField& u, const Eigen::VectorXd& xbar, double eps, int panels = 8, int order = 3)
{
    const GaussRule gz = composite_gauss(-eps, eps, panels, order);
    Eigen::VectorXd acc;
    for (std::size_t k = 0; k < gz.size(); ++k) {
        const Eigen::VectorXd v = u(detail::join(xbar, gz.points[k]));
        if (k == 0)
            acc = Eigen::VectorXd::Zero(v.size());
        acc += gz.weights[k] * v;
    }
    return acc / (2.0 * eps);
}

struct PoincareWirtinger {
    double numerator = 0.0;      //!< |u - M_eps u|_{L^p(G_eps)}
    double denominator = 0.0;    //!< eps |grad u|_{L^p(G_eps)}
    double ratio = 0.0;          //!< numerator / denominator (scale consistent)
    double printed_ratio = 0.0;  //!< eps^{-1/p} * ratio, the normalization with eps^{-1/p} on one side only
};

inline PoincareWirtinger poincare_wirtinger_ratio(const ThinField& u, const ThinGradient& grad, double eps, double p,
                                                  const std::vector<double>& extent, const ThinQuadrature& q = {})
{
    if (!(p >= 1.0))
        throw Error(Errc::invalid_parameter, "p must be >= 1");
    double num = 0.0, den = 0.0;
    std::vector<Eigen::VectorXd> vals;
    detail::for_each_thin_column(extent, eps, q, [&](const Eigen::VectorXd& xbar, double wh, const GaussRule& gz) {
        vals.resize(gz.size());
        Eigen::VectorXd mean;
        for (std::size_t k = 0; k < gz.size(); ++k) {
            const Eigen::VectorXd x = detail::join(xbar, gz.points[k]);
            vals[k] = u(x);
            if (k == 0)
                mean = Eigen::VectorXd::Zero(vals[k].size());
            mean += gz.weights[k] * vals[k];
            den += wh * gz.weights[k] * std::pow(grad(x).norm(), p);
        }
        mean /= 2.0 * eps;
        for (std::size_t k = 0; k < gz.size(); ++k)
            num += wh * gz.weights[k] * std::pow((vals[k] - mean).norm(), p);
    });
    PoincareWirtinger r;
    r.numerator = std::pow(num, 1.0 / p);
    r.denominator = eps * std::pow(den, 1.0 / p);
    r.ratio = r.denominator > 0.0 ? r.numerator / r.denominator : 0.0;
    r.printed_ratio = r.ratio * std::pow(eps, -1.0 / p);
    return r;
}

/// One row of an eps-table: value at eps, its limit, |value - limit| and the observed rate.
struct DiagRow {
    double eps = 0.0;
    double value = 0.0;
    double limit = 0.0;
    double abs_error = 0.0;
    double est_rate = std::numeric_limits<double>::quiet_NaN();
};

/// Fills abs_error and the successive rates log(e_k/e_{k-1}) / log(eps_k/eps_{k-1}).
inline void fill_rates(std::vector<DiagRow>& rows)
{
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].abs_error = std::abs(rows[k].value - rows[k].limit);
        if (k > 0 && rows[k].abs_error > 0.0 && rows[k - 1].abs_error > 0.0)
            rows[k].est_rate = std::log(rows[k].abs_error / rows[k - 1].abs_error) / std::log(rows[k].eps / rows[k - 1].eps);
    }
}

struct OscillationTable {
    std::vector<DiagRow> rows;
    double bound = 0.0;  //!< int |g0|^p * sup |g1|^p * int |g2|^p
    bool bound_holds = true;
};

/// eps^{-1} int_{G_eps} |f(xbar, x/eps)|^p for each eps, against its bound and its limit int int M(|f|^p).
inline OscillationTable oscillation_limit_table(const OscillatingTestFunction& f, const std::vector<double>& eps_list,
                                                double p, const std::vector<double>& extent, const ThinQuadrature& q = {},
                                                const LimitQuadrature& lq = {})
{
    f.check(static_cast<int>(extent.size()) + 1);
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1]))
            throw Error(Errc::invalid_parameter, "eps_list must be strictly decreasing");
    const int m = static_cast<int>(extent.size());
    // limit: the |g1|^p factor is averaged over one period
    OscillatingTestFunction fp = f;
    fp.macro = [&f, p](const Eigen::VectorXd& x) { return std::pow(std::abs(f.g0(x)), p); };
    fp.vertical = [&f, p](double z) { return std::pow(std::abs(f.g2(z)), p); };
    fp.micro = AlgebraField::periodic(m, [&f, p](const Eigen::VectorXd& y) {
        return std::pow(std::abs(f.micro.periodic_part ? f.micro.periodic_part(y) : 0.0), p);
    }, f.micro.bandwidth);
    fp.component = 0;
    const TwoScaleField one = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
    const double limit = limit_pairing(one, fp, extent, lq);

    OscillationTable t;
    // bound: product structure separates the three integrals
    double i0 = 0.0;
    {
        std::vector<GaussRule> rx;
        for (int k = 0; k < m; ++k)
            rx.push_back(composite_gauss(0.0, extent[k], lq.macro_panels, lq.order));
        std::size_t nx = 1;
        for (const auto& r : rx)
            nx *= r.size();
        Eigen::VectorXd xbar(m);
        for (std::size_t i = 0; i < nx; ++i) {
            std::size_t r = i;
            double w = 1.0;
            for (int k = 0; k < m; ++k) {
                xbar[k] = rx[k].points[r % rx[k].size()];
                w *= rx[k].weights[r % rx[k].size()];
                r /= rx[k].size();
            }
            i0 += w * std::pow(std::abs(f.g0(xbar)), p);
        }
    }
    const GaussRule rz = composite_gauss(-1.0, 1.0, lq.vertical_panels, lq.order);
    double i2 = 0.0;
    for (std::size_t k = 0; k < rz.size(); ++k)
        i2 += rz.weights[k] * std::pow(std::abs(f.g2(rz.points[k])), p);
    t.bound = i0 * std::pow(f.sup_micro(), p) * i2;

    for (double eps : eps_list) {
        double sum = 0.0;
        detail::for_each_thin_column(extent, eps, q, [&](const Eigen::VectorXd& xbar, double wh, const GaussRule& gz) {
            const double g01 = std::abs(f.g0(xbar) * f.micro(Eigen::VectorXd(xbar / eps)));
            for (std::size_t k = 0; k < gz.size(); ++k)
                sum += wh * gz.weights[k] * std::pow(g01 * std::abs(f.g2(gz.points[k] / eps)), p);
        });
        DiagRow row;
        row.eps = eps;
        row.value = sum / eps;
        row.limit = limit;
        t.rows.push_back(row);
        if (row.value > t.bound + 1e-10)
            t.bound_holds = false;
    }
    fill_rates(t.rows);
    return t;
}

/// Adapters from discrete fields on a thin mesh.
template <int Dim>
ThinField fe_field(const FunctionSpace<Dim>& V, const Eigen::VectorXd& coeffs, double scale = 1.0)
{
    return [&V, &coeffs, scale](const Eigen::VectorXd& x) { return (scale * V.evaluate(coeffs, Point<Dim>(x))).eval(); };
}

template <int Dim>
ThinGradient fe_gradient(const FunctionSpace<Dim>& V, const Eigen::VectorXd& coeffs, double scale = 1.0)
{
    return [&V, &coeffs, scale](const Eigen::VectorXd& x) {
        return (scale * V.evaluate_gradient(coeffs, Point<Dim>(x))).eval();
    };
}

} // namespace thinhom
