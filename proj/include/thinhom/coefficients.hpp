// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/error.hpp"
#include "thinhom/geometry_mesh.hpp"
#include "thinhom/quadrature.hpp"

namespace thinhom {

// ---------------------------------------------------------------------------
// Trigonometric series (used for forcing terms and scalar test fields)
// ---------------------------------------------------------------------------

enum class Trig { cos, sin };

/// amplitude * trig(2 pi wave . x + phase)
struct TrigTerm {
    double amplitude = 1.0;
    std::vector<double> wave;
    Trig kind = Trig::cos;
    double phase = 0.0;

    double operator()(const Eigen::VectorXd& x) const
    {
        double arg = phase;
        for (std::size_t k = 0; k < wave.size(); ++k)
            arg += 2.0 * std::numbers::pi * wave[k] * x[static_cast<Eigen::Index>(k)];
        return amplitude * (kind == Trig::cos ? std::cos(arg) : std::sin(arg));
    }
};

/// constant + sum of trigonometric terms.
struct TrigSeries {
    double constant = 0.0;
    std::vector<TrigTerm> terms;

    double operator()(const Eigen::VectorXd& x) const
    {
        double v = constant;
        for (const auto& t : terms)
            v += t(x);
        return v;
    }

    /// Largest |wave component| among the terms.
    double max_frequency() const
    {
        double f = 0.0;
        for (const auto& t : terms)
            for (double k : t.wave)
                f = std::max(f, std::abs(k));
        return f;
    }
};

// ---------------------------------------------------------------------------
// Heterogeneity matrix A(y), y = (y', zeta)
// ---------------------------------------------------------------------------

enum class CoefficientClass { constant, zeta_profile, periodic, asymptotic_periodic };

inline std::string to_string(CoefficientClass c)
{
    switch (c) {
    case CoefficientClass::constant: return "constant";
    case CoefficientClass::zeta_profile: return "zeta_profile";
    case CoefficientClass::periodic: return "periodic";
    case CoefficientClass::asymptotic_periodic: return "asymptotic_periodic";
    }
    return "unknown";
}

/// Matrix-valued Fourier mode: amplitude * trig(2 pi (k . y' + shift)).
struct MatrixMode {
    std::vector<int> wave;
    Eigen::MatrixXd amplitude;
    Trig kind = Trig::cos;
    double shift = 0.0;
};

/// amplitude * exp(-|y' - center|^2 / width^2), the C_0 part of an asymptotic-periodic field.
struct DecayMode {
    Eigen::MatrixXd amplitude;
    Eigen::VectorXd center;
    double width = 1.0;
};

/// A(y) = s(zeta) * (A0 + sum of periodic modes + decaying mode), with s a polynomial in zeta.
class CoefficientField {
public:
    CoefficientField(int d, Eigen::MatrixXd base, std::vector<MatrixMode> modes = {},
                     std::vector<double> zeta_polynomial = {1.0}, std::optional<DecayMode> decay = std::nullopt,
                     double alpha_ell = 0.0, double beta_ell = 0.0)
        : d_(d), base_(std::move(base)), modes_(std::move(modes)), zeta_poly_(std::move(zeta_polynomial)),
          decay_(std::move(decay)), alpha_ell_(alpha_ell), beta_ell_(beta_ell)
    {
        if (d_ != 2 && d_ != 3)
            throw Error(Errc::invalid_parameter, "coefficient dimension must be 2 or 3");
        auto check_sym = [&](const Eigen::MatrixXd& m, const char* what) {
            if (m.rows() != d_ || m.cols() != d_)
                throw Error(Errc::shape_error, std::string(what) + " must be d x d");
            if ((m - m.transpose()).cwiseAbs().maxCoeff() != 0.0)
                throw Error(Errc::invalid_parameter, std::string(what) + " must be symmetric");
        };
        check_sym(base_, "base matrix");
        for (const auto& m : modes_) {
            check_sym(m.amplitude, "mode amplitude");
            if (static_cast<int>(m.wave.size()) != d_ - 1)
                throw Error(Errc::shape_error, "mode wave vector needs d-1 entries");
        }
        if (decay_) {
            check_sym(decay_->amplitude, "decay amplitude");
            if (decay_->center.size() != d_ - 1 || !(decay_->width > 0.0))
                throw Error(Errc::shape_error, "decay center needs d-1 entries and a positive width");
        }
        if (zeta_poly_.empty())
            zeta_poly_ = {1.0};
    }

    static CoefficientField identity(int d) { return CoefficientField(d, Eigen::MatrixXd::Identity(d, d)); }

    static CoefficientField constant(const Eigen::MatrixXd& a)
    {
        return CoefficientField(static_cast<int>(a.rows()), a);
    }

    int dim() const { return d_; }
    const Eigen::MatrixXd& base() const { return base_; }
    const std::vector<MatrixMode>& modes() const { return modes_; }
    const std::vector<double>& zeta_polynomial() const { return zeta_poly_; }
    const std::optional<DecayMode>& decay() const { return decay_; }
    double declared_alpha() const { return alpha_ell_; }
    double declared_beta() const { return beta_ell_; }

    CoefficientClass cls() const
    {
        if (decay_)
            return CoefficientClass::asymptotic_periodic;
        if (!modes_.empty())
            return CoefficientClass::periodic;
        for (std::size_t i = 1; i < zeta_poly_.size(); ++i)
            if (zeta_poly_[i] != 0.0)
                return CoefficientClass::zeta_profile;
        return CoefficientClass::constant;
    }

    /// True when A does not depend on y'.
    bool horizontally_constant() const { return !decay_ && modes_.empty(); }

    /// A evaluated at y = (y', zeta); zeta must lie in [-1,1].
    template <int Dim>
    Eigen::Matrix<double, Dim, Dim> eval(const Point<Dim>& y) const
    {
        if (Dim != d_)
            throw Error(Errc::shape_error, "point dimension does not match the coefficient");
        const double zeta = y[Dim - 1];
        if (!(std::abs(zeta) <= 1.0 + 1e-12))
            throw Error(Errc::out_of_domain, "zeta = " + std::to_string(zeta) + " outside [-1,1]");
        Eigen::Matrix<double, Dim, Dim> a = base_;
        for (const auto& m : modes_) {
            double arg = m.shift;
            for (int k = 0; k + 1 < Dim; ++k)
                arg += m.wave[k] * y[k];
            arg *= 2.0 * std::numbers::pi;
            a += m.amplitude * (m.kind == Trig::cos ? std::cos(arg) : std::sin(arg));
        }
        if (decay_) {
            double r2 = 0.0;
            for (int k = 0; k + 1 < Dim; ++k) {
                const double t = y[k] - decay_->center[k];
                r2 += t * t;
            }
            a += decay_->amplitude * std::exp(-r2 / (decay_->width * decay_->width));
        }
        return zeta_factor(zeta) * a;
    }

    Eigen::MatrixXd eval(const Eigen::VectorXd& y) const
    {
        if (y.size() != d_)
            throw Error(Errc::shape_error, "point dimension does not match the coefficient");
        if (d_ == 2)
            return eval<2>(Point<2>(y));
        return eval<3>(Point<3>(y));
    }

    /// Same field translated horizontally: returns B with B(y', zeta) = A(y' + shift, zeta).
    CoefficientField shifted(const Eigen::VectorXd& shift) const
    {
        CoefficientField out = *this;
        for (auto& m : out.modes_)
            for (int k = 0; k + 1 < d_; ++k)
                m.shift += m.wave[k] * shift[k];
        if (out.decay_)
            out.decay_->center -= shift;
        return out;
    }

    /// Periodic part only (the far-field limit of an asymptotic-periodic field).
    CoefficientField periodic_part() const
    {
        CoefficientField out = *this;
        out.decay_.reset();
        return out;
    }

    double zeta_factor(double zeta) const
    {
        double s = 0.0;
        for (auto it = zeta_poly_.rbegin(); it != zeta_poly_.rend(); ++it)
            s = s * zeta + *it;
        return s;
    }

private:
    int d_;
    Eigen::MatrixXd base_;
    std::vector<MatrixMode> modes_;
    std::vector<double> zeta_poly_;
    std::optional<DecayMode> decay_;
    double alpha_ell_;
    double beta_ell_;
};

/// Radical inverse in the given base (Halton sequence component).
inline double radical_inverse(std::size_t i, unsigned base)
{
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

struct EllipticityEstimate {
    double alpha = 0.0;
    double beta = 0.0;
};

/// Extreme Rayleigh quotients of A over a deterministic Halton sample of Y' x I.
/// Asymptotic-periodic fields are additionally sampled around the decay centre.
inline EllipticityEstimate check_ellipticity(const CoefficientField& field, int n_samples)
{
    if (n_samples < 1)
        throw Error(Errc::invalid_parameter, "n_samples must be positive");
    const int d = field.dim();
    constexpr unsigned bases[] = {2, 3, 5};
    EllipticityEstimate est{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    auto visit = [&](const CoefficientField& f, const Eigen::VectorXd& lo, double span) {
        Eigen::VectorXd y(d);
        for (int s = 0; s < n_samples; ++s) {
            const std::size_t idx = static_cast<std::size_t>(s) + 1;
            for (int k = 0; k + 1 < d; ++k)
                y[k] = lo[k] + span * radical_inverse(idx, bases[k]);
            y[d - 1] = -1.0 + 2.0 * radical_inverse(idx, bases[d - 1]);
            if (s == 0)
                y[d - 1] = -1.0;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.eval(y), Eigen::EigenvaluesOnly);
            est.alpha = std::min(est.alpha, eig.eigenvalues().minCoeff());
            est.beta = std::max(est.beta, eig.eigenvalues().maxCoeff());
        }
    };
    visit(field.periodic_part(), Eigen::VectorXd::Zero(d - 1), 1.0);
    if (field.decay()) {
        const double r = 3.0 * field.decay()->width + 1.0;
        visit(field, field.decay()->center.array() - r, 2.0 * r);
    }
    if (!(est.alpha > 0.0))
        throw Error(Errc::non_elliptic_coefficient,
                    "smallest sampled eigenvalue is " + std::to_string(est.alpha));
    return est;
}

// ---------------------------------------------------------------------------
// Scalar fields of the algebra C_per + C_0 and their mean value
// ---------------------------------------------------------------------------

enum class FieldClass { constant, periodic, asymptotic_periodic, general };

/// Scalar function on R^m split into a 1-periodic part and a part vanishing at infinity.
struct AlgebraField {
    FieldClass cls = FieldClass::constant;
    int dim = 1;
    std::function<double(const Eigen::VectorXd&)> periodic_part;
    std::function<double(const Eigen::VectorXd&)> decaying_part;
    int bandwidth = 8;  //!< highest frequency of the periodic part (controls quadrature)

    double operator()(const Eigen::VectorXd& y) const
    {
        double v = periodic_part ? periodic_part(y) : 0.0;
        if (decaying_part)
            v += decaying_part(y);
        return v;
    }

    static AlgebraField constant(int dim, double c)
    {
        return {FieldClass::constant, dim, [c](const Eigen::VectorXd&) { return c; }, {}, 0};
    }

    static AlgebraField periodic(int dim, std::function<double(const Eigen::VectorXd&)> f, int bandwidth = 8)
    {
        return {FieldClass::periodic, dim, std::move(f), {}, bandwidth};
    }

    static AlgebraField asymptotic(int dim, std::function<double(const Eigen::VectorXd&)> per,
                                   std::function<double(const Eigen::VectorXd&)> decay, int bandwidth = 8)
    {
        return {FieldClass::asymptotic_periodic, dim, std::move(per), std::move(decay), bandwidth};
    }
};

/// Average of a 1-periodic function over the unit cell by tensor composite Gauss quadrature.
template <class F>
double cell_average(F&& f, int dim, int bandwidth)
{
    const int panels = 2 * std::max(bandwidth, 1) + 2;
    const GaussRule rule = composite_gauss(0.0, 1.0, panels, 6);
    const std::size_t n = rule.size();
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k)
        total *= n;
    Eigen::VectorXd y(dim);
    double sum = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t r = i;
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            const std::size_t q = r % n;
            r /= n;
            y[k] = rule.points[q];
            w *= rule.weights[q];
        }
        sum += w * f(y);
    }
    return sum;
}

/// Average of g over the ball of radius R centred at the origin (interval, disc or ball).
inline double ball_average(const AlgebraField& g, double radius)
{
    if (g.dim == 1) {
        const int panels = static_cast<int>(std::ceil(8.0 * radius * std::max(1, g.bandwidth)));
        const GaussRule rule = composite_gauss(-radius, radius, panels, 4);
        Eigen::VectorXd y(1);
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            y[0] = rule.points[q];
            s += rule.weights[q] * g(y);
        }
        return s / (2.0 * radius);
    }
    if (g.dim == 2) {
        const int radial_panels = static_cast<int>(std::ceil(4.0 * radius * std::max(1, g.bandwidth)));
        const GaussRule radial = composite_gauss(0.0, radius, radial_panels, 4);
        Eigen::VectorXd y(2);
        double s = 0.0;
        for (std::size_t q = 0; q < radial.size(); ++q) {
            const double r = radial.points[q];
            const int nt = std::max(16, static_cast<int>(std::ceil(8.0 * std::numbers::pi * r * std::max(1, g.bandwidth))));
            double ring = 0.0;
            for (int t = 0; t < nt; ++t) {
                const double th = 2.0 * std::numbers::pi * t / nt;
                y[0] = r * std::cos(th);
                y[1] = r * std::sin(th);
                ring += g(y);
            }
            s += radial.weights[q] * r * ring * (2.0 * std::numbers::pi / nt);
        }
        return s / (std::numbers::pi * radius * radius);
    }
    throw Error(Errc::unsupported_field, "ball averages are implemented for dimensions 1 and 2");
}

struct MeanValue {
    double value = 0.0;                         //!< one-cell mean of the periodic part
    std::array<double, 3> radii{10.0, 20.0, 40.0};
    std::array<double, 3> ball_averages{};      //!< only for asymptotic-periodic fields
    double extrapolated = std::numeric_limits<double>::quiet_NaN();  //!< O(1/R) Richardson value
};

/// Mean value M(g). Asymptotic-periodic fields are cross-checked by ball averages.
inline MeanValue mean_value(const AlgebraField& g)
{
    MeanValue mv;
    switch (g.cls) {
    case FieldClass::constant: {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(g.dim);
        mv.value = g(y);
        return mv;
    }
    case FieldClass::periodic:
        mv.value = cell_average(g.periodic_part, g.dim, g.bandwidth);
        return mv;
    case FieldClass::asymptotic_periodic:
        mv.value = cell_average(g.periodic_part, g.dim, g.bandwidth);
        for (int i = 0; i < 3; ++i)
            mv.ball_averages[i] = ball_average(g, mv.radii[i]);
        mv.extrapolated = 2.0 * mv.ball_averages[2] - mv.ball_averages[1];
        return mv;
    case FieldClass::general:
        break;
    }
    throw Error(Errc::unsupported_field, "mean values are available for periodic and asymptotic-periodic fields only");
}

// ---------------------------------------------------------------------------
// Fluid parameters and permeability regime
// ---------------------------------------------------------------------------

using Forcing = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct FluidParams {
    double mu = 1.0;
    double rho = 1.0;
    double phi = 1.0;
    Forcing f1;  //!< horizontal forcing on Omega; the full forcing is (f1, 0)

    void validate() const
    {
        if (!(mu > 0.0))
            throw Error(Errc::invalid_parameter, "viscosity mu must be positive");
        if (!(rho >= 0.0))
            throw Error(Errc::invalid_parameter, "density rho must be non-negative");
        if (!(phi > 0.0 && phi <= 1.0))
            throw Error(Errc::invalid_parameter, "porosity phi must lie in (0,1]");
        if (!f1)
            throw Error(Errc::invalid_parameter, "forcing f1 is not set");
    }

    /// Samples f1 on a grid of Omega and rejects non-finite values.
    void validate_forcing(const Geometry& g, int samples = 17) const
    {
        const int m = g.d - 1;
        Eigen::VectorXd x(m);
        std::size_t total = 1;
        for (int k = 0; k < m; ++k)
            total *= samples;
        for (std::size_t i = 0; i < total; ++i) {
            std::size_t r = i;
            for (int k = 0; k < m; ++k) {
                x[k] = g.omega_extent[k] * static_cast<double>(r % samples) / (samples - 1);
                r /= samples;
            }
            const Eigen::VectorXd v = f1(x);
            if (v.size() != m)
                throw Error(Errc::shape_error, "f1 must return d-1 components");
            if (!v.allFinite())
                throw Error(Errc::invalid_parameter, "f1 is not finite on Omega");
        }
    }

    double convection_factor() const { return rho / (phi * phi); }
};

/// Forcing that is the same vector everywhere.
inline Forcing constant_forcing(Eigen::VectorXd value)
{
    return [value = std::move(value)](const Eigen::VectorXd&) { return value; };
}

enum class Regime { I, II, III };

inline std::string to_string(Regime r)
{
    switch (r) {
    case Regime::I: return "i";
    case Regime::II: return "ii";
    case Regime::III: return "iii";
    }
    return "?";
}

/// Permeability law K_eps = kappa * eps^alpha and its regime.
struct RegimeSpec {
    double kappa = 1.0;
    double alpha_exp = 2.0;
    Regime regime = Regime::I;
    double K = 1.0;  //!< limit of K_eps / eps^2 (regime I only, NaN otherwise)

    double K_eps(double eps) const { return kappa * std::pow(eps, alpha_exp); }
};

inline RegimeSpec classify_regime(double kappa, double alpha_exp)
{
    if (!(kappa > 0.0))
        throw Error(Errc::invalid_regime, "kappa must be positive");
    if (!(alpha_exp > 0.0))
        throw Error(Errc::invalid_regime, "the exponent alpha must be positive (K_eps has to vanish)");
    RegimeSpec r;
    r.kappa = kappa;
    r.alpha_exp = alpha_exp;
    r.K = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(alpha_exp - 2.0) <= 1e-12) {
        r.regime = Regime::I;
        r.K = kappa;
    } else if (alpha_exp > 2.0) {
        r.regime = Regime::II;
    } else {
        r.regime = Regime::III;
    }
    return r;
}

} // namespace thinhom
