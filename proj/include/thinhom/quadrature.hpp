// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "thinhom/error.hpp"

namespace thinhom {

/// Gauss-Legendre rule mapped to the unit interval [0,1].
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
};

/// n-point Gauss-Legendre rule on [0,1], exact for polynomials of degree 2n-1.
inline GaussRule gauss_legendre(int n)
{
    if (n < 1)
        throw Error(Errc::invalid_parameter, "gauss_legendre needs at least one point");
    GaussRule rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n from the Chebyshev guesses; symmetric pairs are filled together.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        rule.points[i] = 0.5 * (1.0 - x);
        rule.points[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1)
        rule.points[n / 2] = 0.5;
    return rule;
}

/// Composite Gauss rule on [a,b] with `panels` equal panels.
inline GaussRule composite_gauss(double a, double b, int panels, int order)
{
    const GaussRule base = gauss_legendre(order);
    GaussRule rule;
    const double h = (b - a) / panels;
    rule.points.reserve(static_cast<std::size_t>(panels) * base.size());
    rule.weights.reserve(rule.points.capacity());
    for (int k = 0; k < panels; ++k)
        for (std::size_t q = 0; q < base.size(); ++q) {
            rule.points.push_back(a + h * (k + base.points[q]));
            rule.weights.push_back(h * base.weights[q]);
        }
    return rule;
}

/// Equispaced 1D Lagrange basis of degree 1 or 2 on [0,1].
struct LagrangeBasis1D {
    int degree = 1;

    int size() const { return degree + 1; }

    double node(int a) const { return static_cast<double>(a) / degree; }

    double value(int a, double t) const
    {
        if (degree == 1)
            return a == 0 ? 1.0 - t : t;
        switch (a) {
        case 0: return (1.0 - t) * (1.0 - 2.0 * t);
        case 1: return 4.0 * t * (1.0 - t);
        default: return t * (2.0 * t - 1.0);
        }
    }

    double derivative(int a, double t) const
    {
        if (degree == 1)
            return a == 0 ? -1.0 : 1.0;
        switch (a) {
        case 0: return 4.0 * t - 3.0;
        case 1: return 4.0 - 8.0 * t;
        default: return 4.0 * t - 1.0;
        }
    }
};

} // namespace thinhom
