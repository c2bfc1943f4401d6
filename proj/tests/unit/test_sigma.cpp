// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "thinhom/micro_dns.hpp"
#include "thinhom/sigma_diagnostics.hpp"

using namespace thinhom;

namespace {

constexpr double pi = std::numbers::pi;
const std::vector<double> unit{1.0};

OscillatingTestFunction test_fn(std::function<double(const Eigen::VectorXd&)> micro = {},
                                std::function<double(const Eigen::VectorXd&)> macro = {})
{
    OscillatingTestFunction f;
    if (micro)
        f.micro = AlgebraField::periodic(1, std::move(micro), 4);
    f.macro = std::move(macro);
    return f;
}

ThinField scalar(std::function<double(const Eigen::VectorXd&)> g)
{
    return [g](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(2, g(x)); };
}

double cos_y(const Eigen::VectorXd& y) { return std::cos(2 * pi * y[0]); }

} // namespace

TEST(Pairing, Constants)
{
    for (double eps : {0.25, 0.125, 1.0 / 32})
        EXPECT_NEAR(sigma_pairing(scalar([](const Eigen::VectorXd&) { return 1.0; }), test_fn(), eps, unit), 2.0, 1e-12);
}

TEST(Pairing, CosineTimesCosine)
{
    const double eps = 1.0 / 32;
    const auto u = scalar([eps](const Eigen::VectorXd& x) { return std::cos(2 * pi * x[0] / eps); });
    EXPECT_NEAR(sigma_pairing(u, test_fn(cos_y), eps, unit), 1.0, 5e-3);
}

TEST(Pairing, SineWithMacroWeight)
{
    for (double eps : {0.125, 1.0 / 32}) {
        const auto u = scalar([eps](const Eigen::VectorXd& x) { return std::sin(2 * pi * x[0] / eps); });
        const auto f = test_fn([](const Eigen::VectorXd& y) { return std::sin(2 * pi * y[0]); },
                               [](const Eigen::VectorXd& x) { return x[0]; });
        EXPECT_NEAR(sigma_pairing(u, f, eps, unit), 0.5, 5e-3) << "eps " << eps;
    }
}

TEST(Pairing, NonOscillatingTestFunctionIsPlainIntegral)
{
    // eps^{-1} int x e^x (1 + t/eps)^2 = int_0^1 x e^x dx * int_{-1}^{1} (1+s)^2 ds = 8/3
    const auto f = test_fn({}, [](const Eigen::VectorXd& x) { return x[0]; });
    for (double eps : {0.3, 0.125, 0.05}) {
        const auto u = scalar([eps](const Eigen::VectorXd& x) { return std::exp(x[0]) * std::pow(1 + x[1] / eps, 2); });
        std::vector<double> ext{1.0};
        EXPECT_NEAR(sigma_pairing(u, f, eps, ext), 8.0 / 3.0, 1e-9) << "eps " << eps;
    }
}

TEST(Pairing, LinearityInBothArguments)
{
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const double eps = 0.0625;
    const auto u = scalar([eps](const Eigen::VectorXd& x) { return std::cos(2 * pi * x[0] / eps) + x[1] / eps; });
    const auto v = scalar([](const Eigen::VectorXd& x) { return std::exp(-x[0]) * (1 + x[1]); });
    const auto g0 = [](const Eigen::VectorXd& x) { return 1.0 + x[0]; };
    const auto h0 = [](const Eigen::VectorXd& x) { return std::sin(3 * x[0]); };
    for (int trial = 0; trial < 5; ++trial) {
        const double a = dist(gen), b = dist(gen);
        const ThinField w = [&](const Eigen::VectorXd& x) { return (a * u(x) + b * v(x)).eval(); };
        const auto f = test_fn(cos_y, g0);
        EXPECT_NEAR(sigma_pairing(w, f, eps, unit), a * sigma_pairing(u, f, eps, unit) + b * sigma_pairing(v, f, eps, unit), 1e-10);
        const auto fg = test_fn(cos_y, [&](const Eigen::VectorXd& x) { return a * g0(x) + b * h0(x); });
        EXPECT_NEAR(sigma_pairing(u, fg, eps, unit),
                    a * sigma_pairing(u, test_fn(cos_y, g0), eps, unit) + b * sigma_pairing(u, test_fn(cos_y, h0), eps, unit), 1e-10);
    }
}

TEST(Pairing, ShapeErrors)
{
    OscillatingTestFunction f;
    f.d = 3;
    f.micro = AlgebraField::constant(2, 1.0);
    try {
        sigma_pairing(scalar([](const Eigen::VectorXd&) { return 1.0; }), f, 0.25, unit);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::shape_error);
    }
    auto g = test_fn();
    g.component = 2;
    EXPECT_THROW(sigma_pairing(scalar([](const Eigen::VectorXd&) { return 1.0; }), g, 0.25, unit), Error);
}

TEST(LimitPairing, Examples)
{
    const TwoScaleField one = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(2); };
    EXPECT_NEAR(limit_pairing(one, test_fn(), unit), 2.0, 1e-10);
    const TwoScaleField c = [](const Eigen::VectorXd&, const Eigen::VectorXd& y) {
        return Eigen::VectorXd::Constant(2, std::cos(2 * pi * y[0]));
    };
    EXPECT_NEAR(limit_pairing(c, test_fn(cos_y), unit), 1.0, 1e-10);
    const TwoScaleField flat = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return Eigen::VectorXd::Constant(2, std::exp(x[0]) * (1 - y[1] * y[1]));
    };
    EXPECT_NEAR(limit_pairing(flat, test_fn(cos_y), unit), 0.0, 1e-10);
}

TEST(LimitPairing, DropsDecayingPart)
{
    auto f = test_fn();
    f.micro = AlgebraField::asymptotic(1, cos_y, [](const Eigen::VectorXd& y) { return std::exp(-y[0] * y[0]); });
    const TwoScaleField c = [](const Eigen::VectorXd&, const Eigen::VectorXd& y) {
        return Eigen::VectorXd::Constant(2, std::cos(2 * pi * y[0]));
    };
    EXPECT_NEAR(limit_pairing(c, f, unit), 1.0, 1e-10);
}

TEST(StrongError, SelfComparisonAndShift)
{
    const TwoScaleField u0 = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        Eigen::VectorXd v(2);
        v << (1 + x[0]) * std::cos(2 * pi * y[0]) * (1 - y[1] * y[1]), 0.1 * std::sin(2 * pi * y[0]) * y[1];
        return v;
    };
    std::vector<double> errs;
    std::vector<double> eps_list{0.125, 0.0625, 0.03125};
    for (double eps : eps_list) {
        const ThinField exact = [&](const Eigen::VectorXd& x) {
            return u0(x.head(1), Eigen::Vector2d(x[0] / eps, x[1] / eps));
        };
        EXPECT_LT(strong_sigma_error(exact, u0, eps, 2.0, unit), 1e-13);
        const ThinField shifted = [&](const Eigen::VectorXd& x) {
            return (exact(x) + eps * Eigen::Vector2d(1.0, 0.0)).eval();
        };
        // eps^{-1/2} |eps e_1|_{L2(G_eps)} = sqrt(2) eps
        const double e = strong_sigma_error(shifted, u0, eps, 2.0, unit);
        EXPECT_NEAR(e, std::sqrt(2.0) * eps, 1e-12);
        errs.push_back(e);
    }
    EXPECT_NEAR(std::log(errs[2] / errs[0]) / std::log(eps_list[2] / eps_list[0]), 1.0, 1e-9);
    EXPECT_THROW(strong_sigma_error(scalar([](const Eigen::VectorXd&) { return 0.0; }), u0, 0.1, 0.5, unit), Error);
}

TEST(ProductRule, SyntheticInstances)
{
    struct Instance {
        std::function<double(double, double, double)> u, v;  // (x, y, zeta)
        double limit;
        std::function<double(double)> at_eps;  // exact value of the pairing at eps (1/eps integer)
    };
    const std::vector<Instance> cases{
        {[](double x, double y, double) { return (1 + x) * std::cos(2 * pi * y); },
         [](double, double y, double) { return std::cos(2 * pi * y); }, 1.5, [](double) { return 1.5; }},
        {[](double, double y, double) { return std::cos(2 * pi * y); },
         [](double x, double y, double) { return std::cos(2 * pi * y) + x * std::sin(4 * pi * y); }, 1.0,
         // int_0^1 x sin(2 pi k x) = -1/(2 pi k) leaves an O(eps) defect
         [](double eps) { return 1.0 - 2.0 * eps / (3.0 * pi); }},
        {[](double, double y, double z) { return z * std::cos(2 * pi * y); },
         [](double, double y, double z) { return z * std::cos(2 * pi * y); }, 1.0 / 3.0, [](double) { return 1.0 / 3.0; }},
    };
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& in = cases[c];
        const TwoScaleField uv0 = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
            return Eigen::VectorXd::Constant(2, in.u(x[0], y[0], y[1]) * in.v(x[0], y[0], y[1]));
        };
        EXPECT_NEAR(limit_pairing(uv0, test_fn(), unit), in.limit, 1e-10) << "case " << c;
        for (double eps : {0.125, 1.0 / 32}) {
            const ThinField uv = [&](const Eigen::VectorXd& x) {
                return Eigen::VectorXd::Constant(2, in.u(x[0], x[0] / eps, x[1] / eps) * in.v(x[0], x[0] / eps, x[1] / eps));
            };
            // the third harmonic of the cross term needs more than the default 8 panels per period
            const double v = sigma_pairing(uv, test_fn(), eps, unit, ThinQuadrature{32, 8, 3});
            EXPECT_NEAR(v, in.at_eps(eps), 1e-9) << "case " << c << " eps " << eps;
            EXPECT_LE(std::abs(v - in.limit), 0.25 * eps);
        }
    }
}

TEST(ThinAverage, Polynomial)
{
    const ThinField u = scalar([](const Eigen::VectorXd& x) { return x[0] + x[1] * x[1]; });
    EXPECT_NEAR(thin_average(u, Eigen::VectorXd::Constant(1, 0.3), 0.2)[0], 0.3 + 0.04 / 3.0, 1e-14);
}

TEST(PoincareWirtinger, VerticallyConstant)
{
    const ThinField u = scalar([](const Eigen::VectorXd& x) { return std::sin(x[0]); });
    const ThinGradient g = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
        m.col(0).setConstant(std::cos(x[0]));
        return m;
    };
    EXPECT_LT(poincare_wirtinger_ratio(u, g, 0.1, 2.0, unit).numerator, 1e-14);
}

TEST(PoincareWirtinger, LinearProfile)
{
    const ThinField u = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x[1]); };
    const ThinGradient g = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd m(1, 2);
        m << 0.0, 1.0;
        return m;
    };
    for (double eps : {0.125, 0.0625, 0.03125}) {
        const PoincareWirtinger r = poincare_wirtinger_ratio(u, g, eps, 2.0, unit);
        EXPECT_NEAR(r.ratio, 1.0 / std::sqrt(3.0), 1e-6);
        EXPECT_NEAR(r.numerator * r.numerator, 2 * std::pow(eps, 3) / 3, 1e-14);
        EXPECT_NEAR(r.printed_ratio, r.ratio / std::sqrt(eps), 1e-12);
    }
}

TEST(PoincareWirtinger, QuadraticProfile)
{
    // |x_d^2 - eps^2/3|^2 = 8 eps^5 / 45 and |2 x_d|^2 = 8 eps^3 / 3 give the ratio 1/sqrt(15)
    const ThinField u = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x[1] * x[1]); };
    const ThinGradient g = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd m(1, 2);
        m << 0.0, 2.0 * x[1];
        return m;
    };
    for (double eps : {0.125, 0.03125}) {
        EXPECT_NEAR(thin_average(u, Eigen::VectorXd::Zero(1), eps)[0], eps * eps / 3.0, 1e-15);
        const PoincareWirtinger r = poincare_wirtinger_ratio(u, g, eps, 2.0, unit);
        EXPECT_NEAR(r.numerator * r.numerator, 8 * std::pow(eps, 5) / 45, 1e-12 * std::pow(eps, 5));
        EXPECT_NEAR(r.ratio, 1.0 / std::sqrt(15.0), 1e-9);
    }
}

TEST(PoincareWirtinger, FiniteElementAdapters)
{
    const double eps = 0.125;
    Geometry geo;
    geo.eps = eps;
    geo.lateral_periodic = true;
    auto m = std::make_shared<const StructuredMesh<2>>(build_thin_mesh<2>(geo, 2, 4));
    const auto V = FunctionSpace<2>::velocity(m);
    // eps^2 - x_d^2 is exact in Q2 and has the same ratio as x_d^2
    const Eigen::VectorXd c = V.interpolate([eps](const Point<2>& x) {
        return Eigen::Vector2d(eps * eps - x[1] * x[1], 0.0).eval();
    });
    const PoincareWirtinger r = poincare_wirtinger_ratio(fe_field(V, c), fe_gradient(V, c), eps, 2.0, unit);
    EXPECT_NEAR(r.ratio, 1.0 / std::sqrt(15.0), 1e-9);
}

TEST(Oscillation, ConstantIsTight)
{
    OscillatingTestFunction f;
    f.micro = AlgebraField::constant(1, 3.0);
    const OscillationTable t = oscillation_limit_table(f, {0.25, 0.125, 0.0625}, 2.0, unit);
    EXPECT_NEAR(t.bound, 18.0, 1e-12);
    EXPECT_TRUE(t.bound_holds);
    for (const auto& r : t.rows) {
        EXPECT_NEAR(r.value, 18.0, 1e-12);
        EXPECT_NEAR(r.limit, 18.0, 1e-10);
    }
}

TEST(Oscillation, SineSquaredLimit)
{
    auto f = test_fn([](const Eigen::VectorXd& y) { return std::sin(2 * pi * y[0]); });
    f.micro_sup = 1.0;
    f.macro = [](const Eigen::VectorXd& x) { return 1.0 + x[0]; };
    const std::vector<double> eps_list{0.3, 0.15, 0.075};
    const OscillationTable t = oscillation_limit_table(f, eps_list, 2.0, unit);
    // int (1+x)^2 = 7/3, M(sin^2) = 1/2, |I| = 2
    EXPECT_NEAR(t.rows.front().limit, 7.0 / 3.0, 1e-10);
    EXPECT_NEAR(t.bound, 2.0 * 7.0 / 3.0, 1e-10);
    EXPECT_TRUE(t.bound_holds);
    for (const auto& r : t.rows) {
        EXPECT_LE(r.value, t.bound + 1e-10);
        EXPECT_LE(r.abs_error, r.eps);
    }
    EXPECT_THROW(oscillation_limit_table(f, {0.1, 0.2}, 2.0, unit), Error);
}

TEST(Oscillation, RatesFromTable)
{
    std::vector<DiagRow> rows(3);
    const double e[3] = {0.1, 0.05, 0.025};
    for (int k = 0; k < 3; ++k) {
        rows[k].eps = e[k];
        rows[k].value = 1.0 + 3.0 * e[k] * e[k];
        rows[k].limit = 1.0;
    }
    fill_rates(rows);
    EXPECT_TRUE(std::isnan(rows[0].est_rate));
    EXPECT_NEAR(rows[1].est_rate, 2.0, 1e-9);
    EXPECT_NEAR(rows[2].est_rate, 2.0, 1e-9);
}
