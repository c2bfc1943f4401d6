// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/cell_solver.hpp"
#include "thinhom/config.hpp"
#include "thinhom/macro_solver.hpp"
#include "thinhom/micro_dns.hpp"
#include "thinhom/sigma_diagnostics.hpp"
#include "thinhom/two_scale.hpp"
#include "thinhom/upscaling.hpp"
#include "thinhom/vtk.hpp"

namespace thinhom {

/// Failure of one pipeline stage; keeps the code of the underlying error.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), "stage '" + stage + "': " + cause.what()), stage_(std::move(stage))
    {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct SlopeFit {
    double slope = 0.0;
    double residual = 0.0;  //!< root-mean-square deviation of the log-log fit
};

/// Least-squares slope of log(value) against log(eps).
inline SlopeFit estimate_rate(const std::vector<double>& values, const std::vector<double>& eps)
{
    if (values.size() != eps.size())
        throw Error(Errc::invalid_data, "values and eps_list differ in length");
    if (values.size() < 3)
        throw Error(Errc::invalid_data, "a slope fit needs at least three points");
    const std::size_t n = values.size();
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!(values[k] > 0.0) || !std::isfinite(values[k]))
            throw Error(Errc::invalid_data, "slope fit needs positive finite values");
        if (!(eps[k] > 0.0))
            throw Error(Errc::invalid_data, "slope fit needs positive eps");
        X(k, 0) = 1.0;
        X(k, 1) = std::log(eps[k]);
        y[k] = std::log(values[k]);
    }
    const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
    SlopeFit f;
    f.slope = c[1];
    f.residual = std::sqrt((X * c - y).squaredNorm() / static_cast<double>(n));
    return f;
}

/// One declared check; rows with two infinite bounds are informational.
struct ReportRow {
    std::string name;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool pass = true;
};

inline bool row_verdict(double value, double lower, double upper)
{
    if (std::isinf(lower) && std::isinf(upper) && lower < 0 && upper > 0)
        return true;
    return std::isfinite(value) && value >= lower && value <= upper;
}

struct SweepRow {
    double eps = 0.0;
    double K_eps = 0.0;
    int picard_iterations = 0;
    double final_update = 0.0;
    double u_l2 = 0.0;
    double grad_l2 = 0.0;
    double u_l4 = 0.0;
    double p_l2 = 0.0;
    double r2 = 0.0;
    double r4 = 0.0;
    double pw_ratio = 0.0;
    double pw_printed = 0.0;
    double energy_gap = 0.0;       //!< (alpha |grad u|^2 + (mu/K)|u|^2 - int f.u) / int f.u
    double convection_rel = 0.0;   //!< |int ((u.grad)u).u| / int f.u
    double div_residual = 0.0;
    double pressure_mean = 0.0;    //!< |int p| / (|g| |p|)
    double scaled_u = 0.0;         //!< eps^{-1/2} |u_eps| / s_u, s_u the regime velocity scale
    double scaled_p = 0.0;         //!< eps^{-1/2} |s_p p_eps|, s_p the regime pressure scale
    double pressure_error = 0.0;   //!< eps^{-1/2} |s_p p_eps - p0|
    double strong_error = 0.0;
    double weak_value = 0.0;
    double weak_limit = 0.0;
    double weak_error = 0.0;
};

struct MacroSummary {
    double p0_l2 = 0.0;
    double residual = 0.0;
    double conservation_residual = 0.0;
    double boundary_flux = 0.0;
    double vertical_mean = 0.0;
};

struct ConvergenceReport {
    std::string name;
    Regime regime = Regime::I;
    int d = 2;
    EffectiveMatrix effective;
    bool has_effective = false;
    MacroSummary macro;
    std::vector<SweepRow> sweep;
    std::vector<ReportRow> rows;

    void add(const std::string& name, double value, double lower = -std::numeric_limits<double>::infinity(),
             double upper = std::numeric_limits<double>::infinity())
    {
        rows.push_back({name, value, lower, upper, row_verdict(value, lower, upper)});
    }

    bool passed() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
    }

    const ReportRow* find(const std::string& n) const
    {
        for (const auto& r : rows)
            if (r.name == n)
                return &r;
        return nullptr;
    }
};

/// Which parts of the chain to execute.
struct PipelineOptions {
    bool cells = true;
    bool macro = true;
    bool dns = true;
    std::optional<Regime> cell_regime;  //!< overrides the classified regime for the cell stage
    bool write = true;
    bool verbose = false;
};

inline void add_sweep_rows(ConvergenceReport& rep, const ExperimentConfig& c, const RegimeSpec& rs, bool compared);

namespace detail {

inline std::string fmt17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    }
}

/// Test function used for the weak pairing of the DNS: (1 + xbar_0) (1 + cos 2 pi y_0), first component.
inline OscillatingTestFunction pipeline_test_function(int d)
{
    OscillatingTestFunction f;
    f.d = d;
    f.macro = [](const Eigen::VectorXd& x) { return 1.0 + x[0]; };
    f.micro = AlgebraField::periodic(d - 1, [](const Eigen::VectorXd& y) { return 1.0 + std::cos(2.0 * std::numbers::pi * y[0]); }, 2);
    f.micro_sup = 2.0;
    f.component = 0;
    return f;
}

template <int Dim>
CellSolution<Dim> solve_cells(const ExperimentConfig& c, Regime regime, const RegimeSpec& rs)
{
    Geometry g = c.geometry;
    auto mesh = std::make_shared<const StructuredMesh<Dim>>(build_cell_mesh<Dim>(g, c.numerics.cell_nx, c.numerics.cell_nz));
    const double tol = c.numerics.solver_tol;
    switch (regime) {
    case Regime::I: return solve_cell_regime_i<Dim>(c.coefficient, c.fluid.mu, std::isfinite(rs.K) ? rs.K : c.kappa, mesh, tol);
    case Regime::II: return solve_cell_regime_ii<Dim>(c.fluid.mu, mesh, c.numerics.n_list, tol);
    case Regime::III: return solve_cell_regime_iii<Dim>(c.coefficient, mesh, tol);
    }
    throw Error(Errc::invalid_regime, "unknown regime");
}

template <int Dim>
void add_effective_rows(ConvergenceReport& rep, const EffectiveMatrix& em, const CellSolution<Dim>& cells, double tol)
{
    rep.add("effective_symmetry", em.symmetry_error(), 0.0, 1e-10);
    rep.add("effective_min_eigenvalue", em.min_eigenvalue(), std::numeric_limits<double>::min());
    rep.add("effective_extended_max", em.extended_max(), 0.0, 10.0 * tol);
    for (int i = 0; i < em.d(); ++i)
        for (int j = 0; j < em.d(); ++j)
            rep.add("a_hat_" + std::to_string(i + 1) + std::to_string(j + 1), em.table(i, j));
    if (em.regime == Regime::II) {
        rep.add("extrapolation_residual", cells.extrapolation_residual);
        // the vertical response vanishes (its forcing is a pure gradient); its bound is rounding noise
        double growth = 0.0;
        const Eigen::VectorXd& b0 = cells.level_bound.front();
        for (const auto& b : cells.level_bound)
            for (Eigen::Index i = 0; i < b.size(); ++i)
                if (b0[i] > 1e-8 * b0.maxCoeff())
                    growth = std::max(growth, b[i] / b0[i]);
        rep.add("level_bound_growth", growth, 0.0, 1.1);
    } else {
        rep.add("effective_dual_gap", em.dual_gap(), 0.0, 1e-8);
    }
    double div = 0.0;
    for (double r : cells.div_residual)
        div = std::max(div, r);
    rep.add("cell_div_residual", div, 0.0, tol);
}

template <int Dim>
ConvergenceReport run_impl(const ExperimentConfig& c, const PipelineOptions& opt)
{
    constexpr int MDim = Dim - 1;
    ConvergenceReport rep;
    rep.name = c.name;
    rep.d = Dim;
    const RegimeSpec rs = run_stage("config", [&] { return c.regime(); });
    rep.regime = rs.regime;
    const Regime cell_regime = opt.cell_regime.value_or(rs.regime);
    const double tol = c.numerics.solver_tol;
    const double mu = c.fluid.mu;
    auto log = [&](const std::string& s) {
        if (opt.verbose)
            std::fprintf(stderr, "[%s] %s\n", c.name.c_str(), s.c_str());
    };

    std::optional<CellSolution<Dim>> cells;
    std::optional<MacroSolution<MDim>> macro;
    if (opt.cells) {
        log("cell problems, regime " + to_string(cell_regime));
        cells.emplace(run_stage("cell", [&] { return solve_cells<Dim>(c, cell_regime, rs); }));
        RegimeSpec spec = rs;
        spec.regime = cell_regime;
        const double K = std::isfinite(rs.K) ? rs.K : c.kappa;
        rep.effective = run_stage("upscaling", [&] { return effective_matrix<Dim>(spec, *cells, c.coefficient, mu, K); });
        rep.has_effective = true;
        add_effective_rows(rep, rep.effective, *cells, tol);
    }
    if (opt.cells && opt.macro && cell_regime == rs.regime) {
        log("macro problem");
        Geometry g = c.geometry;
        auto mm = std::make_shared<const StructuredMesh<MDim>>(build_macro_mesh<MDim>(g, c.numerics.macro_n));
        macro.emplace(run_stage("macro", [&] { return solve_macro<MDim>(rep.effective, c.fluid.f1, mm, rs.regime, tol); }));
        rep.macro.residual = macro->residual;
        rep.macro.conservation_residual = macro->conservation_residual;
        rep.macro.p0_l2 = std::sqrt(integrate_field(macro->P, macro->p0, [](const Point<MDim>&, const Eigen::VectorXd& v,
                                                                               const Eigen::MatrixXd&) { return v[0] * v[0]; }));
        const auto u0 = reconstruct_two_scale_velocity(*cells, *macro);
        const VerticalMeanReport vm = vertical_mean_check(u0);
        rep.macro.boundary_flux = vm.boundary_flux;
        rep.macro.vertical_mean = vm.vertical_mean;
        rep.add("macro_p0_l2", rep.macro.p0_l2);
        rep.add("macro_conservation_residual", macro->conservation_residual, 0.0, 1e-8);
        // pointwise flux of a Q1 gradient through a wall is O(h); the weak condition is the residual above
        rep.add("macro_boundary_flux", vm.boundary_flux);
        rep.add("vertical_mean", vm.vertical_mean, 0.0, 10.0 * tol);
    }

    if (opt.dns) {
        std::optional<TwoScaleVelocity<Dim>> u0;
        if (macro)
            u0.emplace(*cells, *macro);
        const OscillatingTestFunction tf = pipeline_test_function(Dim);
        std::vector<double> omega(c.geometry.omega_extent);
        for (double eps : c.eps_list) {
            log("DNS eps = " + fmt17(eps));
            Geometry g = c.geometry;
            g.eps = eps;
            const double K_eps = rs.K_eps(eps);
            auto tm = run_stage("dns", [&] {
                return std::make_shared<const StructuredMesh<Dim>>(
                    build_thin_mesh<Dim>(g, c.numerics.dns_elements_per_period, c.numerics.dns_nz));
            });
            DnsOptions dopt;
            dopt.picard_tol = c.numerics.picard_tol;
            dopt.max_iters = c.numerics.max_picard;
            dopt.tol = tol;
            const MicroSolution<Dim> s = run_stage("dns", [&] { return solve_dlb<Dim>(tm, c.coefficient, c.fluid, eps, K_eps, dopt); });
            SweepRow row;
            row.eps = eps;
            row.K_eps = K_eps;
            row.picard_iterations = s.picard_iterations;
            row.final_update = s.final_update;
            row.u_l2 = s.norms.u_l2;
            row.grad_l2 = s.norms.grad_l2;
            row.u_l4 = s.norms.u_l4;
            row.p_l2 = s.norms.p_l2;
            row.r2 = s.norms.r2;
            row.r4 = s.norms.r4;
            row.div_residual = s.div_residual;
            const double gnorm = gauge_vector(s.Q).norm();
            row.pressure_mean = s.p.norm() > 0.0 ? std::abs(s.pressure_mean) / (gnorm * s.p.norm()) : 0.0;
            if (s.work > 0.0) {
                const double grad2 = s.norms.grad_l2 * s.norms.grad_l2;
                row.energy_gap = (s.alpha_ell * grad2 + s.energy_reaction - s.work) / s.work;
                row.convection_rel = std::abs(s.convection_work) / s.work;
            }
            std::vector<double> extent(Dim - 1);
            for (int k = 0; k < Dim - 1; ++k)
                extent[k] = tm->extent(k);
            ThinQuadrature q;
            q.panels_per_period = c.numerics.dns_elements_per_period;
            q.vertical_panels = c.numerics.dns_nz;
            const auto pw = run_stage("diagnostics", [&] {
                return poincare_wirtinger_ratio(fe_field(s.V, s.u), fe_gradient(s.V, s.u), eps, 2.0, extent, q);
            });
            row.pw_ratio = pw.ratio;
            row.pw_printed = pw.printed_ratio;

            // regime scalings of velocity and pressure
            const double vscale = rs.regime == Regime::III ? eps * std::sqrt(K_eps) : eps * eps;
            const double pscale = rs.regime == Regime::II ? K_eps / (eps * eps) : 1.0;
            row.scaled_u = s.norms.u_l2 / vscale / std::sqrt(eps);
            row.scaled_p = pscale * s.norms.p_l2 / std::sqrt(eps);
            if (macro) {
                const auto& M = *macro;
                auto clampx = [&](Point<MDim> x) {
                    for (int k = 0; k < MDim; ++k)
                        x[k] = std::clamp(x[k], M.mesh->lower(k), M.mesh->upper(k));
                    return x;
                };
                row.pressure_error = std::sqrt(integrate_field(s.Q, s.p, [&](const Point<Dim>& x, const Eigen::VectorXd& v,
                                                                             const Eigen::MatrixXd&) {
                                         const double e = pscale * v[0] - M.pressure(clampx(Point<MDim>(x.head(MDim))));
                                         return e * e;
                                     }) / eps);
                const double uscale = eps * eps;
                const TwoScaleField u0f = [&](const Eigen::VectorXd& xb, const Eigen::VectorXd& y) {
                    return u0->evaluate(M.drive(clampx(Point<MDim>(xb))), Point<Dim>(y));
                };
                const ThinField ue = fe_field(s.V, s.u, 1.0 / uscale);
                run_stage("diagnostics", [&] {
                    row.strong_error = strong_sigma_error(ue, u0f, eps, 2.0, extent, q);
                    row.weak_value = sigma_pairing(ue, tf, eps, extent, q);
                    LimitQuadrature lq;
                    if (Dim == 3)
                        lq = {8, 6, 8, 3};
                    row.weak_limit = limit_pairing(u0f, tf, extent, lq);
                    return 0;
                });
                row.weak_error = std::abs(row.weak_value - row.weak_limit);
            }
            if (opt.write && c.output.vtk) {
                std::filesystem::create_directories(c.output.directory);
                char name[64];
                std::snprintf(name, sizeof name, "fields_%.6g.vtk", eps);
                write_vtk((std::filesystem::path(c.output.directory) / name).string(), s.V, s.u, s.Q, s.p);
            }
            rep.sweep.push_back(row);
        }
        add_sweep_rows(rep, c, rs, macro.has_value());
    }
    return rep;
}

} // namespace detail

/// Slope, boundedness and per-solve checks over the sweep rows.
inline void add_sweep_rows(ConvergenceReport& rep, const ExperimentConfig& c, const RegimeSpec& rs, bool compared)
{
    const auto& S = rep.sweep;
    if (S.empty())
        return;
    const double tol = c.numerics.solver_tol;
    std::vector<double> eps;
    for (const auto& r : S)
        eps.push_back(r.eps);
    double worst_energy = -std::numeric_limits<double>::infinity(), worst_conv = 0.0, worst_div = 0.0, worst_mean = 0.0;
    int max_picard = 0;
    for (const auto& r : S) {
        worst_energy = std::max(worst_energy, r.energy_gap);
        worst_conv = std::max(worst_conv, r.convection_rel);
        worst_div = std::max(worst_div, r.div_residual);
        worst_mean = std::max(worst_mean, r.pressure_mean);
        if (r.eps <= 0.25)
            max_picard = std::max(max_picard, r.picard_iterations);
    }
    rep.add("energy_inequality_gap", worst_energy, -std::numeric_limits<double>::infinity(), 1e-9);
    rep.add("convection_work_relative", worst_conv, 0.0, 1e-9);
    rep.add("dns_div_residual", worst_div, 0.0, tol);
    rep.add("dns_pressure_mean", worst_mean, 0.0, 1e-12);
    rep.add("picard_iterations_max", max_picard, 0.0, 5.0);
    auto bounded = [&](const std::string& name, auto get) {
        const double first = get(S.front());
        double ratio = 0.0;
        for (const auto& r : S)
            ratio = std::max(ratio, get(r) / first);
        rep.add(name, ratio, 0.0, 2.0);
    };
    bounded("sobolev_ratio_r2_growth", [](const SweepRow& r) { return r.r2; });
    bounded("sobolev_ratio_r4_growth", [](const SweepRow& r) { return r.r4; });
    bounded("poincare_wirtinger_growth", [](const SweepRow& r) { return r.pw_ratio; });
    if (S.size() < 3)
        return;
    const double st = c.numerics.slope_tol;
    auto fit = [&](const std::string& name, auto get, double expected, bool checked) {
        std::vector<double> v;
        for (const auto& r : S)
            v.push_back(get(r));
        try {
            const SlopeFit f = estimate_rate(v, eps);
            if (checked)
                rep.add("slope_" + name, f.slope, expected - st, expected + st);
            else
                rep.add("slope_" + name, f.slope);
            rep.add("slope_" + name + "_residual", f.residual);
        } catch (const Error&) {
            const double inf = std::numeric_limits<double>::infinity();
            rep.add("slope_" + name, std::numeric_limits<double>::quiet_NaN(), checked ? expected - st : -inf,
                    checked ? expected + st : inf);
        }
    };
    const double a = rs.alpha_exp;
    if (rs.regime == Regime::II) {
        fit("u_l2", [](const SweepRow& r) { return r.u_l2; }, 1.5 + 0.5 * a, false);
        fit("grad_l2", [](const SweepRow& r) { return r.grad_l2; }, 0.5 + 0.5 * a, false);
        fit("p_l2", [](const SweepRow& r) { return r.p_l2; }, 2.5 - a, true);
    } else {
        fit("u_l2", [](const SweepRow& r) { return r.u_l2; }, 2.5, true);
        fit("grad_l2", [](const SweepRow& r) { return r.grad_l2; }, 1.5, true);
        fit("p_l2", [](const SweepRow& r) { return r.p_l2; }, 0.5, true);
    }
    fit("scaled_u", [](const SweepRow& r) { return r.scaled_u; }, 0.0, false);
    fit("scaled_p", [](const SweepRow& r) { return r.scaled_p; }, 0.0, false);
    if (!compared)
        return;
    bool mono = true, weak_mono = true;
    for (std::size_t k = 1; k < S.size(); ++k) {
        mono = mono && S[k].strong_error < S[k - 1].strong_error;
        weak_mono = weak_mono && S[k].weak_error < S[k - 1].weak_error;
    }
    const bool gate = rs.regime == Regime::I;
    const double inf = std::numeric_limits<double>::infinity();
    rep.add("strong_error_final", S.back().strong_error);
    rep.add("strong_error_monotone", mono ? 1.0 : 0.0, gate ? 1.0 : -inf, gate ? 1.0 : inf);
    rep.add("strong_error_ratio", S.back().strong_error / S.front().strong_error, gate ? 0.0 : -inf, gate ? 0.25 : inf);
    rep.add("weak_error_monotone", weak_mono ? 1.0 : 0.0, gate ? 1.0 : -inf, gate ? 1.0 : inf);
    std::vector<double> we;
    for (const auto& r : S)
        we.push_back(r.weak_error);
    double rate = std::numeric_limits<double>::quiet_NaN();
    try {
        rate = estimate_rate(we, eps).slope;
    } catch (const Error&) {
    }
    rep.add("weak_error_rate", rate, gate ? std::numeric_limits<double>::min() : -inf, inf);
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& s)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot open " + p.string());
    out << s;
    if (!out)
        throw Error(Errc::io_error, "write failed for " + p.string());
}

} // namespace detail

inline std::string report_csv(const ConvergenceReport& r)
{
    std::string s = "name,value,lower,upper,pass\n";
    for (const auto& row : r.rows)
        s += row.name + "," + detail::fmt17(row.value) + "," + detail::fmt17(row.lower) + "," + detail::fmt17(row.upper) + ","
             + (row.pass ? "1" : "0") + "\n";
    return s;
}

inline std::string sweep_csv(const ConvergenceReport& r)
{
    std::string s = "eps,K_eps,picard_iterations,final_update,u_l2,grad_l2,u_l4,p_l2,r2,r4,pw_ratio,pw_printed,energy_gap,"
                    "convection_rel,div_residual,pressure_mean,scaled_u,scaled_p,pressure_error,strong_error,weak_value,"
                    "weak_limit,weak_error\n";
    using detail::fmt17;
    for (const auto& w : r.sweep) {
        const double v[] = {w.eps, w.K_eps, double(w.picard_iterations), w.final_update, w.u_l2, w.grad_l2, w.u_l4, w.p_l2,
                            w.r2, w.r4, w.pw_ratio, w.pw_printed, w.energy_gap, w.convection_rel, w.div_residual,
                            w.pressure_mean, w.scaled_u, w.scaled_p, w.pressure_error, w.strong_error, w.weak_value,
                            w.weak_limit, w.weak_error};
        for (std::size_t k = 0; k < std::size(v); ++k)
            s += (k ? "," : "") + fmt17(v[k]);
        s += "\n";
    }
    return s;
}

inline std::string effective_csv(const EffectiveMatrix& em)
{
    std::string s = "i,j,value\n";
    for (int i = 0; i < em.d(); ++i)
        for (int j = 0; j < em.d(); ++j)
            s += std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + detail::fmt17(em.table(i, j)) + "\n";
    return s;
}

/// Table rows as CSV with the columns eps,value,limit,abs_error,est_rate.
inline std::string diag_csv(const std::vector<DiagRow>& rows)
{
    std::string s = "eps,value,limit,abs_error,est_rate\n";
    for (const auto& r : rows)
        s += detail::fmt17(r.eps) + "," + detail::fmt17(r.value) + "," + detail::fmt17(r.limit) + "," + detail::fmt17(r.abs_error)
             + "," + detail::fmt17(r.est_rate) + "\n";
    return s;
}

inline void write_report(const ConvergenceReport& r, const std::string& directory)
{
    std::filesystem::create_directories(directory);
    const std::filesystem::path dir(directory);
    detail::write_text(dir / "report.csv", report_csv(r));
    if (!r.sweep.empty()) {
        detail::write_text(dir / "sweep.csv", sweep_csv(r));
        std::vector<DiagRow> weak;
        for (const auto& w : r.sweep)
            if (w.weak_limit != 0.0 || w.weak_value != 0.0)
                weak.push_back({w.eps, w.weak_value, w.weak_limit, 0.0, std::numeric_limits<double>::quiet_NaN()});
        if (!weak.empty()) {
            fill_rates(weak);
            detail::write_text(dir / "sigma_pairing.csv", diag_csv(weak));
        }
    }
    if (r.has_effective)
        detail::write_text(dir / "effective_matrix.csv", effective_csv(r.effective));
}

inline ConvergenceReport run_pipeline(const ExperimentConfig& c, const PipelineOptions& opt = {})
{
    ConvergenceReport rep = c.geometry.d == 2 ? detail::run_impl<2>(c, opt) : detail::run_impl<3>(c, opt);
    if (opt.write && c.output.csv)
        write_report(rep, c.output.directory);
    return rep;
}

/// Synthetic checks of the thin-domain functionals over the configured Omega and eps_list.
inline ConvergenceReport run_sigma_suite(const ExperimentConfig& c, std::vector<DiagRow>* table = nullptr)
{
    const int d = c.geometry.d;
    const int m = d - 1;
    const std::vector<double>& omega = c.geometry.omega_extent;
    double area = 1.0;
    for (int k = 0; k < m; ++k)
        area *= omega[k];
    const double first_moment = area * 0.5 * omega[0];  // int xbar_0
    const double two_pi = 2.0 * std::numbers::pi;
    ConvergenceReport rep;
    rep.name = c.name;
    rep.d = d;
    ThinQuadrature q;
    q.panels_per_period = 8;
    q.vertical_panels = 8;
    OscillatingTestFunction one;
    one.d = d;
    one.micro = AlgebraField::constant(m, 1.0);
    // constants pair exactly at every eps
    auto ones = [d](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(d).eval(); };
    double worst_const = 0.0;
    for (double eps : c.eps_list)
        worst_const = std::max(worst_const, std::abs(sigma_pairing(ones, one, eps, omega, q) - 2.0 * area));
    rep.add("pairing_constant", worst_const, 0.0, 1e-10);

    OscillatingTestFunction cosf = one;
    cosf.micro = AlgebraField::periodic(m, [two_pi](const Eigen::VectorXd& y) { return std::cos(two_pi * y[0]); }, 1);
    OscillatingTestFunction sinf = cosf;
    sinf.micro = AlgebraField::periodic(m, [two_pi](const Eigen::VectorXd& y) { return std::sin(two_pi * y[0]); }, 1);
    sinf.macro = [](const Eigen::VectorXd& x) { return x[0]; };
    double eps_last = c.eps_list.back();
    auto cosu = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        v[0] = std::cos(two_pi * x[0] / eps_last);
        return v;
    };
    auto sinu = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        v[0] = std::sin(two_pi * x[0] / eps_last);
        return v;
    };
    rep.add("pairing_cos_cos", std::abs(sigma_pairing(cosu, cosf, eps_last, omega, q) - area), 0.0, 5e-3);
    rep.add("pairing_sin_x_sin", std::abs(sigma_pairing(sinu, sinf, eps_last, omega, q) - first_moment), 0.0, 5e-3);

    // linearity in the field and in the test function
    {
        const double a = 0.37, b = -1.21;
        auto u1 = [&](const Eigen::VectorXd& x) { return (cosu(x) * (1.0 + x[0])).eval(); };
        auto u2 = [&](const Eigen::VectorXd& x) { return (sinu(x) + Eigen::VectorXd::Constant(d, x[d - 1])).eval(); };
        auto lin = [&](const Eigen::VectorXd& x) { return (a * u1(x) + b * u2(x)).eval(); };
        const double lhs = sigma_pairing(lin, cosf, eps_last, omega, q);
        const double rhs = a * sigma_pairing(u1, cosf, eps_last, omega, q) + b * sigma_pairing(u2, cosf, eps_last, omega, q);
        OscillatingTestFunction mix = cosf;
        mix.micro = AlgebraField::periodic(m, [&](const Eigen::VectorXd& y) { return a * cosf.micro(y) + b * std::sin(two_pi * y[0]); }, 1);
        OscillatingTestFunction s2 = cosf;
        s2.micro = AlgebraField::periodic(m, [two_pi](const Eigen::VectorXd& y) { return std::sin(two_pi * y[0]); }, 1);
        const double lhs2 = sigma_pairing(u1, mix, eps_last, omega, q);
        const double rhs2 = a * sigma_pairing(u1, cosf, eps_last, omega, q) + b * sigma_pairing(u1, s2, eps_last, omega, q);
        const double scale = std::max({std::abs(lhs), std::abs(lhs2), 1.0});
        rep.add("pairing_linearity", std::max(std::abs(lhs - rhs), std::abs(lhs2 - rhs2)) / scale, 0.0, 1e-10);
    }

    // oscillation limits with f = sin(2 pi y_0), p = 2
    OscillatingTestFunction sq = one;
    sq.micro = AlgebraField::periodic(m, [two_pi](const Eigen::VectorXd& y) { return std::sin(two_pi * y[0]); }, 1);
    sq.micro_sup = 1.0;
    const OscillationTable t = oscillation_limit_table(sq, c.eps_list, 2.0, omega, q);
    double worst_limit = 0.0;
    for (const auto& r : t.rows)
        worst_limit = std::max(worst_limit, r.abs_error / r.eps);
    rep.add("oscillation_bound_holds", t.bound_holds ? 1.0 : 0.0, 1.0, 1.0);
    rep.add("oscillation_limit_value", t.rows.front().limit - area, -1e-10, 1e-10);
    rep.add("oscillation_error_over_eps", worst_limit, 0.0, 1.0);
    if (table)
        *table = t.rows;

    // Poincare-Wirtinger ratio of u = x_d
    double worst_pw = 0.0;
    for (double eps : c.eps_list) {
        const auto r = poincare_wirtinger_ratio(
            [d](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x[d - 1]); },
            [d](const Eigen::VectorXd&) {
                Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, d);
                g(0, d - 1) = 1.0;
                return g;
            },
            eps, 2.0, omega, q);
        worst_pw = std::max(worst_pw, std::abs(r.ratio - 1.0 / std::sqrt(3.0)));
    }
    rep.add("poincare_wirtinger_xd", worst_pw, 0.0, 1e-6);
    return rep;
}

struct Reevaluation {
    std::size_t rows = 0;
    std::size_t mismatches = 0;
    bool all_pass = true;
};

/// Recomputes every verdict of a saved report.csv from its value and bounds.
inline Reevaluation reevaluate_report(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_error, "cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "name,value,lower,upper,pass")
        throw Error(Errc::invalid_data, path + " is not a report file");
    Reevaluation r;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ','))
            f.push_back(tok);
        if (f.size() != 5)
            throw Error(Errc::invalid_data, "malformed report row: " + line);
        const bool verdict = row_verdict(std::strtod(f[1].c_str(), nullptr), std::strtod(f[2].c_str(), nullptr),
                                         std::strtod(f[3].c_str(), nullptr));
        ++r.rows;
        if (verdict != (f[4] == "1"))
            ++r.mismatches;
        r.all_pass = r.all_pass && verdict;
    }
    return r;
}

} // namespace thinhom
