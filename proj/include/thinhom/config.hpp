// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thinhom/coefficients.hpp"
#include "thinhom/error.hpp"
#include "thinhom/geometry_mesh.hpp"

namespace thinhom {

struct NumericsConfig {
    int cell_nx = 8;
    int cell_nz = 32;
    int macro_n = 64;
    int dns_elements_per_period = 8;
    int dns_nz = 8;
    double solver_tol = 1e-10;
    double picard_tol = 1e-10;
    int max_picard = 50;
    std::vector<int> n_list{4, 8, 16, 32};
    double slope_tol = 0.2;
};

struct OutputConfig {
    std::string directory = "out";
    bool csv = true;
    bool vtk = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Geometry geometry;
    CoefficientField coefficient = CoefficientField::identity(2);
    std::string coefficient_class = "constant";
    FluidParams fluid;
    std::vector<TrigSeries> f1;  //!< one series per horizontal component
    double kappa = 1.0;
    double alpha = 2.0;
    NumericsConfig numerics;
    std::vector<double> eps_list{0.125, 0.0625, 0.03125, 0.015625};
    OutputConfig output;

    RegimeSpec regime() const { return classify_regime(kappa, alpha); }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::string& block, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        throw Error(Errc::invalid_config, "block '" + block + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || it.key() == a;
        if (!ok)
            throw Error(Errc::invalid_config, "unknown key '" + it.key() + "' in block '" + block + "'");
    }
}

inline const json& require(const json& obj, const char* key, const std::string& block)
{
    if (!obj.contains(key))
        throw Error(Errc::invalid_config, "missing key '" + std::string(key) + "' in block '" + block + "'");
    return obj.at(key);
}

template <class T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key))
        return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_config, "bad value for '" + std::string(key) + "': " + e.what());
    }
}

/// A scalar means that multiple of the identity; otherwise a d x d nested array.
inline Eigen::MatrixXd parse_matrix(const json& v, int d, const std::string& what)
{
    if (v.is_number())
        return v.get<double>() * Eigen::MatrixXd::Identity(d, d);
    if (!v.is_array() || static_cast<int>(v.size()) != d)
        throw Error(Errc::invalid_config, what + " must be a number or a " + std::to_string(d) + "x" + std::to_string(d) + " array");
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
        if (!v[i].is_array() || static_cast<int>(v[i].size()) != d)
            throw Error(Errc::invalid_config, what + " rows must have " + std::to_string(d) + " entries");
        for (int j = 0; j < d; ++j)
            m(i, j) = v[i][j].get<double>();
    }
    return m;
}

inline Trig parse_trig(const json& obj)
{
    const std::string k = get_or<std::string>(obj, "kind", "cos");
    if (k == "cos")
        return Trig::cos;
    if (k == "sin")
        return Trig::sin;
    throw Error(Errc::invalid_config, "trig kind must be 'sin' or 'cos', got '" + k + "'");
}

inline TrigSeries parse_series(const json& v, int m)
{
    TrigSeries s;
    if (v.is_number()) {
        s.constant = v.get<double>();
        return s;
    }
    check_keys(v, "fluid.f1", {"constant", "terms"});
    s.constant = get_or<double>(v, "constant", 0.0);
    if (v.contains("terms"))
        for (const auto& t : v.at("terms")) {
            check_keys(t, "fluid.f1.terms", {"amplitude", "wave", "kind", "phase"});
            TrigTerm term;
            term.amplitude = get_or<double>(t, "amplitude", 1.0);
            term.wave = get_or<std::vector<double>>(t, "wave", std::vector<double>(m, 0.0));
            if (static_cast<int>(term.wave.size()) != m)
                throw Error(Errc::invalid_config, "f1 wave vectors need d-1 entries");
            term.kind = parse_trig(t);
            term.phase = get_or<double>(t, "phase", 0.0);
            s.terms.push_back(term);
        }
    return s;
}

inline void check_tol(double t, const char* what)
{
    if (!(t > 0.0 && t < 1.0))
        throw Error(Errc::invalid_config, std::string(what) + " must lie in (0,1)");
}

} // namespace detail

/// Forcing assembled from the per-component series.
inline Forcing make_forcing(const std::vector<TrigSeries>& f1)
{
    return [f1](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(f1.size()));
        for (std::size_t k = 0; k < f1.size(); ++k)
            v[static_cast<Eigen::Index>(k)] = f1[k](x);
        return v;
    };
}

inline ExperimentConfig parse_config(const nlohmann::json& j)
{
    using detail::get_or;
    using detail::require;
    detail::check_keys(j, "root", {"name", "geometry", "coefficient", "fluid", "regime", "numerics", "sweep", "output"});
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", "experiment");
    try {
        // geometry
        const auto& g = require(j, "geometry", "root");
        detail::check_keys(g, "geometry", {"d", "omega_extent", "lateral"});
        c.geometry.d = require(g, "d", "geometry").get<int>();
        c.geometry.omega_extent = require(g, "omega_extent", "geometry").get<std::vector<double>>();
        const std::string lateral = get_or<std::string>(g, "lateral", "walls");
        if (lateral != "walls" && lateral != "periodic")
            throw Error(Errc::invalid_config, "geometry.lateral must be 'walls' or 'periodic'");
        c.geometry.lateral_periodic = lateral == "periodic";
        try {
            c.geometry.validate();
        } catch (const Error& e) {
            throw Error(Errc::invalid_config, e.what());
        }
        const int d = c.geometry.d;
        const int m = d - 1;

        // coefficient
        const auto& a = require(j, "coefficient", "root");
        detail::check_keys(a, "coefficient", {"class", "base", "modes", "zeta_profile", "decay", "ellipticity"});
        c.coefficient_class = get_or<std::string>(a, "class", "constant");
        const Eigen::MatrixXd base = a.contains("base") ? detail::parse_matrix(a.at("base"), d, "coefficient.base")
                                                        : Eigen::MatrixXd::Identity(d, d);
        std::vector<MatrixMode> modes;
        if (a.contains("modes"))
            for (const auto& md : a.at("modes")) {
                detail::check_keys(md, "coefficient.modes", {"wave", "amplitude", "kind", "shift"});
                MatrixMode mode;
                mode.wave = require(md, "wave", "coefficient.modes").get<std::vector<int>>();
                mode.amplitude = detail::parse_matrix(require(md, "amplitude", "coefficient.modes"), d, "mode amplitude");
                mode.kind = detail::parse_trig(md);
                mode.shift = get_or<double>(md, "shift", 0.0);
                modes.push_back(mode);
            }
        const std::vector<double> zeta = get_or<std::vector<double>>(a, "zeta_profile", {1.0});
        std::optional<DecayMode> decay;
        if (a.contains("decay")) {
            const auto& dj = a.at("decay");
            detail::check_keys(dj, "coefficient.decay", {"amplitude", "center", "width"});
            DecayMode dm;
            dm.amplitude = detail::parse_matrix(require(dj, "amplitude", "coefficient.decay"), d, "decay amplitude");
            const auto ctr = require(dj, "center", "coefficient.decay").get<std::vector<double>>();
            dm.center = Eigen::Map<const Eigen::VectorXd>(ctr.data(), static_cast<Eigen::Index>(ctr.size()));
            dm.width = get_or<double>(dj, "width", 1.0);
            decay = dm;
        }
        double alpha_ell = 0.0, beta_ell = 0.0;
        if (a.contains("ellipticity")) {
            const auto& ej = a.at("ellipticity");
            detail::check_keys(ej, "coefficient.ellipticity", {"alpha", "beta"});
            alpha_ell = get_or<double>(ej, "alpha", 0.0);
            beta_ell = get_or<double>(ej, "beta", 0.0);
        }
        c.coefficient = CoefficientField(d, base, modes, zeta, decay, alpha_ell, beta_ell);
        if (to_string(c.coefficient.cls()) != c.coefficient_class)
            throw Error(Errc::invalid_config, "coefficient.class '" + c.coefficient_class + "' does not match the given data ('"
                                                  + to_string(c.coefficient.cls()) + "')");

        // fluid
        const auto& f = require(j, "fluid", "root");
        detail::check_keys(f, "fluid", {"mu", "rho", "phi", "f1"});
        c.fluid.mu = get_or<double>(f, "mu", 1.0);
        c.fluid.rho = get_or<double>(f, "rho", 1.0);
        c.fluid.phi = get_or<double>(f, "phi", 1.0);
        if (f.contains("f1")) {
            const auto& fj = f.at("f1");
            if (!fj.is_array() || static_cast<int>(fj.size()) != m)
                throw Error(Errc::invalid_config, "fluid.f1 must list d-1 component series");
            for (const auto& s : fj)
                c.f1.push_back(detail::parse_series(s, m));
        } else {
            c.f1.assign(m, TrigSeries{});
            c.f1[0].constant = 1.0;
        }
        c.fluid.f1 = make_forcing(c.f1);
        try {
            c.fluid.validate();
            c.fluid.validate_forcing(c.geometry);
        } catch (const Error& e) {
            throw Error(Errc::invalid_config, e.what());
        }

        // regime (classified later, so that alpha <= 0 surfaces as invalid-regime)
        const auto& r = require(j, "regime", "root");
        detail::check_keys(r, "regime", {"kappa", "alpha"});
        c.kappa = get_or<double>(r, "kappa", 1.0);
        c.alpha = get_or<double>(r, "alpha", 2.0);

        // numerics
        const auto& n = require(j, "numerics", "root");
        detail::check_keys(n, "numerics", {"cell_nx", "cell_nz", "macro_n", "dns_elements_per_period", "dns_nz", "solver_tol",
                                           "picard_tol", "max_picard", "n_list", "slope_tol"});
        auto& nc = c.numerics;
        nc.cell_nx = get_or<int>(n, "cell_nx", nc.cell_nx);
        nc.cell_nz = get_or<int>(n, "cell_nz", nc.cell_nz);
        nc.macro_n = get_or<int>(n, "macro_n", nc.macro_n);
        nc.dns_elements_per_period = get_or<int>(n, "dns_elements_per_period", nc.dns_elements_per_period);
        nc.dns_nz = get_or<int>(n, "dns_nz", nc.dns_nz);
        nc.solver_tol = get_or<double>(n, "solver_tol", nc.solver_tol);
        nc.picard_tol = get_or<double>(n, "picard_tol", nc.picard_tol);
        nc.max_picard = get_or<int>(n, "max_picard", nc.max_picard);
        nc.n_list = get_or<std::vector<int>>(n, "n_list", nc.n_list);
        nc.slope_tol = get_or<double>(n, "slope_tol", nc.slope_tol);
        detail::check_tol(nc.solver_tol, "numerics.solver_tol");
        detail::check_tol(nc.picard_tol, "numerics.picard_tol");
        detail::check_tol(nc.slope_tol, "numerics.slope_tol");
        if (nc.cell_nx < 1 || nc.cell_nz < 2 || nc.macro_n < 1 || nc.dns_nz < 1 || nc.dns_elements_per_period < 2
            || nc.max_picard < 1)
            throw Error(Errc::invalid_config, "numerics resolutions must be positive");

        // sweep
        const auto& s = require(j, "sweep", "root");
        detail::check_keys(s, "sweep", {"eps_list"});
        c.eps_list = require(s, "eps_list", "sweep").get<std::vector<double>>();
        if (c.eps_list.empty())
            throw Error(Errc::invalid_config, "sweep.eps_list is empty");
        for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
            if (!(c.eps_list[k] > 0.0))
                throw Error(Errc::invalid_config, "sweep.eps_list entries must be positive");
            if (k > 0 && !(c.eps_list[k] < c.eps_list[k - 1]))
                throw Error(Errc::invalid_config, "sweep.eps_list must be strictly decreasing");
        }

        // output
        const auto& o = require(j, "output", "root");
        detail::check_keys(o, "output", {"directory", "formats"});
        c.output.directory = get_or<std::string>(o, "directory", "out");
        const auto formats = get_or<std::vector<std::string>>(o, "formats", {"csv"});
        c.output.csv = c.output.vtk = false;
        for (const auto& fmt : formats) {
            if (fmt == "csv")
                c.output.csv = true;
            else if (fmt == "vtk")
                c.output.vtk = true;
            else
                throw Error(Errc::invalid_config, "unknown output format '" + fmt + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_config, e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_error, "cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_config, path + ": " + e.what());
    }
    return parse_config(j);
}

} // namespace thinhom
