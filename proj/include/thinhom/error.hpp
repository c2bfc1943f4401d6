// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace thinhom {

enum class Errc {
    invalid_resolution,
    thin_domain_violated,
    invalid_geometry,
    out_of_domain,
    non_elliptic_coefficient,
    unsupported_field,
    invalid_regime,
    space_mismatch,
    singular_system,
    convergence_failure,
    unsupported_regime_coefficient,
    invalid_parameter,
    regime_mismatch,
    invalid_effective_matrix,
    picard_divergence,
    shape_error,
    invalid_data,
    invalid_config,
    io_error,
};

inline std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::invalid_resolution: return "invalid-resolution";
    case Errc::thin_domain_violated: return "thin-domain-violated";
    case Errc::invalid_geometry: return "invalid-geometry";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::non_elliptic_coefficient: return "non-elliptic-coefficient";
    case Errc::unsupported_field: return "unsupported-field";
    case Errc::invalid_regime: return "invalid-regime";
    case Errc::space_mismatch: return "space-mismatch";
    case Errc::singular_system: return "singular-system";
    case Errc::convergence_failure: return "convergence-failure";
    case Errc::unsupported_regime_coefficient: return "unsupported-regime-coefficient";
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::regime_mismatch: return "regime-mismatch";
    case Errc::invalid_effective_matrix: return "invalid-effective-matrix";
    case Errc::picard_divergence: return "picard-divergence";
    case Errc::shape_error: return "shape-error";
    case Errc::invalid_data: return "invalid-data";
    case Errc::invalid_config: return "invalid-config";
    case Errc::io_error: return "io-error";
    }
    return "unknown";
}

/// Base exception of the library; every failure carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Thrown when a linear solve does not reach the requested residual.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double final_residual)
        : Error(Errc::convergence_failure, what), residual_(final_residual)
    {}

    double final_residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Thrown when the Picard iteration exceeds its iteration budget.
class PicardDivergence : public Error {
public:
    PicardDivergence(const std::string& what, std::vector<double> history)
        : Error(Errc::picard_divergence, what), history_(std::move(history))
    {}

    const std::vector<double>& update_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

} // namespace thinhom
