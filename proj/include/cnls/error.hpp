#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cnls {

enum class ErrorCode {
    invalid_coefficient,
    invalid_grid,
    empty_support,
    non_positive_potential,
    integration_overflow,
    unsupported_nonlinearity,
    hypothesis_failure,
    parameter_out_of_range,
    no_nontrivial_solution,
    symmetry_violation,
    support_contains_origin,
    newton_divergence,
    singular_jacobian,
    division_domain,
    parse_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_coefficient: return "InvalidCoefficient";
    case ErrorCode::invalid_grid: return "InvalidGrid";
    case ErrorCode::empty_support: return "EmptySupport";
    case ErrorCode::non_positive_potential: return "NonPositivePotential";
    case ErrorCode::integration_overflow: return "IntegrationOverflow";
    case ErrorCode::unsupported_nonlinearity: return "UnsupportedNonlinearity";
    case ErrorCode::hypothesis_failure: return "HypothesisFailure";
    case ErrorCode::parameter_out_of_range: return "ParameterOutOfRange";
    case ErrorCode::no_nontrivial_solution: return "NoNontrivialSolution";
    case ErrorCode::symmetry_violation: return "SymmetryViolation";
    case ErrorCode::support_contains_origin: return "SupportContainsOrigin";
    case ErrorCode::newton_divergence: return "NewtonDivergence";
    case ErrorCode::singular_jacobian: return "SingularJacobian";
    case ErrorCode::division_domain: return "DivisionDomain";
    case ErrorCode::parse_error: return "ParseError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// CLI maps them onto exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cnls
