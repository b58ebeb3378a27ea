#pragma once

#include <stdexcept>
#include <string>

namespace twistring {

/// Raised for malformed or out-of-schema configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Failure {
    InvalidArgument,
    NoSignChange,
    IndexSwitch,
    Degenerate,
    NoClosedForm,
    Singular,
    BlowUp,
    NonFinite,
    OperatorUndefined,
    NoConvergence,
    LeftFeasibility,
};

inline const char* name(Failure f)
{
    switch (f) {
    case Failure::InvalidArgument: return "invalid_argument";
    case Failure::NoSignChange: return "no_sign_change";
    case Failure::IndexSwitch: return "index_switch";
    case Failure::Degenerate: return "degenerate";
    case Failure::NoClosedForm: return "no_closed_form";
    case Failure::Singular: return "singular";
    case Failure::BlowUp: return "blow_up";
    case Failure::NonFinite: return "non_finite";
    case Failure::OperatorUndefined: return "operator_undefined";
    case Failure::NoConvergence: return "no_convergence";
    case Failure::LeftFeasibility: return "left_feasibility";
    }
    return "unknown";
}

/// Raised when a numerical procedure cannot produce a valid result.
class NumericalError : public std::runtime_error {
public:
    NumericalError(Failure kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Failure kind() const noexcept { return kind_; }

private:
    Failure kind_;
};

} // namespace twistring
