#pragma once

#include <stdexcept>
#include <string>

namespace ergoflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// caller broke a precondition (wrong arity, wrong phase-space variant)
struct ContractViolation : Error { using Error::Error; };
// a value supplied by the caller is not usable (NaN times, empty samples)
struct InputError : Error { using Error::Error; };
// an experiment or quadrature configuration is inconsistent
struct ConfigError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct OverflowError : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };

struct UnsupportedScale : ConfigError {
    explicit UnsupportedScale(const std::string& what)
        : ConfigError("unsupported-scale: " + what) {}
};

struct NumericInstability : Error {
    NumericInstability(const std::string& what, double t)
        : Error(what + " (t=" + std::to_string(t) + ")"), t(t) {}
    double t;
};

struct EvaluationError : Error {
    EvaluationError(const std::string& what, double t)
        : Error(what + " (t=" + std::to_string(t) + ")"), t(t) {}
    double t;
};

}  // namespace ergoflow
