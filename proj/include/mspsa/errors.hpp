#pragma once

#include <stdexcept>
#include <string>

namespace mspsa {

// Thrown when vector/matrix dimensions disagree with the model or box.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when an input contains NaN/Inf where a finite value is required.
struct NonFiniteInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a mixture matrix is too ill-conditioned to invert reliably
// (condition number above the guard threshold).
struct SingularMixture : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown by the SPSA gradient identities when a perturbation entry is zero.
struct ZeroPerturbationEntry : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown by the brute-force grid optimizer for n > 3.
struct DimensionTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Configuration file parse/validation failure with field context.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field, const std::string& what_arg)
        : std::runtime_error(field + ": " + what_arg), field_(field) {}
    explicit ConfigError(const std::string& what_arg)
        : std::runtime_error(what_arg) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

}  // namespace mspsa
