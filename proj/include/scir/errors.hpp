#ifndef SCIR_ERRORS_HPP
#define SCIR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace scir {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input outside the supported parameter range (alpha, lambda, ...).
struct DomainError : Error {
    using Error::Error;
};

// A numerical accuracy contract could not be met (normalization,
// probe-point inversion check, tail handoff, ...).
struct AccuracyError : Error {
    using Error::Error;
};

// Observed path touches zero where the residuals need strict positivity.
struct DegeneratePathError : Error {
    using Error::Error;
};

// A nondegeneracy condition on (x0, a1, a2) is violated.
struct ConditionError : Error {
    using Error::Error;
};

// Malformed experiment configuration.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace scir

#endif
