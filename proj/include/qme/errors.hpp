#pragma once

#include <stdexcept>
#include <string>

namespace qme {

/// Base class for all toolkit errors. CLI maps ConfigError to exit code 2
/// and NumericalError to exit code 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct NonHermitianInput : NumericalError {
    using NumericalError::NumericalError;
};

struct DimensionMismatch : NumericalError {
    using NumericalError::NumericalError;
};

struct NonUniqueSteadyState : NumericalError {
    int null_space_dim;
    explicit NonUniqueSteadyState(int dim_null)
        : NumericalError("steady state is not unique: null-space dimension " +
                         std::to_string(dim_null)),
          null_space_dim(dim_null) {}
};

struct NoConvergence : NumericalError {
    using NumericalError::NumericalError;
};

struct QuadratureFailure : NumericalError {
    using NumericalError::NumericalError;
};

struct OutOfDomain : NumericalError {
    using NumericalError::NumericalError;
};

struct NegativeFrequency : OutOfDomain {
    using OutOfDomain::OutOfDomain;
};

struct NegativeTemperature : OutOfDomain {
    using OutOfDomain::OutOfDomain;
};

struct TraceDrift : NumericalError {
    using NumericalError::NumericalError;
};

struct StepTooLarge : NumericalError {
    using NumericalError::NumericalError;
};

struct GridMismatch : NumericalError {
    using NumericalError::NumericalError;
};

struct GridTooCoarse : NumericalError {
    using NumericalError::NumericalError;
};

struct NoOverlap : NumericalError {
    using NumericalError::NumericalError;
};

struct RepeatedRoots : NumericalError {
    using NumericalError::NumericalError;
};

struct UnsupportedBathCombination : ConfigError {
    using ConfigError::ConfigError;
};

struct CoefficientSingularity : NumericalError {
    double time;
    explicit CoefficientSingularity(double t)
        : NumericalError("exact-oscillator coefficient denominator vanishes at t = " +
                         std::to_string(t)),
          time(t) {}
};

struct ChainTooLong : ConfigError {
    using ConfigError::ConfigError;
};

struct TruncationWarning : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace qme
