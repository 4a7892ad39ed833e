#pragma once

#include <stdexcept>
#include <string>

namespace nsm {

// Thrown when two fields that must share a grid do not.
struct BoxMismatch : std::invalid_argument {
    explicit BoxMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Negative-power symbol applied to a field with a nonzero mean mode.
struct NegativePowerOnMeanMode : std::domain_error {
    explicit NegativePowerOnMeanMode(const std::string& what) : std::domain_error(what) {}
};

// Vector potential requested for a field with a nonzero mean mode.
struct NonzeroMeanMode : std::domain_error {
    explicit NonzeroMeanMode(const std::string& what) : std::domain_error(what) {}
};

// Vector potential requested for a field that is not divergence free.
struct NonSolenoidal : std::domain_error {
    explicit NonSolenoidal(const std::string& what) : std::domain_error(what) {}
};

// Fixed-point Ohm solve failed to reach tolerance within the iteration cap.
struct NoConvergence : std::runtime_error {
    NoConvergence(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

// Time step too large for the advective/coupling rates of the current state.
struct CflViolation : std::runtime_error {
    explicit CflViolation(const std::string& what) : std::runtime_error(what) {}
};

// Unrecognized initial-data family name.
struct UnknownFamily : std::invalid_argument {
    explicit UnknownFamily(const std::string& what) : std::invalid_argument(what) {}
};

// Rate fit fed a nonpositive abscissa or ordinate.
struct NonPositiveInput : std::invalid_argument {
    explicit NonPositiveInput(const std::string& what) : std::invalid_argument(what) {}
};

// Rate fit over errors at the roundoff floor; the exponent would be noise.
struct FitDegenerate : std::runtime_error {
    explicit FitDegenerate(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent checkpoint payload.
struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed configuration value.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace nsm
