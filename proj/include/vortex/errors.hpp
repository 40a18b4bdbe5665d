#pragma once

#include <stdexcept>
#include <string>

namespace vortex {

/// Invalid user-supplied configuration (CLI exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Time step too large for the explicit transport term.
struct CflError : std::runtime_error {
    CflError(const std::string& what, double suggested) : std::runtime_error(what), suggested_dt(suggested) {}
    double suggested_dt;
};

/// Density left the positivity band: grid too coarse or step too large.
struct SolverInstability : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Picard iterates stopped contracting.
struct HorizonTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vortex
