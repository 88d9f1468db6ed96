#pragma once

#include <stdexcept>
#include <string>

namespace isinglab {

// Invalid input: bad domain, marked half-edge outside the cluster graph,
// parity violation, inconsistent prefix that cannot be interpreted.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An enumeration or expansion would exceed its configured size limit.
struct GuardExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical fault: singular action, non-positive conditional probability,
// sign mismatch between evaluation routes.
struct NumericalFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Enumeration guard on the number of configurations, as log2.
// ISING_LAB_GUARD overrides the default of 24.
int enumeration_guard_log2();

}  // namespace isinglab
