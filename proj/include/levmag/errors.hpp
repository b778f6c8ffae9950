#pragma once

#include <stdexcept>
#include <string>

namespace levmag {

/// Base class for all toolkit errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
struct invalid_input : error {
    using error::error;
};

/// The potential has no levitating minimum for the given magnet/trap.
struct no_equilibrium_error : error {
    using error::error;
};

/// An iterative solver or fit exhausted its iteration budget.
struct convergence_error : error {
    using error::error;
};

/// The data cannot constrain the requested fit (singular/ill-posed).
struct degenerate_fit_error : error {
    using error::error;
};

/// Requested solution lies outside the supported search domain.
struct no_solution_error : error {
    using error::error;
};

/// Configuration file is missing, malformed, or violates the schema.
struct config_error : error {
    using error::error;
};

/// File parsing failure; message carries the offending line.
struct parse_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

} // namespace levmag
