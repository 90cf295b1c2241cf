#pragma once

#include <stdexcept>
#include <string>

namespace homspec {

// Base class for all homspec errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed files, unknown columns, bad config fields. CLI exit code 2.
struct SchemaError : Error {
    using Error::Error;
};

// Valid schema but unusable values: violated preconditions, empty grids,
// degenerate windows. CLI exit code 2.
struct DataError : Error {
    using Error::Error;
};

// Numerical failure: non-convergence, no dominant peak, Nyquist violation.
// CLI exit code 3.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace homspec
