// Error types shared across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace fdp {

// Invalid argument to a library operation (probability outside its range,
// bad distribution parameters, ...).
struct param_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A quantile-table lookup not covered by the calibrated rows, or no table
// available where one is required.
struct coverage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A scan over the integer support exceeded the configured ceiling.
struct cap_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or unreadable file.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

coverage_error missing_row_error(const std::string& kind, double gamma,
                                 long long d_max, double R);

}  // namespace fdp
