#pragma once
#include <stdexcept>

namespace phasecool {

// Error taxonomy maps onto CLI exit codes:
//   ValidationError -> 1, NumericsError -> 2, IoError -> 3.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace phasecool
