#pragma once

#include <stdexcept>
#include <string>

namespace selio {

/// Bad input data: missing files, malformed rows, coverage gaps.  CLI exit 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-finite states, unsolvable systems.  CLI exit 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace selio
