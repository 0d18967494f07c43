#pragma once
#include <stdexcept>
#include <string>

namespace jecrl {

// Bad inputs: malformed files, dimension mismatches, out-of-range arguments.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: non-finite values, solver non-convergence, diverging
// training. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jecrl
