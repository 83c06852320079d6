#pragma once

#include <stdexcept>
#include <string>

namespace annobench {

// Malformed or inconsistent input data: bad file bytes, violated type
// invariants, mismatched shapes. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures at run time (divergent training, non-finite model).
// The CLI maps these to exit code 3.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace annobench
