#pragma once

#include <stdexcept>
#include <string>

namespace sli {

// Data-dependent failures (bad input files, degenerate data, numerical
// breakdown). Precondition violations on arguments use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sli
