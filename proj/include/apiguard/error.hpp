#pragma once

#include <stdexcept>
#include <string>

namespace apiguard {

// Base for every failure surfaced by the library. CLI maps these to a
// nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apiguard
