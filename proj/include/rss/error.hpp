#pragma once

#include <stdexcept>
#include <string>

namespace rss {

/// Raised for malformed inputs, violated invariants and failed runs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rss
