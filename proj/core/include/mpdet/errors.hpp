#pragma once

#include <stdexcept>
#include <string>

namespace mpdet {

/// Invalid configuration or argument (maps to CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A detector or trainer produced a non-finite value (maps to CLI exit code 3).
/// Carries the unfolded-layer index (or epoch) where the value first appeared.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, int where)
      : std::runtime_error(what + " (at index " + std::to_string(where) + ")"),
        where_(where) {}
  int where() const { return where_; }

 private:
  int where_;
};

}  // namespace mpdet
