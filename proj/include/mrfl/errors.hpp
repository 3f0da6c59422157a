#pragma once

#include <stdexcept>
#include <string>

namespace mrfl {

// Exact enumeration refused because the configuration space is too large.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A bounded query asked for more nodes than the oracle allows, or the
// backing sample stream ran dry.
class QueryCapacityExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No sample observes every node of the requested set.
class InsufficientCoverage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The model generator could not satisfy its constraints.
class InfeasibleSpec : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A proven inequality failed numerically. Always a bug somewhere.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mrfl
