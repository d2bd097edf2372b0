#pragma once

#include <stdexcept>
#include <string>

namespace alignlab {

// Caller passed something that violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A solver or evaluator produced a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance search ran out of candidates before meeting the gap threshold.
class SearchExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A finite truth family has a tied argmax somewhere it carries mass.
class DegenerateClass : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alignlab
