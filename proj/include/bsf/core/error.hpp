#pragma once

#include <stdexcept>
#include <string>

namespace bsf {

// Extent mismatch between operands, or a tensor shape that contradicts a layer.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain of an operation (probabilities, labels).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Call sequence violated, e.g. backward without a matching forward.
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct CapacityError : std::length_error {
  using std::length_error::length_error;
};

// Network topology not supported by an operation (pruning next to a conv, ...).
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pruning removed every unit of some layer.
struct DegenerateModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-provided data or configuration.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimization diverged.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bsf
