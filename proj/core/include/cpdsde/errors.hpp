#pragma once

#include <stdexcept>
#include <string>

namespace cpdsde {

// Malformed or out-of-contract user data (files, labels, configs).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Least-squares fit could not be computed (rank-deficient design).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite state or loss during simulation or optimisation.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric is mathematically undefined for the given label sets.
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Programming error: shape mismatch, non-scalar loss and similar.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cpdsde
