#pragma once

#include <stdexcept>
#include <string>

namespace qmetro {

// Malformed or out-of-contract input (bad dimensions, non-normalized states, bad knobs).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical invariant that should hold by construction was violated.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// F_Q is not invertible; the message names the null direction.
class SingularFisherError : public NumericalError {
 public:
  explicit SingularFisherError(const std::string& what) : NumericalError(what) {}
};

// An outcome with vanishing probability carries a non-vanishing derivative.
class SingularOutcomeError : public NumericalError {
 public:
  SingularOutcomeError(const std::string& what, std::size_t outcome)
      : NumericalError(what), outcome_(outcome) {}
  std::size_t outcome() const noexcept { return outcome_; }

 private:
  std::size_t outcome_;
};

// The constructed measurement failed to reach the bound.
class ConstructionError : public NumericalError {
 public:
  explicit ConstructionError(const std::string& what) : NumericalError(what) {}
};

}  // namespace qmetro
