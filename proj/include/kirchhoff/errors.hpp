#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kirchhoff {

/// Input that violates an operation's precondition (dimension mismatch,
/// out-of-range index, malformed parameters).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// m(σ) ≤ 0 somewhere on the range where the equation has to stay hyperbolic.
class HyperbolicityViolation : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A numerical procedure could not deliver a trustworthy value
/// (quadrature did not converge, non-finite intermediate).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Galerkin integration that stopped before T inside a larger pipeline.
class TrajectoryFailure : public NumericalFailure {
 public:
  TrajectoryFailure(const std::string& what, bool budget_exceeded)
      : NumericalFailure(what), budget_exceeded_(budget_exceeded) {}
  bool budget_exceeded() const noexcept { return budget_exceeded_; }

 private:
  bool budget_exceeded_;
};

/// A lacunary profile whose requested margin cannot be met; `failing_k` is the
/// first hole-start at which the check failed.
class InfeasibleProfile : public InvalidInput {
 public:
  InfeasibleProfile(const std::string& what, std::size_t failing_k)
      : InvalidInput(what), failing_k_(failing_k) {}
  std::size_t failing_k() const noexcept { return failing_k_; }

 private:
  std::size_t failing_k_;
};

}  // namespace kirchhoff
