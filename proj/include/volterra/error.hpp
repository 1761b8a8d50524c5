#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace volterra {

/// Base class for numerical failures that are not plain argument errors.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The implicit diagonal term of a forward-substitution step vanished.
class StepSingularityError : public NumericalError {
public:
  StepSingularityError(std::size_t step, const std::string& what)
      : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

class IllConditionedError : public NumericalError {
public:
  IllConditionedError(double condition, const std::string& what)
      : NumericalError(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

/// No angle beta satisfies phiA < beta < phi with beta + sigma < pi/2.
class NoBudgetError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace volterra
