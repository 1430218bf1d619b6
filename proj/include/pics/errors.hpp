#pragma once

#include <stdexcept>
#include <string>

namespace pics {

/// Non-finite values, non-positive-definite matrices, failed factorizations.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long iteration = -1)
      : std::runtime_error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")"
                                          : what),
        iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Raised by the Gauss-Newton solver when the data residual keeps growing.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, long iteration, std::string state_dump)
      : NumericalError(what, iteration), state_dump_(std::move(state_dump)) {}
  const std::string& state_dump() const noexcept { return state_dump_; }

 private:
  std::string state_dump_;
};

}  // namespace pics
