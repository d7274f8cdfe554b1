#ifndef DIVAFN_ERRORS_HPP
#define DIVAFN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace divafn {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller broke a documented precondition (shape mismatch, bad index, ...).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

/// A numerical routine could not reach its accuracy contract.
class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& msg) : Error(msg) {}
};

/// A serialized payload is malformed. Messages name the byte offset.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Configuration file or flag problem.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Training could not proceed; carries the iteration it happened in.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t iteration, const std::string& msg)
      : Error("iteration " + std::to_string(iteration) + ": " + msg),
        iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Non-finite values appeared during training.
class DivergenceError : public TrainingError {
 public:
  DivergenceError(std::size_t iteration, const std::string& msg)
      : TrainingError(iteration, msg) {}
};

}  // namespace divafn

#endif  // DIVAFN_ERRORS_HPP
