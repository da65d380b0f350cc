#pragma once

#include <cstddef>
#include <exception>
#include <string>
#include <string_view>

namespace rmesn {

/// Base of every error raised by the library. The message can be prefixed
/// with context (e.g. the pipeline stage) while the dynamic type is kept.
class Error : public std::exception {
 public:
  explicit Error(std::string message) : message_(std::move(message)) {}

  const char* what() const noexcept override { return message_.c_str(); }

  void add_context(std::string_view context) {
    message_ = std::string(context) + ": " + message_;
  }

 private:
  std::string message_;
};

/// Data that violates an invariant (non-finite values, empty sets, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Arguments out of range or with mismatched dimensions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class SampleTooShort : public InvalidInput {
 public:
  SampleTooShort(std::size_t sample, std::size_t length);
  std::size_t sample() const noexcept { return sample_; }

 private:
  std::size_t sample_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Any failure of a numerical routine.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& message, double last_estimate)
      : NumericalError(message), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

class DegenerateReservoir : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(std::size_t epoch);
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace rmesn
