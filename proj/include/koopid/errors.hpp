#pragma once

#include <stdexcept>
#include <string>

namespace koopid {

// Base class of all library errors. Pipeline stages prepend context as an
// error propagates, so a failure deep in the chain reports where it happened.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}

  void add_context(const std::string& stage) {
    context_ = context_.empty() ? stage : stage + ": " + context_;
    composed_ = context_ + ": " + std::runtime_error::what();
  }

  const char* what() const noexcept override {
    return composed_.empty() ? std::runtime_error::what() : composed_.c_str();
  }

 private:
  std::string context_;
  std::string composed_;
};

// Invalid arguments, shapes, or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A multi-index that does not belong to the queried basis.
class OutOfBasisError : public Error {
 public:
  using Error::Error;
};

// Matrix numerically singular where an inverse/log is required.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// An eigenvalue on the closed negative real axis: the principal matrix
// logarithm does not exist as a real matrix.
class NegativeRealEigenvalueError : public Error {
 public:
  using Error::Error;
};

// Decomposition failure or non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// File and serialization problems.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace koopid
