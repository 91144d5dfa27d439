#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace conjunctive {

// Base of every error thrown by the library. The CLI maps subclasses to exit
// codes (validation / runtime / io).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IndexError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : IoError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public IoError {
 public:
  SchemaError(const std::string& what, std::string field)
      : IoError(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class TransportError : public BackendError {
 public:
  TransportError(const std::string& what, int attempts)
      : BackendError(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class ProtocolError : public BackendError {
 public:
  ProtocolError(const std::string& what, int status)
      : BackendError(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TruncationError : public BackendError {
 public:
  using BackendError::BackendError;
};

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, int step)
      : Error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace conjunctive
