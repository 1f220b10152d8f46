#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbp {

// Root of every failure the library reports. Precondition violations on
// arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The metric g = (E - U)/U0 is not positive at the requested point.
class ForbiddenRegion : public Error {
 public:
  ForbiddenRegion(const std::string& what, double metric, int stage = -1)
      : Error(what), metric_(metric), stage_(stage) {}

  double metric() const { return metric_; }
  // RK4 stage (1..4) at which the condition was hit, -1 outside a step.
  int stage() const { return stage_; }

 private:
  double metric_;
  int stage_;
};

class SingularFrame : public Error {
 public:
  using Error::Error;
};

class DegenerateFixedTriple : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class DegenerateSeparation : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class TooShort : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& rule)
      : Error(field + ": " + rule), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tbp
