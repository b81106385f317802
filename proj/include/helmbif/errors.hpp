#pragma once

#include <stdexcept>
#include <string>

namespace helmbif {

enum class ErrorKind {
  Diverged,
  Resolution,
  Range,
  Precision,
  InconsistentProfile,
  SingularParameter,
  NotInU1,
  Surjectivity,
  Domain,
  NearSingular,
  StepTooSmall,
  NotConverged,
  Config,
};

const char* to_string(ErrorKind kind);

/// Base of every numerical failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Integration produced a non-finite value; carries the last radius reached.
class DivergedError : public Error {
 public:
  DivergedError(double last_radius, const std::string& what)
      : Error(ErrorKind::Diverged, what), last_radius_(last_radius) {}
  double last_radius() const noexcept { return last_radius_; }

 private:
  double last_radius_;
};

/// A requested bound is not reachable; carries the achievable one.
class PrecisionError : public Error {
 public:
  PrecisionError(double achievable, const std::string& what)
      : Error(ErrorKind::Precision, what), achievable_(achievable) {}
  double achievable() const noexcept { return achievable_; }

 private:
  double achievable_;
};

/// Bracketing ran past the search limit.
class SurjectivityError : public Error {
 public:
  SurjectivityError(double last_bracket, const std::string& what)
      : Error(ErrorKind::Surjectivity, what), last_bracket_(last_bracket) {}
  double last_bracket() const noexcept { return last_bracket_; }

 private:
  double last_bracket_;
};

}  // namespace helmbif
