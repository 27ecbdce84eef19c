#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ssds {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state component became non-finite (or a multiplier blew past its
/// ceiling). `component` names the offending piece, e.g. "lambda" or "u[17]".
class NumericalDivergence : public Error {
 public:
  NumericalDivergence(std::string component, double value)
      : Error("numerical divergence in " + component + " (value " + std::to_string(value) + ")"),
        component_(std::move(component)),
        value_(value) {}

  const std::string& component() const { return component_; }
  double value() const { return value_; }

 private:
  std::string component_;
  double value_;
};

/// The stacked dynamics norm is exactly zero, so the adaptive step is
/// undefined. Callers treat this as "fixed point reached".
class FixedPointReached : public Error {
 public:
  FixedPointReached() : Error("dynamics norm is zero: fixed point reached") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Binary or text file did not match its declared format.
class FormatError : public Error {
 public:
  enum class Kind { Unreadable, BadMagic, Truncated, CountMismatch, BadValue };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace ssds
