#pragma once

#include <stdexcept>
#include <string>

namespace ipmlab {

// Caller passed something structurally wrong: mismatched dimensions, an
// unknown name, an option combination the operation cannot honor.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Inputs are well-formed but outside the mathematical domain of the
// operation (a formula precondition fails, a parameter is out of range).
class DomainViolation : public std::runtime_error {
 public:
  explicit DomainViolation(const std::string& what) : std::runtime_error(what) {}
};

// Instance is too large for the exact method behind the operation.
class ScaleError : public std::runtime_error {
 public:
  explicit ScaleError(const std::string& what) : std::runtime_error(what) {}
};

// Data admits no well-defined answer (e.g. singular sample covariance).
class DegenerateDataError : public std::runtime_error {
 public:
  explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

// Target function is provably outside the span being searched.
class NotInSpanError : public std::runtime_error {
 public:
  explicit NotInSpanError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ipmlab
