#pragma once

#include <stdexcept>
#include <string>

namespace warpflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An evaluator returned a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double x)
      : Error(what + " at x = " + std::to_string(x)), x_(x) {}
  double x() const { return x_; }

 private:
  double x_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_time)
      : Error(what + " (last valid t = " + std::to_string(last_time) + ")"),
        last_time_(last_time) {}
  double last_time() const { return last_time_; }

 private:
  double last_time_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The model lacks the structure an operation needs (e.g. slope bounds).
class NotApplicable : public Error {
 public:
  using Error::Error;
};

class ConditionsNotSatisfied : public Error {
 public:
  using Error::Error;
};

class ConjugatePointError : public Error {
 public:
  explicit ConjugatePointError(double t)
      : Error("conjugate point detected at t = " + std::to_string(t)), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class SingularFrameError : public Error {
 public:
  explicit SingularFrameError(double t)
      : Error("singular Jacobi frame at t = " + std::to_string(t)), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class NotContractingError : public Error {
 public:
  using Error::Error;
};

}  // namespace warpflow
