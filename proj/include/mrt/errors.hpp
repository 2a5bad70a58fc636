#pragma once

#include <stdexcept>
#include <string>

namespace mrt {

// Base of every error raised by the toolkit. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class PrecisionError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Mollifier half-width exceeds the padding of the offset grid.
class SupportOverflowError : public Error {
 public:
  using Error::Error;
};

// A sinogram row does not decay to zero at the ends of the offset grid.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : Error(what), achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

// Raised by the linear solvers. `magnitude` is the offending pivot (relative
// to max|A|) or, for angle systems, the condition estimate.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double magnitude)
      : Error(what), magnitude_(magnitude) {}
  double magnitude() const noexcept { return magnitude_; }

 private:
  double magnitude_;
};

// ml_value needs moments the triangle does not carry.
class IncompletenessError : public Error {
 public:
  IncompletenessError(const std::string& what, int a, int b)
      : Error(what), a_(a), b_(b) {}
  int missing_a() const noexcept { return a_; }
  int missing_b() const noexcept { return b_; }

 private:
  int a_;
  int b_;
};

}  // namespace mrt
