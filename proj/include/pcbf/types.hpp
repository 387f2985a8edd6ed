#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pcbf {

// Upper bounds on the problem sizes handled here. Vectors and matrices are
// dynamically sized but never heap-allocate, which keeps the propagation
// inner loops allocation free.
inline constexpr int kMaxStateDim = 8;
inline constexpr int kMaxInputDim = 4;

using StateVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxStateDim, 1>;
using StateRow = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxStateDim>;
using StateMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxStateDim, kMaxStateDim>;
using ControlVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxInputDim, 1>;
using ControlRow = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxInputDim>;
using InputMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxStateDim, kMaxInputDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction parameters (nonpositive horizon, bad lane, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Query outside the domain of a function, e.g. a path evaluated before its start time.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration produced a non-finite state.
class PropagationError : public Error {
 public:
  PropagationError(const std::string& what, double tau)
      : Error(what + " (tau = " + std::to_string(tau) + ")"), tau_(tau) {}
  double tau() const { return tau_; }

 private:
  double tau_;
};

/// A sensitivity formula hit a singular denominator (tangential root, flat maximum).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// A state that the construction rules out was reached anyway.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcbf
