#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sparsedyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: wrong shape, out-of-range parameter, malformed file.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure that is not the caller's fault in an obvious way.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, std::vector<int> columns)
      : NumericalError(what), columns_(std::move(columns)) {}

  /// Columns (indices into the full design) involved in the dependency.
  const std::vector<int>& columns() const { return columns_; }

 private:
  std::vector<int> columns_;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best, double kkt_gap)
      : NumericalError(what), best_(std::move(best)), kkt_gap_(kkt_gap) {}

  const Eigen::VectorXd& best_iterate() const { return best_; }
  double kkt_gap() const { return kkt_gap_; }

 private:
  Eigen::VectorXd best_;
  double kkt_gap_;
};

/// Raised by corner detection when the curve has no convex bend.
class NoCornerError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace sparsedyn
