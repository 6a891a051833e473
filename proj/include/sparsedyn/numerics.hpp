#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sparsedyn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Column index set, sorted ascending, no duplicates.
using Support = std::vector<int>;

enum class OperatorKind { derivative, integral };

/// Dense discrete differentiation or cumulative-integration operator on a
/// uniform grid.
///
/// A derivative operator of order i maps M samples to M - i forward
/// differences. An integral operator is M x M and its first row is zero, so
/// the cumulative integral starts at 0 at the first sample.
struct OperatorMatrix {
  MatrixXd entries;
  OperatorKind kind = OperatorKind::derivative;
  int order = 1;
  double dt = 1.0;
  int newton_order = 0;  // integral operators only

  Index rows() const { return entries.rows(); }
  Index cols() const { return entries.cols(); }
  VectorXd apply(const VectorXd& v) const { return entries * v; }
};

/// Forward difference operator D_order; D_{i+1} = D_1 D_i.
OperatorMatrix diff_matrix(int order, Index samples, double dt);

/// Cumulative integral operator T_order = (L B)^order with the Newton
/// quadrature stencil B of order 1 (trapezoid), 2 or 3.
OperatorMatrix integ_matrix(int order, Index samples, double dt, int newton_order = 1);

/// Applies T_1 without forming it: O(M) per column.
VectorXd cumulative_integral(const VectorXd& f, double dt, int newton_order = 1);
MatrixXd cumulative_integral(const MatrixXd& f, double dt, int newton_order = 1);

/// min ||A_S x_S - b|| with x zero off the support (all columns when absent).
/// QR with column pivoting; throws RankDeficientError rather than returning a
/// minimum-norm solution.
VectorXd least_squares(const MatrixXd& a, const VectorXd& b,
                       const std::optional<Support>& support = std::nullopt);

/// Thin QR of a tall design A = Q R computed once, so that restricted least
/// squares on any column subset only touches the P x P factor:
///   ||A_S x - b||^2 = ||R_S x - Q^T b||^2 + ||(I - Q Q^T) b||^2.
class LeastSquaresProblem {
 public:
  LeastSquaresProblem(const MatrixXd& a, const VectorXd& b);

  struct Fit {
    VectorXd coefficients;  // full length P, zero off-support
    double rss = 0.0;
  };

  Fit solve(const Support& support) const;
  Fit solve_all() const;

  /// Residual sum of squares of an arbitrary coefficient vector.
  double rss(const VectorXd& x) const;

  Index rows() const { return rows_; }
  Index cols() const { return r_.cols(); }
  const MatrixXd& r() const { return r_; }
  const VectorXd& qtb() const { return qtb_; }
  double rss_orthogonal() const { return rss_perp_; }
  /// Gram matrix A^T A = R^T R and A^T b = R^T Q^T b.
  MatrixXd gram() const { return r_.transpose() * r_; }
  VectorXd correlation() const { return r_.transpose() * qtb_; }

 private:
  Index rows_ = 0;
  MatrixXd r_;
  VectorXd qtb_;
  double rss_perp_ = 0.0;
};

/// Relative tolerance used to declare a restricted design rank deficient.
inline constexpr double kRankTolerance = 1e-11;

/// 2-norm condition number via SVD.
double condition_number(const MatrixXd& a);

/// n logarithmically spaced values from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int n);

/// Support of a vector: indices with |x_i| > 0.
Support support_of(const VectorXd& x);

}  // namespace sparsedyn
