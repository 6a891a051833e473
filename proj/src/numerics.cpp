#include "sparsedyn/numerics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sparsedyn/errors.hpp"

namespace sparsedyn {
namespace {

MatrixXd first_difference(Index samples, double dt) {
  MatrixXd d = MatrixXd::Zero(samples - 1, samples);
  for (Index i = 0; i + 1 < samples; ++i) {
    d(i, i) = -1.0 / dt;
    d(i, i + 1) = 1.0 / dt;
  }
  return d;
}

void check_integral_args(Index samples, double dt, int newton_order) {
  if (newton_order < 1 || newton_order > 3) throw InvalidArgument("newton_order must be 1, 2 or 3");
  if (samples < 4) throw InvalidArgument("integral operator needs at least 4 samples");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
}

}  // namespace

OperatorMatrix diff_matrix(int order, Index samples, double dt) {
  if (order < 1) throw InvalidArgument("derivative order must be >= 1");
  if (samples <= order) throw InvalidArgument("diff_matrix needs more samples than the derivative order");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");

  MatrixXd d = first_difference(samples, dt);
  for (int i = 1; i < order; ++i) d = first_difference(samples - i, dt) * d;
  return OperatorMatrix{std::move(d), OperatorKind::derivative, order, dt, 0};
}

OperatorMatrix integ_matrix(int order, Index samples, double dt, int newton_order) {
  if (order < 1) throw InvalidArgument("integral order must be >= 1");
  check_integral_args(samples, dt, newton_order);

  // T_1 = L B, and T_1 X is the cumulative quadrature of the columns of X,
  // so T_{i+1} = T_1 T_i is built column by column in O(M^2).
  MatrixXd t = cumulative_integral(MatrixXd(MatrixXd::Identity(samples, samples)), dt, newton_order);
  for (int i = 1; i < order; ++i) t = cumulative_integral(t, dt, newton_order);
  return OperatorMatrix{std::move(t), OperatorKind::integral, order, dt, newton_order};
}

VectorXd cumulative_integral(const VectorXd& f, double dt, int newton_order) {
  const Index m = f.size();
  check_integral_args(m, dt, newton_order);
  VectorXd out(m);
  out(0) = 0.0;
  double acc = 0.0;
  for (Index r = 1; r < m; ++r) {
    double piece = 0.0;
    switch (newton_order) {
      case 1:
        piece = (f(r - 1) + f(r)) * dt / 2.0;
        break;
      case 2:
        piece = (r + 1 < m) ? (5.0 * f(r - 1) + 8.0 * f(r) - f(r + 1))
                            : (-f(r - 2) + 8.0 * f(r - 1) + 5.0 * f(r));
        piece *= dt / 12.0;
        break;
      default:
        if (r == 1) {
          piece = 9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3);
        } else if (r + 1 < m) {
          piece = -f(r - 2) + 13.0 * f(r - 1) + 13.0 * f(r) - f(r + 1);
        } else {
          piece = f(r - 3) - 5.0 * f(r - 2) + 19.0 * f(r - 1) + 9.0 * f(r);
        }
        piece *= dt / 24.0;
        break;
    }
    acc += piece;
    out(r) = acc;
  }
  return out;
}

MatrixXd cumulative_integral(const MatrixXd& f, double dt, int newton_order) {
  MatrixXd out(f.rows(), f.cols());
  for (Index c = 0; c < f.cols(); ++c) out.col(c) = cumulative_integral(VectorXd(f.col(c)), dt, newton_order);
  return out;
}

namespace {

std::string describe_columns(const std::vector<int>& cols) {
  std::ostringstream os;
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  return os.str();
}

// Solves min ||a x - b|| for a small dense matrix whose columns correspond
// to `columns` of the full problem.
VectorXd restricted_solve(const MatrixXd& a, const VectorXd& b, const Support& columns) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < a.cols()) {
    // Columns the pivoting pushed past the rank are the dependent ones.
    std::vector<int> dependent;
    for (Index i = qr.rank(); i < a.cols(); ++i) dependent.push_back(columns[qr.colsPermutation().indices()(i)]);
    throw RankDeficientError("rank-deficient least squares on columns {" + describe_columns(dependent) + "}",
                             dependent);
  }
  return qr.solve(b);
}

Support full_support(Index p) {
  Support s(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) s[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return s;
}

}  // namespace

VectorXd least_squares(const MatrixXd& a, const VectorXd& b, const std::optional<Support>& support) {
  if (a.rows() != b.size()) throw InvalidArgument("least_squares: row count mismatch");
  const Support s = support ? *support : full_support(a.cols());
  VectorXd x = VectorXd::Zero(a.cols());
  if (s.empty()) return x;
  if (static_cast<Index>(s.size()) > a.rows()) throw InvalidArgument("least_squares: more unknowns than rows");
  MatrixXd as(a.rows(), static_cast<Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] < 0 || s[j] >= a.cols()) throw InvalidArgument("least_squares: support index out of range");
    as.col(static_cast<Index>(j)) = a.col(s[j]);
  }
  const VectorXd xs = restricted_solve(as, b, s);
  for (std::size_t j = 0; j < s.size(); ++j) x(s[j]) = xs(static_cast<Index>(j));
  return x;
}

LeastSquaresProblem::LeastSquaresProblem(const MatrixXd& a, const VectorXd& b) : rows_(a.rows()) {
  if (a.rows() != b.size()) throw InvalidArgument("LeastSquaresProblem: row count mismatch");
  if (a.rows() < a.cols()) throw InvalidArgument("LeastSquaresProblem: fewer rows than columns");
  Eigen::HouseholderQR<MatrixXd> qr(a);
  const Index p = a.cols();
  r_ = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  VectorXd qtb_full = qr.householderQ().transpose() * b;
  qtb_ = qtb_full.head(p);
  rss_perp_ = qtb_full.tail(a.rows() - p).squaredNorm();
}

LeastSquaresProblem::Fit LeastSquaresProblem::solve(const Support& support) const {
  Fit fit;
  fit.coefficients = VectorXd::Zero(cols());
  if (support.empty()) {
    fit.rss = qtb_.squaredNorm() + rss_perp_;
    return fit;
  }
  MatrixXd rs(cols(), static_cast<Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) rs.col(static_cast<Index>(j)) = r_.col(support[j]);
  const VectorXd xs = restricted_solve(rs, qtb_, support);
  for (std::size_t j = 0; j < support.size(); ++j) fit.coefficients(support[j]) = xs(static_cast<Index>(j));
  fit.rss = (rs * xs - qtb_).squaredNorm() + rss_perp_;
  return fit;
}

LeastSquaresProblem::Fit LeastSquaresProblem::solve_all() const { return solve(full_support(cols())); }

double LeastSquaresProblem::rss(const VectorXd& x) const { return (r_ * x - qtb_).squaredNorm() + rss_perp_; }

double condition_number(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

std::vector<double> logspace(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi > 0.0)) throw InvalidArgument("logspace: need n >= 1 and positive bounds");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
  return out;
}

Support support_of(const VectorXd& x) {
  Support s;
  for (Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) s.push_back(static_cast<int>(i));
  return s;
}

}  // namespace sparsedyn
