#include "sparsedyn/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/rng.hpp"

namespace sparsedyn {

std::pair<MatrixXd, ScalingRecord> scale_columns(const MatrixXd& theta, const std::vector<std::string>& labels) {
  ScalingRecord rec;
  rec.diag = theta.colwise().norm().transpose();
  for (Index i = 0; i < rec.diag.size(); ++i) {
    if (!(rec.diag(i) > 0.0) || !std::isfinite(rec.diag(i))) {
      const std::string name =
          static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)] : std::to_string(i);
      throw InvalidArgument("library column '" + name + "' has zero (or non-finite) norm");
    }
  }
  MatrixXd scaled = theta * rec.diag.cwiseInverse().asDiagonal();
  return {std::move(scaled), std::move(rec)};
}

std::pair<Library, ScalingRecord> scale_library(const Library& theta) {
  auto [m, rec] = scale_columns(theta.matrix, theta.labels);
  Library out = theta;
  out.matrix = std::move(m);
  return {std::move(out), std::move(rec)};
}

namespace {

void require_finite(const VectorXd& z) {
  if (!z.allFinite()) throw InvalidArgument("input contains non-finite samples");
}

using SparseMatrix = Eigen::SparseMatrix<double>;

SparseMatrix second_difference_sparse(Index m, double dt) {
  std::vector<Eigen::Triplet<double>> trip;
  const double s = 1.0 / (dt * dt);
  for (Index i = 0; i + 2 < m; ++i) {
    trip.emplace_back(i, i, s);
    trip.emplace_back(i, i + 1, -2.0 * s);
    trip.emplace_back(i, i + 2, s);
  }
  SparseMatrix d(m - 2, m);
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

VectorXd second_difference(const VectorXd& v, double dt) {
  const Index m = v.size();
  return (v.segment(2, m - 2) - 2.0 * v.segment(1, m - 2) + v.head(m - 2)) / (dt * dt);
}

// Dense eigen-decomposition is used for the sweep (all lambdas share it and
// the dof trace is exact) while signals stay short enough.
constexpr Index kDenseSweepLimit = 2500;

}  // namespace

VectorXd tikhonov_denoise(const VectorXd& z, double lambda, double dt) {
  if (z.size() < 3) throw InvalidArgument("tikhonov_denoise needs at least 3 samples");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  require_finite(z);
  if (lambda == 0.0) return z;
  const Index m = z.size();
  const SparseMatrix d2 = second_difference_sparse(m, dt);
  SparseMatrix a = SparseMatrix(d2.transpose() * d2) * lambda;
  for (Index i = 0; i < m; ++i) a.coeffRef(i, i) += 1.0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("Tikhonov factorization failed");
  return ldlt.solve(z);
}

std::vector<double> default_lambda_grid() { return logspace(1e-11, 1.0, 50); }

TikhonovPath tikhonov_sweep(const VectorXd& z, double dt, const std::vector<double>& lambdas, bool with_dof) {
  if (z.size() < 3) throw InvalidArgument("tikhonov_sweep needs at least 3 samples");
  require_finite(z);
  const Index m = z.size();
  TikhonovPath path;
  path.lambdas = lambdas;
  const bool dense = m <= kDenseSweepLimit;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
  VectorXd coeffs;
  if (dense) {
    const MatrixXd d2 = MatrixXd(second_difference_sparse(m, dt));
    eig.compute(d2.transpose() * d2);
    coeffs = eig.eigenvectors().transpose() * z;
  } else if (with_dof) {
    throw InvalidArgument("dof traces are only available for signals up to " + std::to_string(kDenseSweepLimit) +
                          " samples");
  }
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
    VectorXd fit;
    if (dense) {
      const VectorXd gain = (1.0 + lambda * eig.eigenvalues().cwiseMax(0.0).array()).inverse().matrix();
      fit = eig.eigenvectors() * gain.cwiseProduct(coeffs);
      if (with_dof) path.dof.push_back(gain.sum());
    } else {
      fit = tikhonov_denoise(z, lambda, dt);
    }
    path.residual.push_back((fit - z).norm());
    path.penalty.push_back(second_difference(fit, dt).norm());
    path.fitted.push_back(std::move(fit));
  }
  return path;
}

namespace {

// Dense system for one window: unknowns are the derivative samples, plus a
// slope term for order 2.
struct DerivativeSystem {
  MatrixXd normal;  // A^T A + lambda P^T P
  VectorXd rhs;     // A^T z'
  MatrixXd a;
  MatrixXd penalty;
  Index unknowns = 0;
};

MatrixXd integration_design(Index m, int order, double dt, int newton_order) {
  if (order == 1) return integ_matrix(1, m, dt, newton_order).entries;
  MatrixXd a(m, m + 1);
  a.leftCols(m) = integ_matrix(2, m, dt, newton_order).entries;
  for (Index i = 0; i < m; ++i) a(i, m) = static_cast<double>(i) * dt;  // z'(t) includes zdot(0) t
  return a;
}

MatrixXd penalty_matrix(Index m, int order, double dt) {
  MatrixXd p = MatrixXd::Zero(m - 2, order == 1 ? m : m + 1);
  p.leftCols(m) = MatrixXd(second_difference_sparse(m, dt));
  return p;
}

VectorXd solve_window(const VectorXd& zp, int order, double lambda, double dt, int newton_order) {
  const Index m = zp.size();
  const MatrixXd a = integration_design(m, order, dt, newton_order);
  const MatrixXd p = penalty_matrix(m, order, dt);
  MatrixXd normal = MatrixXd::Zero(a.cols(), a.cols());
  normal.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  normal.selfadjointView<Eigen::Lower>().rankUpdate(p.transpose(), lambda);
  const VectorXd rhs = a.transpose() * zp;
  Eigen::LDLT<MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericalError("regularized derivative system is singular");
  VectorXd sol = ldlt.solve(rhs);
  if (!sol.allFinite()) throw NumericalError("regularized derivative system is singular");
  return sol.head(m);
}

void check_derivative_args(const VectorXd& z, int order, double lambda, double dt) {
  if (order != 1 && order != 2) throw InvalidArgument("derivative order must be 1 or 2");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (z.size() < 10) throw InvalidArgument("regularized derivative needs at least 10 samples");
  require_finite(z);
}

}  // namespace

DerivativeEstimate regularized_derivative(const VectorXd& z, int order, double lambda, double dt,
                                          const DerivativeOptions& options) {
  check_derivative_args(z, order, lambda, dt);
  if (options.trim_fraction < 0.0 || options.trim_fraction >= 0.5)
    throw InvalidArgument("trim fraction must lie in [0, 0.5)");
  const Index m = z.size();
  const Index w = std::max<Index>(options.window, 40);
  VectorXd full(m);

  if (m <= w) {
    const double z0 = options.z0.value_or(z(0));
    full = solve_window(z.array() - z0, order, lambda, dt, options.newton_order);
  } else {
    // Overlapping windows; each contributes only its central part, so the
    // end artefacts of every local solve are discarded.
    const Index margin = w / 5;
    const Index step = w - 2 * margin;
    Index begin = 0;
    while (true) {
      const Index b = std::min(begin, m - w);
      const VectorXd local = z.segment(b, w);
      const double z0 = (b == 0 && options.z0) ? *options.z0 : local(0);
      const VectorXd sol = solve_window(local.array() - z0, order, lambda, dt, options.newton_order);
      const Index keep_from = (b == 0) ? 0 : begin + margin;
      const Index keep_to = (b + w >= m) ? m : b + w - margin;
      for (Index i = keep_from; i < keep_to; ++i) full(i) = sol(i - b);
      if (b + w >= m) break;
      begin = b + step;
    }
  }

  const auto trim = static_cast<Index>(std::floor(options.trim_fraction * static_cast<double>(m)));
  DerivativeEstimate out;
  out.offset = trim;
  out.values = full.segment(trim, m - 2 * trim);
  return out;
}

DerivativePath derivative_sweep(const VectorXd& z, int order, double dt, const std::vector<double>& lambdas,
                                const DerivativeOptions& options, Index start) {
  check_derivative_args(z, order, 0.0, dt);
  const Index w = std::min<Index>(std::max<Index>(options.window, 40), z.size() - start);
  if (start < 0 || w < 10) throw InvalidArgument("derivative sweep window out of range");
  const VectorXd local = z.segment(start, w);
  const VectorXd zp = local.array() - local(0);
  const MatrixXd a = integration_design(w, order, dt, options.newton_order);
  const MatrixXd p = penalty_matrix(w, order, dt);
  const MatrixXd ata = a.transpose() * a;
  const MatrixXd ptp = p.transpose() * p;
  const VectorXd rhs = a.transpose() * zp;
  DerivativePath path;
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
    Eigen::LDLT<MatrixXd> ldlt(ata + lambda * ptp);
    const VectorXd sol = ldlt.solve(rhs);
    path.lambdas.push_back(lambda);
    path.residual.push_back((a * sol - zp).norm());
    path.penalty.push_back((p * sol).norm());
  }
  return path;
}

double derivative_lambda_scale(Index window, int order, double dt, const DerivativeOptions& options) {
  if (window < 10) throw InvalidArgument("derivative window too short");
  const MatrixXd a = integration_design(window, order, dt, options.newton_order);
  const MatrixXd p = penalty_matrix(window, order, dt);
  return a.squaredNorm() / p.squaredNorm();
}

double stddev(const VectorXd& z) {
  if (z.size() == 0) return 0.0;
  const double mean = z.mean();
  return std::sqrt((z.array() - mean).square().mean());
}

VectorXd add_awgn(const VectorXd& z, double level_percent, std::uint64_t seed) {
  if (!(level_percent >= 0.0)) throw InvalidArgument("noise level must be non-negative");
  if (level_percent == 0.0) return z;
  const double sigma = level_percent / 100.0 * stddev(z);
  Rng rng = make_rng(seed, "awgn");
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd out = z;
  for (Index i = 0; i < out.size(); ++i) out(i) += sigma * normal(rng);
  return out;
}

VectorXd add_correlated_noise(const VectorXd& z, double level_percent, std::uint64_t seed) {
  if (!(level_percent >= 0.0)) throw InvalidArgument("noise level must be non-negative");
  if (level_percent == 0.0) return z;
  const double sigma = level_percent / 100.0 * stddev(z);
  const double phi = std::exp(-0.5);
  const double innovation = std::sqrt(1.0 - phi * phi);
  Rng rng = make_rng(seed, "ar1");
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd out = z;
  double e = normal(rng);  // stationary start
  for (Index i = 0; i < out.size(); ++i) {
    if (i > 0) e = phi * e + innovation * normal(rng);
    out(i) += sigma * e;
  }
  return out;
}

double snr_db(const VectorXd& truth, const VectorXd& estimate) {
  if (truth.size() != estimate.size()) throw InvalidArgument("snr_db: length mismatch");
  const double noise = (estimate - truth).squaredNorm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(truth.squaredNorm() / noise);
}

}  // namespace sparsedyn
