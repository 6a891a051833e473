#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsedyn/numerics.hpp"
#include "sparsedyn/preprocess.hpp"

namespace sparsedyn {

/// Output of every estimator, in the units of the unscaled library.
struct SparseSolution {
  VectorXd coefficients;
  Support support;
  double residual_norm = 0.0;
  double scaled_l1 = 0.0;  // l1 norm of the penalized coefficients in scaled units
  std::map<std::string, double> hyperparams;
  std::vector<std::string> labels;
  std::vector<std::string> flags;

  bool flagged(const std::string& flag) const;
  Index card() const { return static_cast<Index>(support.size()); }
};

/// A regression target against a column-scaled library. The QR factor and
/// Gram matrix of the scaled design are computed once and shared by every
/// estimator. Columns listed as unpenalized (the ones-column of the
/// initial-value form) are never penalized, thresholded or trimmed.
class RegressionProblem {
 public:
  RegressionProblem(const MatrixXd& theta, const VectorXd& y, std::vector<std::string> labels = {},
                    std::vector<int> unpenalized = {});

  Index rows() const { return design_.rows(); }
  Index cols() const { return design_.cols(); }
  const MatrixXd& design() const { return design_; }
  const VectorXd& target() const { return y_; }
  const ScalingRecord& scaling() const { return scaling_; }
  const LeastSquaresProblem& ls() const { return ls_; }
  const MatrixXd& gram() const { return gram_; }
  const VectorXd& correlation() const { return corr_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<int>& unpenalized() const { return unpenalized_; }
  bool penalized(Index i) const { return penalized_mask_[static_cast<std::size_t>(i)]; }
  Index penalized_count() const;

  /// ||y|| after removing the unpenalized columns' least-squares fit.
  double free_target_norm() const;

  /// Builds a solution from scaled coefficients (unscales, computes the
  /// support and residual).
  SparseSolution from_scaled(const VectorXd& scaled, std::map<std::string, double> hyperparams = {},
                             std::vector<std::string> flags = {}) const;

  /// Debiasing least-squares refit on `support` (plus unpenalized columns).
  /// Rank deficiency is reported with the offending labels.
  VectorXd refit_scaled(const Support& support) const;
  SparseSolution refit(const Support& support, std::map<std::string, double> hyperparams = {},
                       std::vector<std::string> flags = {}) const;

  /// Objective pieces in scaled coordinates.
  double half_rss(const VectorXd& scaled) const { return 0.5 * ls_.rss(scaled); }
  double penalized_l1(const VectorXd& scaled) const;

 private:
  MatrixXd design_;
  VectorXd y_;
  ScalingRecord scaling_;
  std::vector<std::string> labels_;
  std::vector<int> unpenalized_;
  std::vector<bool> penalized_mask_;
  LeastSquaresProblem ls_;
  MatrixXd gram_;
  VectorXd corr_;
};

// ---------------------------------------------------------------- lasso

struct LassoOptions {
  int max_sweeps = 20000;
  double tol = 1e-10;  // KKT gap relative to max(1, ||c + gamma||_inf)
};

struct LassoResult {
  VectorXd x;
  double kkt_gap = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// Coordinate descent for
///   1/2 x'Gx - c'x - gamma'x + sum_i w_i |x_i|
/// with per-coordinate weights (w_i = +inf pins x_i to zero). An active-set
/// Newton step is tried whenever descent slows, which settles the exact
/// solution on ill-conditioned Gram matrices.
LassoResult lasso_gram(const MatrixXd& gram, const VectorXd& c, const VectorXd& weights, const VectorXd& gamma,
                       const VectorXd& start, const LassoOptions& options = {});

/// min 1/2 ||theta x - y||^2 + (eta + lambda) ||x||_1 - <gamma, x>, theta used
/// as given. Throws ConvergenceError when the KKT gap stays above tolerance.
SparseSolution lasso(const MatrixXd& theta, const VectorXd& y, double lambda, double eta = 0.0,
                     const std::optional<VectorXd>& linear_term = std::nullopt, const LassoOptions& options = {});

/// Same problem on the scaled design of `problem`; coefficients unscaled.
SparseSolution lasso(const RegressionProblem& problem, double lambda, double eta = 0.0,
                     const std::optional<VectorXd>& linear_term = std::nullopt, const LassoOptions& options = {});

// ----------------------------------------------------------------- STLS

/// Thresholds act on scaled coefficients (unit-norm columns): |xi_i| >= phi.
SparseSolution stls(const RegressionProblem& problem, double phi, int max_iters = 25);
std::vector<SparseSolution> stls(const MatrixXd& theta, const std::vector<VectorXd>& targets, double phi,
                                 const std::vector<std::string>& labels = {}, int max_iters = 25);

struct EnsembleConfig {
  int bootstraps = 100;
  double inclusion = 0.6;
  std::uint64_t seed = 0;
  int max_iters = 25;
};

/// Bagged STLS. The B row-resampled problems are factorized once so a whole
/// threshold grid reuses them.
class EnsembleStls {
 public:
  EnsembleStls(const RegressionProblem& problem, const EnsembleConfig& config);
  SparseSolution solve(double phi) const;
  int failed_bootstraps() const { return failed_; }

 private:
  const RegressionProblem& problem_;
  EnsembleConfig config_;
  std::vector<LeastSquaresProblem> boots_;
  int failed_ = 0;
};

SparseSolution ensemble_stls(const RegressionProblem& problem, double phi, const EnsembleConfig& config = {});

// ----------------------------------------------------------------- IRL1

/// Iteratively reweighted l1: a plain lasso, then `reweight_iters` passes
/// with w_i = 1/(|xi_i| + 1e-6)^q on scaled coefficients. Coefficients that a
/// pass sets to zero stay zero. Ends with a debiasing refit.
SparseSolution irl1(const RegressionProblem& problem, double lambda, double q, int reweight_iters = 2,
                    const LassoOptions& options = {});

// ---------------------------------------------------------- trimmed lasso

/// Sum of the P - k smallest magnitudes.
double trimmed_lasso_penalty(const VectorXd& xi, int k);

/// lambda * sign(xi) on the k largest magnitudes, zero elsewhere; ties go to
/// the lower index.
VectorXd trim_gradient(const VectorXd& xi, int k, double lambda);

struct TrimConfig {
  int k = 1;
  int nu = 10;
  double eta = 1e-3;
  double tol = 1e-8;
  int max_alternations = 200;
  std::uint64_t seed = 0;
  int restarts = 3;         // N(0, 1) starting points per lambda
  bool ls_start = true;     // also start from the full least-squares fit
  bool debias = true;
  bool swap_polish = true;  // 1-swap local search on the winning support
};

/// Converged alternation at one lambda: the best of `restarts` N(0,1) starts
/// plus the optional warm start, in scaled coordinates.
struct TrimIterate {
  VectorXd x;
  double objective = 0.0;
  int alternations = 0;
  bool inexact = false;  // an inner lasso hit its sweep limit
};

double trim_objective(const RegressionProblem& problem, const VectorXd& scaled, int k, double lambda, double eta);

TrimIterate trim_alternation(const RegressionProblem& problem, int k, double lambda, const TrimConfig& config,
                             const std::optional<VectorXd>& warm_start = std::nullopt,
                             std::uint64_t stream = 0);

/// Geometric grid [1e-3 s, s] with nu points, s the free target norm.
std::vector<double> trim_lambda_grid(const RegressionProblem& problem, int nu);

SparseSolution trim_solve(const RegressionProblem& problem, const TrimConfig& config);

/// Initial-value form: regress z on Gamma = [1, T_1 Theta]; the ones-column
/// is unpenalized and its coefficient is the initial value.
struct IvpSolution {
  SparseSolution model;  // over the Theta columns only
  double z0 = 0.0;
};

IvpSolution trim_ivp(const MatrixXd& gamma, const VectorXd& z, const TrimConfig& config,
                     const std::vector<std::string>& labels = {});

}  // namespace sparsedyn
