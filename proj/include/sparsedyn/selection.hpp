#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sparsedyn/preprocess.hpp"
#include "sparsedyn/solvers.hpp"

namespace sparsedyn {

enum class Criterion { aic, aicc, bic, hqc, ric, ricc };

enum class SelectionMethod { aic, aicc, bic, hqc, ric, ricc, lcurve, trim_lcurve, gcv };

std::string to_string(SelectionMethod m);
SelectionMethod parse_selection(const std::string& name);
bool is_information_criterion(SelectionMethod m);
Criterion criterion_of(SelectionMethod m);

inline constexpr double kHqcConstant = 2.01;

/// Penalty factor Pi of the criterion for a model with `card` terms.
double penalty_factor(Criterion kind, Index card, Index m, Index p, double hqc_c = kHqcConstant);

/// rss + Pi sigma2 card.
double info_criterion(double rss, Index card, Index m, Index p, double sigma2, Criterion kind,
                      double hqc_c = kHqcConstant);

/// rss of the full least-squares fit divided by M - P.
double ls_noise_variance(const RegressionProblem& problem);

/// Corner of a Pareto curve: both axes normalized to [0, 1], the polyline
/// resampled uniformly by arc length, curvature from circumscribed circles
/// of consecutive samples. Traversed with the abscissa increasing, the
/// corner is the largest positive (counter-clockwise) bend. Returns the
/// index of the input point nearest to it.
struct CornerAnalysis {
  Index corner = 0;
  std::vector<double> curvature;  // per input point, largest nearby bend
};

CornerAnalysis lcurve_analysis(const std::vector<std::pair<double, double>>& points, int resample = 200);
Index lcurve_corner(const std::vector<std::pair<double, double>>& points, int resample = 200);

/// Minimizer of rss / (M (1 - dof/M)^2).
std::vector<double> gcv_scores(const std::vector<double>& residual_norms, const std::vector<double>& dof, Index m);
Index gcv(const std::vector<double>& residual_norms, const std::vector<double>& dof, Index m);

/// Corner of (log residual, k) followed by forward steps while
/// (r_i / r_{i+1})^2 > 1 + tol. Residuals below 1e-9 of the largest are
/// treated as equal (exact fits).
struct TrimSelection {
  Index corner = 0;
  Index chosen = 0;
};

TrimSelection trim_select_index(const std::vector<double>& residuals, const std::vector<int>& k_grid,
                                double tol_percent = 5.0);
int trim_select(const std::vector<double>& residuals, const std::vector<int>& k_grid, double tol_percent = 5.0);

/// Hyperparameter chosen for a Tikhonov sweep by L-curve or GCV.
Index select_tikhonov(const TikhonovPath& path, SelectionMethod method);

/// L-curve choice of the regularized-derivative lambda, evaluated on one
/// window starting at `start`. The grid is built around
/// derivative_lambda_scale so it adapts to dt and the window length.
double select_derivative_lambda(const VectorXd& z, int order, double dt, const DerivativeOptions& options = {},
                                Index start = 0);

/// Family of solutions over a grid plus the chosen one.
struct SelectionPath {
  std::vector<double> grid;
  std::vector<SparseSolution> solutions;
  std::vector<bool> valid;
  std::vector<std::string> errors;
  std::vector<double> abscissa;
  std::vector<double> ordinate;
  std::vector<double> scores;
  Index chosen = -1;
  Index corner = -1;
  SelectionMethod method = SelectionMethod::ricc;

  const SparseSolution& best() const;
};

struct SweepContext {
  Index samples = 0;     // M
  Index columns = 0;     // P
  double sigma2 = 0.0;   // for information criteria
  double tol_percent = 5.0;
  double hqc_c = kHqcConstant;
};

SweepContext context_for(const RegressionProblem& problem);

using Estimator = std::function<SparseSolution(double)>;

/// Evaluates the estimator on every grid value (failures are recorded and
/// skipped) and selects a model. For trim_lcurve the grid holds k values.
SelectionPath sweep(const Estimator& estimator, const std::vector<double>& grid, SelectionMethod method,
                    const SweepContext& context);

/// Columns: grid, residual, abscissa, ordinate, score, card, valid, chosen.
void write_path_csv(std::ostream& os, const SelectionPath& path);

}  // namespace sparsedyn
