#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sparsedyn/numerics.hpp"

namespace sparsedyn {

/// 1 iff every estimated support equals its true support.
int support_recovery(const std::vector<Support>& estimated, const std::vector<Support>& truth);

/// Root mean square over all entries of Theta (Xi_hat - Xi_true).
double rmse(const MatrixXd& theta, const MatrixXd& xi_hat, const MatrixXd& xi_true);

/// ||Xi_hat - Xi_true|| / ||Xi_true|| (Frobenius).
double coeff_error(const MatrixXd& xi_hat, const MatrixXd& xi_true);

/// Wilson score interval for a binomial proportion.
struct Proportion {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

Proportion wilson_interval(int successes, int trials, double z = 1.959963984540054);

struct TrialResult {
  std::string estimator;
  double noise_percent = 0.0;
  double length = 0.0;
  int degree = 0;
  std::uint64_t seed = 0;
  int support_exact = 0;
  double rmse = 0.0;
  double coeff_error = 0.0;
};

/// One row per (noise, length, estimator) cell.
struct HeatmapCell {
  std::string estimator;
  double noise_percent = 0.0;
  double length = 0.0;
  int trials = 0;
  Proportion recovery;
  double coeff_error_mean = 0.0;
  double rmse_mean = 0.0;
};

std::vector<HeatmapCell> aggregate(const std::vector<TrialResult>& trials);

/// noise,length,estimator,trials,es_mean,es_lower,es_upper,ec_mean,rmse_mean
void write_heatmap_csv(std::ostream& os, const std::vector<HeatmapCell>& cells);

/// First time at which |forecast - reference| exceeds `fraction` of the
/// reference range, or -1 when it never does.
double divergence_time(const VectorXd& t, const VectorXd& reference, const VectorXd& forecast, double fraction = 0.1);

}  // namespace sparsedyn
