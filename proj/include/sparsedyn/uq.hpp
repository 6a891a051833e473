#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sparsedyn/solvers.hpp"

namespace sparsedyn {

enum class BootstrapMode { resample, wild_sign, wild_gaussian };
enum class Reestimate { least_squares, trim };

std::string to_string(BootstrapMode m);
BootstrapMode parse_bootstrap_mode(const std::string& name);

struct BootstrapOptions {
  int draws = 100;
  BootstrapMode mode = BootstrapMode::resample;
  std::uint64_t seed = 0;
  Reestimate reestimate = Reestimate::least_squares;
  TrimConfig trim;  // used when reestimate == trim; k is set to |support|
};

/// Coefficients re-estimated on resampled data with the support held fixed.
struct BootstrapEnsemble {
  Support support;
  std::vector<std::string> labels;  // labels of the support columns
  VectorXd point;                   // model coefficients on the support
  MatrixXd draws;                   // accepted draws x |support|
  std::vector<int> draw_index;      // original draw number of each row
  int requested = 0;
  int failed = 0;
  BootstrapMode mode = BootstrapMode::resample;
  std::uint64_t seed = 0;
  std::string residual_space = "target";
};

/// Residuals r = z - Theta xi; each draw builds z' = Theta xi + r' and
/// re-estimates on the fixed support. Draw b uses its own RNG stream derived
/// from (seed, b).
BootstrapEnsemble bootstrap(const SparseSolution& model, const MatrixXd& theta, const VectorXd& z,
                            const BootstrapOptions& options);

/// Type-7 (linear interpolation) sample quantile, p in [0, 100].
double quantile(std::vector<double> values, double p);

/// Rows follow `percentiles`, columns follow the support.
MatrixXd confidence_intervals(const BootstrapEnsemble& ens, const std::vector<double>& percentiles);

/// Coefficient vector over all P columns at one percentile (zeros off-support).
VectorXd percentile_coefficients(const BootstrapEnsemble& ens, Index columns, double percentile);

/// draw,<labels>
void write_ensemble_csv(std::ostream& os, const BootstrapEnsemble& ens);
/// label,point,p<q>...
void write_quantile_csv(std::ostream& os, const BootstrapEnsemble& ens, const std::vector<double>& percentiles);

}  // namespace sparsedyn
