#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsedyn/library.hpp"
#include "sparsedyn/numerics.hpp"

namespace sparsedyn {

/// Column norms H_ii of a library. Scaled coefficients are H xi.
struct ScalingRecord {
  VectorXd diag;

  Index size() const { return diag.size(); }
  VectorXd scale(const VectorXd& xi) const { return diag.cwiseProduct(xi); }
  VectorXd unscale(const VectorXd& scaled) const { return scaled.cwiseQuotient(diag); }
};

/// Theta H^{-1} with unit-norm columns. Zero-norm columns are rejected,
/// naming the column.
std::pair<MatrixXd, ScalingRecord> scale_columns(const MatrixXd& theta, const std::vector<std::string>& labels = {});
std::pair<Library, ScalingRecord> scale_library(const Library& theta);

/// (I + lambda D2^T D2)^{-1} z with D2 built on step dt.
VectorXd tikhonov_denoise(const VectorXd& z, double lambda, double dt = 1.0);

/// Solutions of the denoising problem over a lambda grid, with the L-curve
/// coordinates and, when requested, the effective degrees of freedom
/// trace((I + lambda D2^T D2)^{-1}).
struct TikhonovPath {
  std::vector<double> lambdas;
  std::vector<VectorXd> fitted;
  std::vector<double> residual;  // ||zhat - z||
  std::vector<double> penalty;   // ||D2 zhat||
  std::vector<double> dof;       // empty unless requested
};

TikhonovPath tikhonov_sweep(const VectorXd& z, double dt, const std::vector<double>& lambdas, bool with_dof = false);

/// 50 log-spaced points on [1e-11, 1].
std::vector<double> default_lambda_grid();

struct DerivativeOptions {
  int newton_order = 1;          // quadrature stencil inside T_j
  double trim_fraction = 0.05;   // dropped at each end
  std::optional<double> z0;      // initial value; first sample when absent
  Index window = 600;            // longer signals are solved in overlapping windows
};

/// Derivative samples valid for original indices [offset, offset + size).
struct DerivativeEstimate {
  VectorXd values;
  Index offset = 0;
};

/// argmin ||T_j d - (z - z0)||^2 + lambda ||D2 d||^2 for j = order (1 or 2).
/// For order 2 the unknown initial slope enters as an unpenalized ramp.
DerivativeEstimate regularized_derivative(const VectorXd& z, int order, double lambda, double dt,
                                          const DerivativeOptions& options = {});

/// L-curve coordinates of the derivative problem over a lambda grid,
/// evaluated on a window of at most options.window samples starting at
/// `start`.
struct DerivativePath {
  std::vector<double> lambdas;
  std::vector<double> residual;
  std::vector<double> penalty;
};

DerivativePath derivative_sweep(const VectorXd& z, int order, double dt, const std::vector<double>& lambdas,
                                const DerivativeOptions& options = {}, Index start = 0);

/// ||A||_F^2 / ||D2||_F^2 for one window: the lambda at which data fit and
/// smoothness carry comparable weight. Useful for building lambda grids.
double derivative_lambda_scale(Index window, int order, double dt, const DerivativeOptions& options = {});

/// White Gaussian noise with std (level/100) * std(z).
VectorXd add_awgn(const VectorXd& z, double level_percent, std::uint64_t seed);

/// Gaussian AR(1) noise with autocovariance sigma^2 exp(-|n|/2), sigma as
/// in add_awgn.
VectorXd add_correlated_noise(const VectorXd& z, double level_percent, std::uint64_t seed);

/// Population standard deviation.
double stddev(const VectorXd& z);

/// 10 log10(signal power / noise power) with the noise taken as estimate - truth.
double snr_db(const VectorXd& truth, const VectorXd& estimate);

}  // namespace sparsedyn
