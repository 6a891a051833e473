#include "sparsedyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/timeseries.hpp"

namespace sparsedyn {

int support_recovery(const std::vector<Support>& estimated, const std::vector<Support>& truth) {
  if (estimated.size() != truth.size()) throw InvalidArgument("support_recovery: state counts differ");
  for (std::size_t j = 0; j < truth.size(); ++j) {
    Support a = estimated[j], b = truth[j];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return 0;
  }
  return 1;
}

double rmse(const MatrixXd& theta, const MatrixXd& xi_hat, const MatrixXd& xi_true) {
  if (xi_hat.rows() != xi_true.rows() || xi_hat.cols() != xi_true.cols() || theta.cols() != xi_hat.rows())
    throw InvalidArgument("rmse: shape mismatch");
  const MatrixXd diff = theta * (xi_hat - xi_true);
  if (diff.size() == 0) return 0.0;
  return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

double coeff_error(const MatrixXd& xi_hat, const MatrixXd& xi_true) {
  if (xi_hat.rows() != xi_true.rows() || xi_hat.cols() != xi_true.cols())
    throw InvalidArgument("coeff_error: shape mismatch");
  const double n = xi_true.norm();
  if (!(n > 0.0)) throw InvalidArgument("coeff_error: true coefficients are all zero");
  return (xi_hat - xi_true).norm() / n;
}

Proportion wilson_interval(int successes, int trials, double z) {
  if (trials <= 0 || successes < 0 || successes > trials) throw InvalidArgument("wilson_interval: bad counts");
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<HeatmapCell> aggregate(const std::vector<TrialResult>& trials) {
  using Key = std::tuple<double, double, std::string>;
  std::map<Key, std::vector<const TrialResult*>> groups;
  for (const auto& t : trials) groups[{t.noise_percent, t.length, t.estimator}].push_back(&t);
  std::vector<HeatmapCell> out;
  for (const auto& [key, items] : groups) {
    HeatmapCell c;
    std::tie(c.noise_percent, c.length, c.estimator) = key;
    c.trials = static_cast<int>(items.size());
    int ok = 0;
    for (const auto* t : items) {
      ok += t->support_exact;
      c.coeff_error_mean += t->coeff_error / c.trials;
      c.rmse_mean += t->rmse / c.trials;
    }
    c.recovery = wilson_interval(ok, c.trials);
    out.push_back(c);
  }
  return out;
}

void write_heatmap_csv(std::ostream& os, const std::vector<HeatmapCell>& cells) {
  os << "noise,length,estimator,trials,es_mean,es_lower,es_upper,ec_mean,rmse_mean\n";
  for (const auto& c : cells)
    os << format_double(c.noise_percent) << ',' << format_double(c.length) << ',' << c.estimator << ',' << c.trials
       << ',' << format_double(c.recovery.mean) << ',' << format_double(c.recovery.lower) << ','
       << format_double(c.recovery.upper) << ',' << format_double(c.coeff_error_mean) << ','
       << format_double(c.rmse_mean) << '\n';
}

double divergence_time(const VectorXd& t, const VectorXd& reference, const VectorXd& forecast, double fraction) {
  if (t.size() != reference.size() || t.size() != forecast.size())
    throw InvalidArgument("divergence_time: length mismatch");
  if (t.size() == 0) return -1.0;
  const double range = reference.maxCoeff() - reference.minCoeff();
  for (Index i = 0; i < t.size(); ++i)
    if (!std::isfinite(forecast(i)) || std::abs(forecast(i) - reference(i)) > fraction * range) return t(i);
  return -1.0;
}

}  // namespace sparsedyn
