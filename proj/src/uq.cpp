#include "sparsedyn/uq.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/rng.hpp"
#include "sparsedyn/timeseries.hpp"

namespace sparsedyn {

std::string to_string(BootstrapMode m) {
  switch (m) {
    case BootstrapMode::resample: return "resample";
    case BootstrapMode::wild_sign: return "wild_sign";
    case BootstrapMode::wild_gaussian: return "wild_gaussian";
  }
  return "unknown";
}

BootstrapMode parse_bootstrap_mode(const std::string& name) {
  if (name == "resample") return BootstrapMode::resample;
  if (name == "wild_sign") return BootstrapMode::wild_sign;
  if (name == "wild_gaussian") return BootstrapMode::wild_gaussian;
  throw InvalidArgument("unknown bootstrap mode '" + name + "'");
}

namespace {

VectorXd perturb(const VectorXd& r, BootstrapMode mode, Rng& rng) {
  const Index m = r.size();
  VectorXd out(m);
  switch (mode) {
    case BootstrapMode::resample: {
      // Centered first: without an intercept column the residuals need not
      // average to zero, and resampling them as-is biases every draw.
      const double mean = r.mean();
      std::uniform_int_distribution<Index> pick(0, m - 1);
      for (Index i = 0; i < m; ++i) out(i) = r(pick(rng)) - mean;
      break;
    }
    case BootstrapMode::wild_sign: {
      std::bernoulli_distribution coin(0.5);
      for (Index i = 0; i < m; ++i) out(i) = coin(rng) ? r(i) : -r(i);
      break;
    }
    case BootstrapMode::wild_gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index i = 0; i < m; ++i) out(i) = r(i) * normal(rng);
      break;
    }
  }
  return out;
}

}  // namespace

BootstrapEnsemble bootstrap(const SparseSolution& model, const MatrixXd& theta, const VectorXd& z,
                            const BootstrapOptions& options) {
  if (model.support.empty()) throw InvalidArgument("bootstrap needs a non-empty support");
  if (options.draws < 1) throw InvalidArgument("bootstrap needs at least one draw");
  if (theta.rows() != z.size() || theta.cols() != model.coefficients.size())
    throw InvalidArgument("bootstrap: library, target and model sizes disagree");

  BootstrapEnsemble ens;
  ens.support = model.support;
  for (int i : model.support)
    ens.labels.push_back(static_cast<std::size_t>(i) < model.labels.size() ? model.labels[static_cast<std::size_t>(i)]
                                                                           : std::to_string(i));
  const auto s = static_cast<Index>(model.support.size());
  ens.point.resize(s);
  for (Index j = 0; j < s; ++j) ens.point(j) = model.coefficients(model.support[static_cast<std::size_t>(j)]);
  ens.requested = options.draws;
  ens.mode = options.mode;
  ens.seed = options.seed;

  const VectorXd fitted = theta * model.coefficients;
  const VectorXd residual = z - fitted;

  // Fixed-support least squares on scaled columns, factorized once.
  MatrixXd ts(theta.rows(), s);
  for (Index j = 0; j < s; ++j) ts.col(j) = theta.col(model.support[static_cast<std::size_t>(j)]);
  const auto [scaled, record] = scale_columns(ts);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(scaled);
  qr.setThreshold(kRankTolerance);
  if (options.reestimate == Reestimate::least_squares && qr.rank() < s)
    throw RankDeficientError("bootstrap: support columns are collinear", model.support);

  std::vector<VectorXd> rows;
  for (int b = 0; b < options.draws; ++b) {
    Rng rng = make_rng(options.seed, "bootstrap", static_cast<std::uint64_t>(b));
    const VectorXd zb = fitted + perturb(residual, options.mode, rng);
    try {
      VectorXd coef(s);
      if (options.reestimate == Reestimate::least_squares) {
        coef = record.unscale(qr.solve(zb));
      } else {
        TrimConfig cfg = options.trim;
        cfg.k = static_cast<int>(s);
        cfg.seed = derive_seed(options.seed, "bootstrap-trim", static_cast<std::uint64_t>(b));
        const SparseSolution sol = trim_solve(RegressionProblem(theta, zb, model.labels), cfg);
        if (sol.support != model.support) throw NumericalError("re-estimated support differs");
        for (Index j = 0; j < s; ++j) coef(j) = sol.coefficients(model.support[static_cast<std::size_t>(j)]);
      }
      if (!coef.allFinite()) throw NumericalError("non-finite draw");
      rows.push_back(coef);
      ens.draw_index.push_back(b);
    } catch (const Error&) {
      ++ens.failed;
    }
  }
  ens.draws.resize(static_cast<Index>(rows.size()), s);
  for (std::size_t i = 0; i < rows.size(); ++i) ens.draws.row(static_cast<Index>(i)) = rows[i].transpose();
  return ens;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw InvalidArgument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

MatrixXd confidence_intervals(const BootstrapEnsemble& ens, const std::vector<double>& percentiles) {
  if (ens.draws.rows() == 0) throw NumericalError("ensemble has no accepted draws");
  MatrixXd out(static_cast<Index>(percentiles.size()), ens.draws.cols());
  for (Index j = 0; j < ens.draws.cols(); ++j) {
    std::vector<double> col(ens.draws.col(j).data(), ens.draws.col(j).data() + ens.draws.rows());
    for (std::size_t q = 0; q < percentiles.size(); ++q) {
      if (!(percentiles[q] > 0.0 && percentiles[q] < 100.0)) throw InvalidArgument("percentiles must lie in (0, 100)");
      out(static_cast<Index>(q), j) = quantile(col, percentiles[q]);
    }
  }
  return out;
}

VectorXd percentile_coefficients(const BootstrapEnsemble& ens, Index columns, double percentile) {
  const MatrixXd q = confidence_intervals(ens, {percentile});
  VectorXd out = VectorXd::Zero(columns);
  for (std::size_t j = 0; j < ens.support.size(); ++j) {
    if (ens.support[j] >= columns) throw InvalidArgument("support exceeds column count");
    out(ens.support[j]) = q(0, static_cast<Index>(j));
  }
  return out;
}

void write_ensemble_csv(std::ostream& os, const BootstrapEnsemble& ens) {
  os << "draw";
  for (const auto& l : ens.labels) os << ',' << l;
  os << '\n';
  for (Index i = 0; i < ens.draws.rows(); ++i) {
    os << ens.draw_index[static_cast<std::size_t>(i)];
    for (Index j = 0; j < ens.draws.cols(); ++j) os << ',' << format_double(ens.draws(i, j));
    os << '\n';
  }
}

void write_quantile_csv(std::ostream& os, const BootstrapEnsemble& ens, const std::vector<double>& percentiles) {
  const MatrixXd q = confidence_intervals(ens, percentiles);
  os << "label,point";
  for (double p : percentiles) os << ",p" << format_double(p);
  os << '\n';
  for (std::size_t j = 0; j < ens.labels.size(); ++j) {
    os << ens.labels[j] << ',' << format_double(ens.point(static_cast<Index>(j)));
    for (Index r = 0; r < q.rows(); ++r) os << ',' << format_double(q(r, static_cast<Index>(j)));
    os << '\n';
  }
}

}  // namespace sparsedyn
