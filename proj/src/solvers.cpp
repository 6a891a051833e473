#include "sparsedyn/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/rng.hpp"

namespace sparsedyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> default_labels(Index p) {
  std::vector<std::string> out;
  for (Index i = 0; i < p; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

double soft(double z, double w) {
  if (z > w) return z - w;
  if (z < -w) return z + w;
  return 0.0;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

bool SparseSolution::flagged(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

// ------------------------------------------------------- RegressionProblem

RegressionProblem::RegressionProblem(const MatrixXd& theta, const VectorXd& y, std::vector<std::string> labels,
                                     std::vector<int> unpenalized)
    : design_(scale_columns(theta, labels).first),
      y_(y),
      scaling_(scale_columns(theta, labels).second),
      labels_(labels.empty() ? default_labels(theta.cols()) : std::move(labels)),
      unpenalized_(std::move(unpenalized)),
      penalized_mask_(static_cast<std::size_t>(theta.cols()), true),
      ls_(design_, y),
      gram_(ls_.gram()),
      corr_(ls_.correlation()) {
  if (theta.rows() != y.size()) throw InvalidArgument("library rows and target length differ");
  if (static_cast<Index>(labels_.size()) != theta.cols()) throw InvalidArgument("label count differs from columns");
  if (!y.allFinite() || !theta.allFinite()) throw InvalidArgument("non-finite values in library or target");
  std::sort(unpenalized_.begin(), unpenalized_.end());
  unpenalized_.erase(std::unique(unpenalized_.begin(), unpenalized_.end()), unpenalized_.end());
  for (int i : unpenalized_) {
    if (i < 0 || i >= theta.cols()) throw InvalidArgument("unpenalized column out of range");
    penalized_mask_[static_cast<std::size_t>(i)] = false;
  }
}

Index RegressionProblem::penalized_count() const {
  return cols() - static_cast<Index>(unpenalized_.size());
}

double RegressionProblem::free_target_norm() const {
  if (unpenalized_.empty()) return y_.norm();
  return std::sqrt(ls_.solve(unpenalized_).rss);
}

double RegressionProblem::penalized_l1(const VectorXd& scaled) const {
  double s = 0.0;
  for (Index i = 0; i < cols(); ++i)
    if (penalized(i)) s += std::abs(scaled(i));
  return s;
}

SparseSolution RegressionProblem::from_scaled(const VectorXd& scaled, std::map<std::string, double> hyperparams,
                                              std::vector<std::string> flags) const {
  SparseSolution sol;
  sol.coefficients = scaling_.unscale(scaled);
  sol.support = support_of(scaled);
  sol.residual_norm = std::sqrt(std::max(0.0, ls_.rss(scaled)));
  sol.scaled_l1 = penalized_l1(scaled);
  sol.hyperparams = std::move(hyperparams);
  sol.labels = labels_;
  sol.flags = std::move(flags);
  return sol;
}

VectorXd RegressionProblem::refit_scaled(const Support& support) const {
  std::set<int> s(support.begin(), support.end());
  s.insert(unpenalized_.begin(), unpenalized_.end());
  const Support full(s.begin(), s.end());
  try {
    return ls_.solve(full).coefficients;
  } catch (const RankDeficientError& e) {
    std::string names;
    for (int c : e.columns()) names += (names.empty() ? "" : ", ") + labels_[static_cast<std::size_t>(c)];
    throw RankDeficientError("collinear library columns: " + names, e.columns());
  }
}

SparseSolution RegressionProblem::refit(const Support& support, std::map<std::string, double> hyperparams,
                                        std::vector<std::string> flags) const {
  return from_scaled(refit_scaled(support), std::move(hyperparams), std::move(flags));
}

// ------------------------------------------------------------------ lasso

namespace {

double kkt_gap(const VectorXd& g, const VectorXd& b, const VectorXd& w, const VectorXd& x) {
  double gap = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (std::isinf(w(i))) continue;
    const double grad = g(i) - b(i);
    const double v = x(i) != 0.0 ? std::abs(grad + w(i) * sign(x(i))) : std::max(0.0, std::abs(grad) - w(i));
    gap = std::max(gap, v);
  }
  return gap;
}

// Solves the stationarity equations on the current active set with fixed
// signs. Accepted only if signs are kept and the result satisfies KKT.
bool active_set_step(const MatrixXd& gram, const VectorXd& b, const VectorXd& w, VectorXd& x, double tol) {
  std::vector<Index> s;
  for (Index i = 0; i < x.size(); ++i)
    if (!std::isinf(w(i)) && (x(i) != 0.0 || w(i) == 0.0)) s.push_back(i);
  if (s.empty()) return false;
  const auto n = static_cast<Index>(s.size());
  MatrixXd gs(n, n);
  VectorXd rhs(n);
  for (Index a = 0; a < n; ++a) {
    for (Index c = 0; c < n; ++c) gs(a, c) = gram(s[a], s[c]);
    rhs(a) = b(s[a]) - w(s[a]) * sign(x(s[a]));
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(gs);
  if (qr.rank() < n) return false;
  const VectorXd ys = qr.solve(rhs);
  if (!ys.allFinite()) return false;
  VectorXd cand = VectorXd::Zero(x.size());
  for (Index a = 0; a < n; ++a) {
    const Index i = s[a];
    if (w(i) > 0.0 && sign(ys(a)) != sign(x(i))) return false;
    cand(i) = ys(a);
  }
  if (kkt_gap(gram * cand, b, w, cand) > tol) return false;
  x = cand;
  return true;
}

}  // namespace

LassoResult lasso_gram(const MatrixXd& gram, const VectorXd& c, const VectorXd& weights, const VectorXd& gamma,
                       const VectorXd& start, const LassoOptions& options) {
  const Index p = c.size();
  if (gram.rows() != p || gram.cols() != p || weights.size() != p || gamma.size() != p || start.size() != p)
    throw InvalidArgument("lasso: dimension mismatch");
  for (Index i = 0; i < p; ++i) {
    if (weights(i) < 0.0 || std::isnan(weights(i))) throw InvalidArgument("lasso: negative weight");
    if (!(gram(i, i) > 0.0)) throw InvalidArgument("lasso: zero column");
  }
  const VectorXd b = c + gamma;
  const double tol = options.tol * std::max(1.0, b.lpNorm<Eigen::Infinity>());

  LassoResult res;
  res.x = start;
  for (Index i = 0; i < p; ++i)
    if (std::isinf(weights(i))) res.x(i) = 0.0;
  VectorXd g = gram * res.x;

  VectorXd best = res.x;
  double best_gap = kkt_gap(g, b, weights, res.x);
  if (best_gap <= tol) {
    res.kkt_gap = best_gap;
    res.converged = true;
    return res;
  }
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    res.sweeps = sweep;
    for (Index i = 0; i < p; ++i) {
      if (std::isinf(weights(i))) continue;
      const double old = res.x(i);
      const double z = b(i) - (g(i) - gram(i, i) * old);
      const double nx = soft(z, weights(i)) / gram(i, i);
      if (nx != old) {
        g.noalias() += gram.col(i) * (nx - old);
        res.x(i) = nx;
      }
    }
    if (sweep % 5 != 0 && sweep > 3) continue;
    g = gram * res.x;  // refresh against drift
    double gap = kkt_gap(g, b, weights, res.x);
    if (gap < best_gap) {
      best_gap = gap;
      best = res.x;
    }
    if (gap <= tol) break;
    VectorXd trial = res.x;
    if (active_set_step(gram, b, weights, trial, tol)) {
      res.x = trial;
      g = gram * res.x;
      best_gap = kkt_gap(g, b, weights, res.x);
      best = res.x;
      break;
    }
  }
  res.x = best;
  res.kkt_gap = best_gap;
  res.converged = best_gap <= tol;
  return res;
}

namespace {

SparseSolution lasso_on(const MatrixXd& gram, const VectorXd& corr, const VectorXd& penalty_mask, double lambda,
                        double eta, const std::optional<VectorXd>& linear_term, const LassoOptions& options,
                        VectorXd& scaled_out) {
  if (!(lambda > 0.0)) throw InvalidArgument("lasso: lambda must be positive");
  if (!(eta >= 0.0)) throw InvalidArgument("lasso: eta must be non-negative");
  const Index p = corr.size();
  const VectorXd gamma = linear_term.value_or(VectorXd::Zero(p));
  if (gamma.size() != p) throw InvalidArgument("lasso: linear term has the wrong length");
  const VectorXd w = penalty_mask * (lambda + eta);
  LassoResult r = lasso_gram(gram, corr, w, gamma, VectorXd::Zero(p), options);
  if (!r.converged)
    throw ConvergenceError("lasso did not converge (KKT gap " + std::to_string(r.kkt_gap) + ")", r.x, r.kkt_gap);
  scaled_out = r.x;
  return {};
}

}  // namespace

SparseSolution lasso(const MatrixXd& theta, const VectorXd& y, double lambda, double eta,
                     const std::optional<VectorXd>& linear_term, const LassoOptions& options) {
  if (theta.rows() != y.size()) throw InvalidArgument("lasso: row mismatch");
  const MatrixXd gram = theta.transpose() * theta;
  const VectorXd corr = theta.transpose() * y;
  VectorXd x;
  lasso_on(gram, corr, VectorXd::Ones(corr.size()), lambda, eta, linear_term, options, x);
  SparseSolution sol;
  sol.coefficients = x;
  sol.support = support_of(x);
  sol.residual_norm = (theta * x - y).norm();
  sol.hyperparams = {{"lambda", lambda}, {"eta", eta}};
  sol.labels = default_labels(x.size());
  return sol;
}

namespace {

VectorXd penalty_mask(const RegressionProblem& problem) {
  VectorXd m(problem.cols());
  for (Index i = 0; i < problem.cols(); ++i) m(i) = problem.penalized(i) ? 1.0 : 0.0;
  return m;
}

}  // namespace

SparseSolution lasso(const RegressionProblem& problem, double lambda, double eta,
                     const std::optional<VectorXd>& linear_term, const LassoOptions& options) {
  VectorXd x;
  lasso_on(problem.gram(), problem.correlation(), penalty_mask(problem), lambda, eta, linear_term, options, x);
  return problem.from_scaled(x, {{"lambda", lambda}, {"eta", eta}});
}

// ------------------------------------------------------------------- STLS

namespace {

// STLS on a factorized problem; returns scaled coefficients.
VectorXd stls_core(const LeastSquaresProblem& lsp, const RegressionProblem& problem, double phi, int max_iters) {
  const Index p = problem.cols();
  Support all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), 0);
  VectorXd x = lsp.solve(all).coefficients;
  Support prev = all;
  for (int it = 0; it < max_iters; ++it) {
    // Thresholds apply to the coefficients of the unit-norm columns.
    Support s;
    for (Index i = 0; i < p; ++i)
      if (!problem.penalized(i) || std::abs(x(i)) >= phi) s.push_back(static_cast<int>(i));
    if (s == prev) break;
    prev = s;
    x = lsp.solve(s).coefficients;
  }
  return x;
}

}  // namespace

SparseSolution stls(const RegressionProblem& problem, double phi, int max_iters) {
  if (!(phi > 0.0)) throw InvalidArgument("stls: threshold must be positive");
  try {
    return problem.from_scaled(stls_core(problem.ls(), problem, phi, max_iters), {{"phi", phi}});
  } catch (const RankDeficientError& e) {
    std::string names;
    for (int c : e.columns()) names += (names.empty() ? "" : ", ") + problem.labels()[static_cast<std::size_t>(c)];
    throw RankDeficientError("stls: collinear library columns: " + names, e.columns());
  }
}

std::vector<SparseSolution> stls(const MatrixXd& theta, const std::vector<VectorXd>& targets, double phi,
                                 const std::vector<std::string>& labels, int max_iters) {
  std::vector<SparseSolution> out;
  for (const auto& y : targets) out.push_back(stls(RegressionProblem(theta, y, labels), phi, max_iters));
  return out;
}

EnsembleStls::EnsembleStls(const RegressionProblem& problem, const EnsembleConfig& config)
    : problem_(problem), config_(config) {
  if (config.bootstraps < 2) throw InvalidArgument("ensemble_stls needs at least 2 bootstraps");
  if (!(config.inclusion > 0.0 && config.inclusion <= 1.0)) throw InvalidArgument("inclusion must lie in (0, 1]");
  const Index m = problem.rows();
  boots_.reserve(static_cast<std::size_t>(config.bootstraps));
  for (int b = 0; b < config.bootstraps; ++b) {
    Rng rng = make_rng(config.seed, "esindy", static_cast<std::uint64_t>(b));
    std::uniform_int_distribution<Index> pick(0, m - 1);
    MatrixXd a(m, problem.cols());
    VectorXd y(m);
    for (Index r = 0; r < m; ++r) {
      const Index src = pick(rng);
      a.row(r) = problem.design().row(src);
      y(r) = problem.target()(src);
    }
    boots_.emplace_back(a, y);
  }
}

SparseSolution EnsembleStls::solve(double phi) const {
  if (!(phi > 0.0)) throw InvalidArgument("ensemble_stls: threshold must be positive");
  const Index p = problem_.cols();
  std::vector<VectorXd> draws;
  int failed = 0;
  for (const auto& boot : boots_) {
    try {
      draws.push_back(problem_.scaling().unscale(stls_core(boot, problem_, phi, config_.max_iters)));
    } catch (const RankDeficientError&) {
      ++failed;
    }
  }
  if (draws.empty()) throw NumericalError("ensemble_stls: every bootstrap was rank deficient");
  Support keep;
  VectorXd median = VectorXd::Zero(p);
  std::vector<double> col(draws.size());
  for (Index i = 0; i < p; ++i) {
    int nonzero = 0;
    for (std::size_t b = 0; b < draws.size(); ++b) {
      col[b] = draws[b](i);
      nonzero += draws[b](i) != 0.0;
    }
    const double freq = static_cast<double>(nonzero) / static_cast<double>(draws.size());
    if (!problem_.penalized(i) || freq >= config_.inclusion - 1e-12) {
      keep.push_back(static_cast<int>(i));
      std::sort(col.begin(), col.end());
      const std::size_t n = col.size();
      median(i) = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    }
  }
  std::vector<std::string> flags;
  if (failed > 0) flags.push_back("failed_bootstraps=" + std::to_string(failed));
  return problem_.refit(keep, {{"phi", phi}, {"bootstraps", static_cast<double>(config_.bootstraps)}}, flags);
}

SparseSolution ensemble_stls(const RegressionProblem& problem, double phi, const EnsembleConfig& config) {
  return EnsembleStls(problem, config).solve(phi);
}

// ------------------------------------------------------------------- IRL1

SparseSolution irl1(const RegressionProblem& problem, double lambda, double q, int reweight_iters,
                    const LassoOptions& options) {
  if (!(lambda > 0.0)) throw InvalidArgument("irl1: lambda must be positive");
  if (!(q > 0.0)) throw InvalidArgument("irl1: exponent must be positive");
  if (reweight_iters < 0) throw InvalidArgument("irl1: negative reweight count");
  constexpr double eps_w = 1e-6;
  const Index p = problem.cols();
  const VectorXd zero = VectorXd::Zero(p);
  VectorXd w = penalty_mask(problem) * lambda;
  LassoResult r = lasso_gram(problem.gram(), problem.correlation(), w, zero, zero, options);
  if (!r.converged) throw ConvergenceError("irl1: initial lasso did not converge", r.x, r.kkt_gap);
  for (int it = 0; it < reweight_iters; ++it) {
    for (Index i = 0; i < p; ++i) {
      if (!problem.penalized(i)) continue;
      w(i) = r.x(i) == 0.0 ? kInf : lambda / std::pow(std::abs(r.x(i)) + eps_w, q);
    }
    r = lasso_gram(problem.gram(), problem.correlation(), w, zero, r.x, options);
    if (!r.converged) throw ConvergenceError("irl1: reweighted lasso did not converge", r.x, r.kkt_gap);
  }
  return problem.refit(support_of(r.x), {{"lambda", lambda}, {"q", q}});
}

// ---------------------------------------------------------- trimmed lasso

namespace {

std::vector<Index> magnitude_order(const VectorXd& xi) {
  std::vector<Index> idx(static_cast<std::size_t>(xi.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(xi(a)) > std::abs(xi(b)); });
  return idx;
}

void check_k(Index p, int k) {
  if (k < 0 || k > p) throw InvalidArgument("sparsity k must lie in [0, P]");
}

}  // namespace

double trimmed_lasso_penalty(const VectorXd& xi, int k) {
  check_k(xi.size(), k);
  const auto order = magnitude_order(xi);
  double s = 0.0;
  for (std::size_t r = static_cast<std::size_t>(k); r < order.size(); ++r) s += std::abs(xi(order[r]));
  return s;
}

VectorXd trim_gradient(const VectorXd& xi, int k, double lambda) {
  check_k(xi.size(), k);
  VectorXd g = VectorXd::Zero(xi.size());
  const auto order = magnitude_order(xi);
  for (int r = 0; r < k; ++r) g(order[static_cast<std::size_t>(r)]) = lambda * sign(xi(order[static_cast<std::size_t>(r)]));
  return g;
}

namespace {

// Gathers / scatters between the full vector and its penalized entries.
struct PenalizedView {
  std::vector<Index> idx;
  explicit PenalizedView(const RegressionProblem& p) {
    for (Index i = 0; i < p.cols(); ++i)
      if (p.penalized(i)) idx.push_back(i);
  }
  VectorXd gather(const VectorXd& x) const {
    VectorXd out(static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Index>(j)) = x(idx[j]);
    return out;
  }
  VectorXd scatter(const VectorXd& sub, Index p) const {
    VectorXd out = VectorXd::Zero(p);
    for (std::size_t j = 0; j < idx.size(); ++j) out(idx[j]) = sub(static_cast<Index>(j));
    return out;
  }
};

void check_trim_config(const RegressionProblem& problem, const TrimConfig& config) {
  if (config.k < 0 || config.k > problem.penalized_count()) throw InvalidArgument("trim: k must lie in [0, P]");
  if (config.nu < 5) throw InvalidArgument("trim: nu must be at least 5");
  if (!(config.eta > 0.0)) throw InvalidArgument("trim: eta must be positive");
  if (!(config.tol > 0.0)) throw InvalidArgument("trim: tol must be positive");
  if (config.restarts < 0 || config.max_alternations < 1) throw InvalidArgument("trim: bad iteration limits");
}

}  // namespace

double trim_objective(const RegressionProblem& problem, const VectorXd& scaled, int k, double lambda, double eta) {
  const VectorXd pen = PenalizedView(problem).gather(scaled);
  return problem.half_rss(scaled) + eta * pen.lpNorm<1>() + lambda * trimmed_lasso_penalty(pen, k);
}

TrimIterate trim_alternation(const RegressionProblem& problem, int k, double lambda, const TrimConfig& config,
                             const std::optional<VectorXd>& warm_start, std::uint64_t stream) {
  check_k(problem.penalized_count(), k);
  if (!(config.eta > 0.0) || !(config.tol > 0.0)) throw InvalidArgument("trim: eta and tol must be positive");
  if (config.restarts < 0 || config.max_alternations < 1) throw InvalidArgument("trim: bad iteration limits");
  const Index p = problem.cols();
  const PenalizedView view(problem);
  const VectorXd w = penalty_mask(problem) * (lambda + config.eta);

  std::vector<VectorXd> starts;
  if (warm_start) starts.push_back(*warm_start);
  if (config.ls_start) {
    // Full least squares: its k largest entries seed the trimming direction.
    try {
      starts.push_back(problem.ls().solve_all().coefficients);
    } catch (const RankDeficientError&) {
    }
  }
  Rng rng = make_rng(config.seed, "trim-start", stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < config.restarts; ++r) {
    VectorXd s = VectorXd::Zero(p);
    for (Index i : view.idx) s(i) = normal(rng);
    starts.push_back(std::move(s));
  }
  if (starts.empty()) starts.push_back(VectorXd::Zero(p));

  TrimIterate best;
  best.objective = kInf;
  for (const auto& s : starts) {
    TrimIterate cur;
    cur.x = s;
    double prev = trim_objective(problem, cur.x, k, lambda, config.eta);
    for (int it = 1; it <= config.max_alternations; ++it) {
      cur.alternations = it;
      const VectorXd gamma = view.scatter(trim_gradient(view.gather(cur.x), k, lambda), p);
      const LassoResult r = lasso_gram(problem.gram(), problem.correlation(), w, gamma, cur.x);
      cur.inexact = cur.inexact || !r.converged;
      cur.x = r.x;
      cur.objective = trim_objective(problem, cur.x, k, lambda, config.eta);
      const double decrease = prev - cur.objective;
      if (decrease <= config.tol * std::max(std::abs(prev), 1e-300)) break;
      prev = cur.objective;
    }
    if (cur.objective < best.objective) best = cur;
  }
  return best;
}

std::vector<double> trim_lambda_grid(const RegressionProblem& problem, int nu) {
  if (nu < 5) throw InvalidArgument("trim: nu must be at least 5");
  const double s = problem.free_target_norm();
  if (!(s > 0.0)) throw InvalidArgument("trim: target is explained by the unpenalized columns alone");
  return logspace(1e-3 * s, s, nu);
}

SparseSolution trim_solve(const RegressionProblem& problem, const TrimConfig& config) {
  check_trim_config(problem, config);
  const PenalizedView view(problem);
  const int k = config.k;
  std::map<std::string, double> hp{{"k", k}, {"nu", config.nu}, {"eta", config.eta}};

  if (k == problem.penalized_count()) {
    Support all(view.idx.begin(), view.idx.end());
    hp["lambda"] = 0.0;
    return problem.refit(all, hp);
  }

  const auto grid = trim_lambda_grid(problem, config.nu);
  std::optional<VectorXd> warm;
  std::vector<TrimIterate> iterates;
  std::vector<std::pair<Support, double>> candidates;  // support, lambda
  bool inexact = false;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    TrimIterate it = trim_alternation(problem, k, grid[j], config, warm, j);
    warm = it.x;
    inexact = inexact || it.inexact;
    Support s;
    for (Index i : view.idx)
      if (it.x(i) != 0.0) s.push_back(static_cast<int>(i));
    if (static_cast<int>(s.size()) == k &&
        std::none_of(candidates.begin(), candidates.end(), [&](const auto& c) { return c.first == s; }))
      candidates.emplace_back(s, grid[j]);
    iterates.push_back(std::move(it));
  }

  std::vector<std::string> flags;
  if (inexact) flags.push_back("inexact");
  if (candidates.empty()) {
    // Project each iterate onto its k largest penalized magnitudes.
    flags.push_back("projected");
    for (std::size_t j = 0; j < iterates.size(); ++j) {
      const VectorXd pen = view.gather(iterates[j].x);
      const auto order = magnitude_order(pen);
      Support s;
      for (int r = 0; r < k; ++r)
        if (pen(order[static_cast<std::size_t>(r)]) != 0.0) s.push_back(static_cast<int>(view.idx[order[static_cast<std::size_t>(r)]]));
      std::sort(s.begin(), s.end());
      candidates.emplace_back(s, grid[j]);
    }
  }

  double best_rss = kInf;
  VectorXd best_x;
  double best_lambda = 0.0;
  Support best_support;
  for (const auto& [s, lambda] : candidates) {
    VectorXd x;
    try {
      x = problem.refit_scaled(s);
    } catch (const RankDeficientError&) {
      continue;
    }
    const double rss = problem.ls().rss(x);
    if (rss < best_rss) {
      best_rss = rss;
      best_x = x;
      best_lambda = lambda;
      best_support = s;
    }
  }
  if (best_x.size() == 0) throw NumericalError("trim: every candidate support is rank deficient");
  bool swapped = false;
  if (config.swap_polish && k > 0) {
    // Exchange one member for one outsider while the refit rss drops.
    bool improved = true;
    for (int pass = 0; improved && pass < 100; ++pass) {
      improved = false;
      for (std::size_t a = 0; a < best_support.size() && !improved; ++a)
        for (Index i : view.idx) {
          if (std::find(best_support.begin(), best_support.end(), static_cast<int>(i)) != best_support.end()) continue;
          Support trial = best_support;
          trial[a] = static_cast<int>(i);
          std::sort(trial.begin(), trial.end());
          VectorXd x;
          try {
            x = problem.refit_scaled(trial);
          } catch (const RankDeficientError&) {
            continue;
          }
          const double rss = problem.ls().rss(x);
          if (rss < best_rss * (1.0 - 1e-12)) {
            best_rss = rss;
            best_x = x;
            best_support = trial;
            improved = swapped = true;
            break;
          }
        }
    }
  }
  hp["lambda"] = best_lambda;
  if (swapped) flags.push_back("swapped");
  if (!config.debias) {
    const auto pos = std::find(grid.begin(), grid.end(), best_lambda) - grid.begin();
    VectorXd x = iterates[static_cast<std::size_t>(pos)].x;
    if (swapped || std::find(flags.begin(), flags.end(), "projected") != flags.end()) x = best_x;
    return problem.from_scaled(x, hp, flags);
  }
  return problem.from_scaled(best_x, hp, flags);
}

IvpSolution trim_ivp(const MatrixXd& gamma, const VectorXd& z, const TrimConfig& config,
                     const std::vector<std::string>& labels) {
  if (gamma.cols() < 2) throw InvalidArgument("trim_ivp: augmented library needs the ones column and one more");
  if (!(gamma.col(0).array() == 1.0).all()) throw InvalidArgument("trim_ivp: first column must be all ones");
  std::vector<std::string> full = labels;
  if (full.empty()) {
    full.push_back("1");
    for (Index i = 1; i < gamma.cols(); ++i) full.push_back("c" + std::to_string(i - 1));
  }
  IvpSolution out;
  const RegressionProblem problem(gamma, z, full, {0});
  SparseSolution sol = trim_solve(problem, config);
  out.z0 = sol.coefficients(0);
  out.model = sol;
  out.model.coefficients = sol.coefficients.tail(gamma.cols() - 1);
  out.model.labels.assign(full.begin() + 1, full.end());
  out.model.support.clear();
  for (int i : sol.support)
    if (i > 0) out.model.support.push_back(i - 1);
  return out;
}

}  // namespace sparsedyn
