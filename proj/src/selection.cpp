#include "sparsedyn/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/timeseries.hpp"

namespace sparsedyn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MethodName {
  SelectionMethod method;
  const char* name;
};

constexpr MethodName kMethods[] = {
    {SelectionMethod::aic, "aic"},       {SelectionMethod::aicc, "aicc"},   {SelectionMethod::bic, "bic"},
    {SelectionMethod::hqc, "hqc"},       {SelectionMethod::ric, "ric"},     {SelectionMethod::ricc, "ricc"},
    {SelectionMethod::lcurve, "lcurve"}, {SelectionMethod::trim_lcurve, "trim_lcurve"},
    {SelectionMethod::gcv, "gcv"},
};

}  // namespace

std::string to_string(SelectionMethod m) {
  for (const auto& e : kMethods)
    if (e.method == m) return e.name;
  return "unknown";
}

SelectionMethod parse_selection(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& e : kMethods)
    if (lower == e.name) return e.method;
  throw InvalidArgument("unknown selection method '" + name + "'");
}

bool is_information_criterion(SelectionMethod m) {
  return m != SelectionMethod::lcurve && m != SelectionMethod::trim_lcurve && m != SelectionMethod::gcv;
}

Criterion criterion_of(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::aic: return Criterion::aic;
    case SelectionMethod::aicc: return Criterion::aicc;
    case SelectionMethod::bic: return Criterion::bic;
    case SelectionMethod::hqc: return Criterion::hqc;
    case SelectionMethod::ric: return Criterion::ric;
    case SelectionMethod::ricc: return Criterion::ricc;
    default: throw InvalidArgument(to_string(m) + " is not an information criterion");
  }
}

double penalty_factor(Criterion kind, Index card, Index m, Index p, double hqc_c) {
  const auto M = static_cast<double>(m);
  const auto P = static_cast<double>(p);
  switch (kind) {
    case Criterion::aic: return 2.0;
    case Criterion::aicc:
      if (card >= m - 1) throw InvalidArgument("AICc is undefined for card >= M - 1");
      return 2.0 + 2.0 * (static_cast<double>(card) + 1.0) / (M - static_cast<double>(card) - 1.0);
    case Criterion::bic: return std::log(M);
    case Criterion::hqc: return hqc_c * std::log(std::log(M));
    case Criterion::ric: return 2.0 * std::log(P);
    case Criterion::ricc: return 2.0 * (std::log(P) + std::log(std::log(P)));
  }
  return 0.0;
}

double info_criterion(double rss, Index card, Index m, Index p, double sigma2, Criterion kind, double hqc_c) {
  if (rss < 0.0 || sigma2 < 0.0 || card < 0) throw InvalidArgument("info_criterion: negative input");
  return rss + penalty_factor(kind, card, m, p, hqc_c) * sigma2 * static_cast<double>(card);
}

double ls_noise_variance(const RegressionProblem& problem) {
  if (problem.rows() <= problem.cols()) throw InvalidArgument("noise variance needs M > P");
  return problem.ls().solve_all().rss / static_cast<double>(problem.rows() - problem.cols());
}

// ------------------------------------------------------------- L-curve

CornerAnalysis lcurve_analysis(const std::vector<std::pair<double, double>>& points, int resample) {
  const std::size_t n = points.size();
  if (n < 3) throw InvalidArgument("lcurve_corner needs at least 3 points");
  if (resample < 10) throw InvalidArgument("lcurve_corner: resample count too small");
  for (const auto& [x, y] : points)
    if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidArgument("lcurve_corner: non-finite point");

  double xmin = points[0].first, xmax = xmin, ymin = points[0].second, ymax = ymin;
  for (const auto& [x, y] : points) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (xmax - xmin <= 0.0 || ymax - ymin <= 0.0) throw NoCornerError("L-curve is degenerate (flat axis)");

  // Normalized polyline traversed with the abscissa increasing.
  const bool reversed = points.back().first < points.front().first;
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pt = points[reversed ? n - 1 - i : i];
    px[i] = (pt.first - xmin) / (xmax - xmin);
    py[i] = (pt.second - ymin) / (ymax - ymin);
  }
  std::vector<double> arc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) arc[i] = arc[i - 1] + std::hypot(px[i] - px[i - 1], py[i] - py[i - 1]);
  const double total = arc.back();
  if (!(total > 0.0)) throw NoCornerError("L-curve has zero length");

  const auto m = static_cast<std::size_t>(resample);
  std::vector<double> sx(m), sy(m), ss(m);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(m - 1);
    while (seg + 2 < n && arc[seg + 1] < s) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double u = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
    sx[j] = px[seg] + u * (px[seg + 1] - px[seg]);
    sy[j] = py[seg] + u * (py[seg + 1] - py[seg]);
    ss[j] = s;
  }

  std::vector<double> kappa(m, 0.0);
  double kmax = 0.0;
  std::size_t jmax = 0;
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const double ax = sx[j] - sx[j - 1], ay = sy[j] - sy[j - 1];
    const double bx = sx[j + 1] - sx[j], by = sy[j + 1] - sy[j];
    const double cx = sx[j + 1] - sx[j - 1], cy = sy[j + 1] - sy[j - 1];
    const double denom = std::hypot(ax, ay) * std::hypot(bx, by) * std::hypot(cx, cy);
    if (denom <= 0.0) continue;
    kappa[j] = 2.0 * (ax * by - ay * bx) / denom;  // 1/R of the circumscribed circle, signed
    if (kappa[j] > kmax) {
      kmax = kappa[j];
      jmax = j;
    }
  }
  const double spacing = total / static_cast<double>(m - 1);
  if (kmax * spacing < 1e-8) throw NoCornerError("L-curve has no convex bend");

  auto nearest_vertex = [&](double s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(arc[i] - s) < std::abs(arc[best] - s)) best = i;
    return best;
  };
  CornerAnalysis out;
  out.curvature.assign(n, 0.0);
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const std::size_t v = nearest_vertex(ss[j]);
    out.curvature[v] = std::max(out.curvature[v], kappa[j]);
  }
  const std::size_t v = nearest_vertex(ss[jmax]);
  out.corner = static_cast<Index>(reversed ? n - 1 - v : v);
  if (reversed) std::reverse(out.curvature.begin(), out.curvature.end());
  return out;
}

Index lcurve_corner(const std::vector<std::pair<double, double>>& points, int resample) {
  return lcurve_analysis(points, resample).corner;
}

std::vector<double> gcv_scores(const std::vector<double>& residual_norms, const std::vector<double>& dof, Index m) {
  if (residual_norms.size() != dof.size()) throw InvalidArgument("gcv: residual and dof lengths differ");
  const auto M = static_cast<double>(m);
  std::vector<double> scores;
  for (std::size_t i = 0; i < dof.size(); ++i) {
    if (!(dof[i] < M)) throw InvalidArgument("gcv: effective dof must be below M");
    const double d = 1.0 - dof[i] / M;
    scores.push_back(residual_norms[i] * residual_norms[i] / (M * d * d));
  }
  return scores;
}

Index gcv(const std::vector<double>& residual_norms, const std::vector<double>& dof, Index m) {
  const auto s = gcv_scores(residual_norms, dof, m);
  if (s.empty()) throw InvalidArgument("gcv: empty path");
  return static_cast<Index>(std::min_element(s.begin(), s.end()) - s.begin());
}

TrimSelection trim_select_index(const std::vector<double>& residuals, const std::vector<int>& k_grid,
                                double tol_percent) {
  if (residuals.size() != k_grid.size()) throw InvalidArgument("trim_select: residual and k lengths differ");
  if (residuals.empty()) throw InvalidArgument("trim_select: empty path");
  for (std::size_t i = 1; i < k_grid.size(); ++i)
    if (k_grid[i] <= k_grid[i - 1]) throw InvalidArgument("trim_select: k grid must increase strictly");
  double rmax = 0.0;
  for (double r : residuals) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("trim_select: residuals must be finite");
    rmax = std::max(rmax, r);
  }
  if (!(rmax > 0.0)) return {0, 0};
  const double floor = 1e-9 * rmax;
  std::vector<double> r(residuals.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::max(residuals[i], floor);

  TrimSelection sel;
  if (r.size() >= 3) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < r.size(); ++i) pts.emplace_back(std::log10(r[i]), static_cast<double>(k_grid[i]));
    sel.corner = lcurve_corner(pts);
  }
  std::size_t i = static_cast<std::size_t>(sel.corner);
  const double limit = 1.0 + tol_percent / 100.0;
  while (i + 1 < r.size() && (r[i] / r[i + 1]) * (r[i] / r[i + 1]) > limit) ++i;
  sel.chosen = static_cast<Index>(i);
  return sel;
}

int trim_select(const std::vector<double>& residuals, const std::vector<int>& k_grid, double tol_percent) {
  return k_grid[static_cast<std::size_t>(trim_select_index(residuals, k_grid, tol_percent).chosen)];
}

Index select_tikhonov(const TikhonovPath& path, SelectionMethod method) {
  if (method == SelectionMethod::gcv) {
    if (path.dof.size() != path.residual.size()) throw InvalidArgument("GCV needs the dof traces of the sweep");
    const Index m = path.fitted.empty() ? 0 : path.fitted.front().size();
    return gcv(path.residual, path.dof, m);
  }
  if (method != SelectionMethod::lcurve) throw InvalidArgument("Tikhonov paths support lcurve or gcv only");
  std::vector<std::pair<double, double>> pts;
  std::vector<Index> map;
  for (std::size_t i = 0; i < path.residual.size(); ++i) {
    if (path.residual[i] > 0.0 && path.penalty[i] > 0.0) {
      pts.emplace_back(std::log10(path.residual[i] * path.residual[i]), std::log10(path.penalty[i] * path.penalty[i]));
      map.push_back(static_cast<Index>(i));
    }
  }
  return map[static_cast<std::size_t>(lcurve_corner(pts))];
}

double select_derivative_lambda(const VectorXd& z, int order, double dt, const DerivativeOptions& options,
                                Index start) {
  const Index w = std::min<Index>(std::max<Index>(options.window, 40), z.size() - start);
  const double scale = derivative_lambda_scale(w, order, dt, options);
  std::vector<double> grid = logspace(1e-12 * scale, 1e8 * scale, 81);
  const DerivativePath path = derivative_sweep(z, order, dt, grid, options, start);
  std::vector<std::pair<double, double>> pts;
  std::vector<double> lam;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (path.residual[i] > 0.0 && path.penalty[i] > 0.0) {
      pts.emplace_back(std::log10(path.residual[i] * path.residual[i]), std::log10(path.penalty[i] * path.penalty[i]));
      lam.push_back(grid[i]);
    }
  }
  if (pts.size() < 3) throw NoCornerError("derivative L-curve is degenerate");
  return lam[static_cast<std::size_t>(lcurve_corner(pts))];
}

// --------------------------------------------------------------- sweeps

const SparseSolution& SelectionPath::best() const {
  if (chosen < 0) throw NumericalError("selection path has no chosen model");
  return solutions[static_cast<std::size_t>(chosen)];
}

SweepContext context_for(const RegressionProblem& problem) {
  SweepContext ctx;
  ctx.samples = problem.rows();
  ctx.columns = problem.cols();
  ctx.sigma2 = problem.rows() > problem.cols() ? ls_noise_variance(problem) : 0.0;
  return ctx;
}

SelectionPath sweep(const Estimator& estimator, const std::vector<double>& grid, SelectionMethod method,
                    const SweepContext& context) {
  if (grid.empty()) throw InvalidArgument("sweep: empty grid");
  if (method == SelectionMethod::gcv) throw InvalidArgument("GCV applies to linear smoothers, not sparse estimators");
  SelectionPath path;
  path.method = method;
  path.grid = grid;
  for (double g : grid) {
    try {
      path.solutions.push_back(estimator(g));
      path.valid.push_back(true);
      path.errors.emplace_back();
    } catch (const Error& e) {
      path.solutions.emplace_back();
      path.valid.push_back(false);
      path.errors.emplace_back(e.what());
    }
  }
  const std::size_t n = grid.size();
  path.abscissa.assign(n, kNaN);
  path.ordinate.assign(n, kNaN);
  path.scores.assign(n, kNaN);

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n; ++i)
    if (path.valid[i]) ok.push_back(i);
  if (ok.empty()) throw NumericalError("sweep: every grid point failed (" + path.errors.front() + ")");

  if (is_information_criterion(method)) {
    const Criterion kind = criterion_of(method);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : ok) {
      const auto& s = path.solutions[i];
      const double rss = s.residual_norm * s.residual_norm;
      path.abscissa[i] = rss;
      path.ordinate[i] = static_cast<double>(s.card());
      try {
        path.scores[i] = info_criterion(rss, s.card(), context.samples, context.columns, context.sigma2, kind,
                                        context.hqc_c);
      } catch (const InvalidArgument& e) {
        path.valid[i] = false;
        path.errors[i] = e.what();
        continue;
      }
      if (path.scores[i] < best) {
        best = path.scores[i];
        path.chosen = static_cast<Index>(i);
      }
    }
    if (path.chosen < 0) throw NumericalError("sweep: no grid point admits the criterion");
    return path;
  }

  if (method == SelectionMethod::trim_lcurve) {
    std::vector<double> res;
    std::vector<int> ks;
    for (std::size_t i : ok) {
      res.push_back(path.solutions[i].residual_norm);
      ks.push_back(static_cast<int>(std::lround(grid[i])));
      path.abscissa[i] = std::log10(std::max(path.solutions[i].residual_norm, 1e-300));
      path.ordinate[i] = grid[i];
    }
    if (ok.size() == 1) {
      path.chosen = path.corner = static_cast<Index>(ok.front());
      return path;
    }
    const TrimSelection sel = trim_select_index(res, ks, context.tol_percent);
    path.corner = static_cast<Index>(ok[static_cast<std::size_t>(sel.corner)]);
    path.chosen = static_cast<Index>(ok[static_cast<std::size_t>(sel.chosen)]);
    for (std::size_t j = 0; j < ok.size(); ++j) path.scores[ok[j]] = res[j];
    return path;
  }

  // Classical L-curve: log squared residual against log l1 size.
  std::vector<std::pair<double, double>> pts;
  std::vector<std::size_t> map;
  for (std::size_t i : ok) {
    const auto& s = path.solutions[i];
    const double pen = s.scaled_l1;
    if (!(s.residual_norm > 0.0) || !(pen > 0.0)) continue;
    path.abscissa[i] = std::log10(s.residual_norm * s.residual_norm);
    path.ordinate[i] = std::log10(pen);
    pts.emplace_back(path.abscissa[i], path.ordinate[i]);
    map.push_back(i);
  }
  if (map.size() == 1 || (map.size() < 3 && !map.empty())) {
    path.chosen = static_cast<Index>(map.front());
    return path;
  }
  if (map.empty()) {
    path.chosen = static_cast<Index>(ok.front());
    return path;
  }
  const CornerAnalysis ca = lcurve_analysis(pts);
  for (std::size_t j = 0; j < map.size(); ++j) path.scores[map[j]] = ca.curvature[j];
  path.chosen = path.corner = static_cast<Index>(map[static_cast<std::size_t>(ca.corner)]);
  return path;
}

void write_path_csv(std::ostream& os, const SelectionPath& path) {
  os << "grid,residual,abscissa,ordinate,score,card,valid,chosen\n";
  for (std::size_t i = 0; i < path.grid.size(); ++i) {
    const auto& s = path.solutions[i];
    os << format_double(path.grid[i]) << ',' << (path.valid[i] ? format_double(s.residual_norm) : "nan") << ','
       << format_double(path.abscissa[i]) << ',' << format_double(path.ordinate[i]) << ','
       << format_double(path.scores[i]) << ',' << (path.valid[i] ? s.card() : 0) << ',' << (path.valid[i] ? 1 : 0)
       << ',' << (static_cast<Index>(i) == path.chosen ? 1 : 0) << '\n';
  }
}

}  // namespace sparsedyn
