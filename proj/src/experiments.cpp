#include "sparsedyn/experiments.hpp"
#include "sparsedyn/parallel.hpp"

#include <algorithm>
#include <cmath>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/preprocess.hpp"
#include "sparsedyn/rng.hpp"

namespace sparsedyn {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::trim: return "trim";
    case EstimatorKind::stls: return "stls";
    case EstimatorKind::estls: return "estls";
    case EstimatorKind::irl1: return "irl1";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "trim") return EstimatorKind::trim;
  if (name == "stls" || name == "sindy") return EstimatorKind::stls;
  if (name == "estls" || name == "esindy" || name == "e-sindy") return EstimatorKind::estls;
  if (name == "irl1") return EstimatorKind::irl1;
  throw InvalidArgument("unknown estimator '" + name + "'");
}

EstimatorSpec default_estimator(EstimatorKind kind, int max_k) {
  EstimatorSpec spec;
  spec.kind = kind;
  switch (kind) {
    case EstimatorKind::stls:
    case EstimatorKind::estls:
      spec.select = SelectionMethod::ricc;
      spec.grid = logspace(1e-3, 1e3, 100);
      break;
    case EstimatorKind::irl1:
      spec.select = SelectionMethod::ricc;
      spec.grid = logspace(1e-10, 1e6, 75);
      for (int i = 0; i <= 6; ++i) spec.q_grid.push_back(2.0 + 0.5 * i);
      break;
    case EstimatorKind::trim:
      spec.select = SelectionMethod::trim_lcurve;
      for (int k = 1; k <= max_k; ++k) spec.grid.push_back(k);
      spec.trim.nu = 10;
      break;
  }
  return spec;
}

TargetFit identify_target(const RegressionProblem& problem, const EstimatorSpec& spec, std::uint64_t seed,
                          const std::string& target) {
  if (spec.grid.empty()) throw InvalidArgument("estimator grid is empty");
  SweepContext ctx = context_for(problem);
  ctx.tol_percent = spec.tol_percent;

  TargetFit fit;
  fit.target = target;
  switch (spec.kind) {
    case EstimatorKind::stls: {
      const int iters = spec.stls_iters;
      fit.path = sweep([&](double phi) { return stls(problem, phi, iters); }, spec.grid, spec.select, ctx);
      break;
    }
    case EstimatorKind::estls: {
      EnsembleConfig cfg = spec.ensemble;
      cfg.seed = seed;
      const EnsembleStls ensemble(problem, cfg);
      fit.path = sweep([&](double phi) { return ensemble.solve(phi); }, spec.grid, spec.select, ctx);
      break;
    }
    case EstimatorKind::irl1: {
      const std::vector<double> qs = spec.q_grid.empty() ? std::vector<double>{1.0} : spec.q_grid;
      const std::size_t nl = spec.grid.size();
      std::vector<double> index(nl * qs.size());
      for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<double>(i);
      const auto est = [&](double g) {
        const auto i = static_cast<std::size_t>(std::llround(g));
        return irl1(problem, spec.grid[i % nl], qs[i / nl], spec.irl1_reweights);
      };
      fit.path = sweep(est, index, spec.select, ctx);
      break;
    }
    case EstimatorKind::trim: {
      std::vector<double> ks;
      for (double g : spec.grid)
        if (g >= 0 && g <= static_cast<double>(problem.penalized_count())) ks.push_back(g);
      if (ks.empty()) throw InvalidArgument("no admissible sparsity level in the TRIM grid");
      const auto est = [&](double g) {
        TrimConfig cfg = spec.trim;
        cfg.k = static_cast<int>(std::lround(g));
        cfg.seed = derive_seed(seed, "trim", static_cast<std::uint64_t>(cfg.k));
        return trim_solve(problem, cfg);
      };
      fit.path = sweep(est, ks, spec.select, ctx);
      break;
    }
  }
  if (fit.path.chosen < 0) throw NumericalError("no valid model on the grid for target '" + target + "'");
  fit.model = fit.path.best();
  return fit;
}

std::vector<Support> supports_of(const MatrixXd& coefficients) {
  std::vector<Support> out;
  for (Index j = 0; j < coefficients.cols(); ++j) out.push_back(support_of(coefficients.col(j)));
  return out;
}

SystemFit identify_system(const IdentificationData& data, const EstimatorSpec& spec, std::uint64_t seed, int jobs) {
  const auto n = static_cast<std::size_t>(data.targets.cols());
  SystemFit fit;
  fit.coefficients = MatrixXd::Zero(data.library.matrix.cols(), data.targets.cols());
  fit.targets.resize(n);
  parallel_for(n, jobs, [&](std::size_t j) {
    const std::string name = j < data.target_names.size() ? data.target_names[j] : std::to_string(j);
    const RegressionProblem problem(data.library.matrix, data.targets.col(static_cast<Index>(j)), data.library.labels);
    fit.targets[j] = identify_target(problem, spec, derive_seed(seed, "target", j), name);
  });
  for (std::size_t j = 0; j < n; ++j) {
    fit.coefficients.col(static_cast<Index>(j)) = fit.targets[j].model.coefficients;
    fit.supports.push_back(fit.targets[j].model.support);
  }
  return fit;
}

TrialResult evaluate(const IdentificationData& data, const SystemFit& fit) {
  if (data.truth.size() == 0) throw InvalidArgument("evaluation needs the true coefficients");
  TrialResult r;
  r.support_exact = support_recovery(fit.supports, supports_of(data.truth));
  r.rmse = rmse(data.library.matrix, fit.coefficients, data.truth);
  r.coeff_error = coeff_error(fit.coefficients, data.truth);
  return r;
}

// ------------------------------------------------------------------ Lorenz

TimeSeries lorenz_noisy(const LorenzScenario& s) {
  const TimeSeries sim = lorenz_simulate(s.params, s.dt, s.T);
  const auto m = static_cast<Index>(std::llround(s.T / s.dt));
  TimeSeries out = sim.slice(0, std::min(m, sim.samples()));
  for (Index j = 0; j < out.channels(); ++j) {
    const std::uint64_t seed = derive_seed(s.seed, "lorenz-noise", static_cast<std::uint64_t>(j));
    const VectorXd clean = out.data.col(j);
    out.data.col(j) = s.correlated ? add_correlated_noise(clean, s.noise_percent, seed)
                                   : add_awgn(clean, s.noise_percent, seed);
  }
  return out;
}

MatrixXd lorenz_truth(const Library& library, const LorenzParams& p) {
  MatrixXd xi = MatrixXd::Zero(library.matrix.cols(), 3);
  xi(library.column("x"), 0) = -p.sigma;
  xi(library.column("y"), 0) = p.sigma;
  xi(library.column("x"), 1) = p.rho;
  xi(library.column("y"), 1) = -1.0;
  xi(library.column("x*z"), 1) = -1.0;
  xi(library.column("x*y"), 2) = 1.0;
  xi(library.column("z"), 2) = -p.beta;
  return xi;
}

IdentificationData lorenz_data(const LorenzScenario& s) {
  if (s.degree < 2) throw InvalidArgument("Lorenz needs a library of degree 2 or more");
  const TimeSeries noisy = lorenz_noisy(s);
  IdentificationData d;
  d.library = poly_library({{"x", noisy.channel("x")}, {"y", noisy.channel("y")}, {"z", noisy.channel("z")}},
                           s.degree, false);
  d.targets.resize(noisy.samples(), 3);
  d.target_names = {"dx", "dy", "dz"};
  for (Index j = 0; j < 3; ++j) d.targets.col(j) = noisy.channel(d.target_names[static_cast<std::size_t>(j)]);
  d.truth = lorenz_truth(d.library, s.params);
  return d;
}

DenoiseComparison tikhonov_comparison(std::uint64_t seed, double T, double dt, double level_percent,
                                      const std::string& channel) {
  const TimeSeries sim = lorenz_simulate(LorenzParams{}, dt, T);
  const auto m = static_cast<Index>(std::llround(T / dt));
  const VectorXd clean = sim.channel(channel).head(std::min(m, sim.samples()));
  const VectorXd noisy = add_correlated_noise(clean, level_percent, derive_seed(seed, "tikhonov-comparison"));
  DenoiseComparison out;
  const std::vector<double> grid = default_lambda_grid();
  out.path = tikhonov_sweep(noisy, dt, grid, true);
  const Index il = select_tikhonov(out.path, SelectionMethod::lcurve);
  const Index ig = select_tikhonov(out.path, SelectionMethod::gcv);
  const auto err = [&](Index i) {
    return std::sqrt((out.path.fitted[static_cast<std::size_t>(i)] - clean).squaredNorm() /
                     static_cast<double>(clean.size()));
  };
  out.lambda_lcurve = grid[static_cast<std::size_t>(il)];
  out.lambda_gcv = grid[static_cast<std::size_t>(ig)];
  out.rmse_lcurve = err(il);
  out.rmse_gcv = err(ig);
  return out;
}

// ---------------------------------------------------------------- Bouc Wen

BoucWenResult boucwen_identify(const BoucWenExperiment& e) {
  const TimeSeries sim = boucwen_simulate(e.params, e.dt, e.T);
  FlinOptions fo = e.flin;
  fo.mass = e.params.m;
  BoucWenResult r;
  r.flin = estimate_flin(sim, fo);
  const Index off = r.flin.offset, n = r.flin.x.size();
  r.start_time = sim.t(off);
  const VectorXd u = sim.channel("u").segment(off, n);
  r.y = boucwen_latent_state(u, r.flin.f_lin);
  r.z_true = sim.channel("z").segment(off, n);
  {
    const VectorXd a = r.y.array() - r.y.mean(), b = r.z_true.array() - r.z_true.mean();
    const double den = a.norm() * b.norm();
    r.correlation = den > 0.0 ? a.dot(b) / den : 0.0;
  }
  const Channel cx{"x", r.flin.x}, cv{"xdot", r.flin.xdot}, cy{"y", r.y};
  r.library = custom_library(
      {{{cx, abs_channel(cx), cv, abs_channel(cv), cy, abs_channel(cy)}, e.degree}, {{Channel{"u", u}}, 0}});
  const AugmentedLibrary aug = augment_integral(r.library, e.dt);
  TrimConfig cfg = e.trim;
  cfg.k = e.k;
  r.fit = trim_ivp(aug.matrix, r.y, cfg, aug.labels);

  // Linear part from u - y_model = m xddot + c xdot + k x.
  VectorXd coef(aug.matrix.cols());
  coef(0) = r.fit.z0;
  coef.tail(aug.matrix.cols() - 1) = r.fit.model.coefficients;
  const VectorXd y_model = aug.matrix * coef;
  MatrixXd lin(n, 3);
  lin << r.flin.xddot, r.flin.xdot, r.flin.x;
  const VectorXd mck = lin.colPivHouseholderQr().solve(u - y_model);
  r.m_refit = mck(0);
  r.c_refit = mck(1);
  r.k_refit = mck(2);
  return r;
}

// ----------------------------------------------------------------- chatter

std::vector<double> tikhonov_lambda_grid(double dt, int count) {
  // The default grid [1e-11, 1] is tuned for dt = 0.005; the penalty carries
  // 1/dt^4, so rescale to keep the same effective smoothing range.
  const double s = std::pow(dt / 0.005, 4);
  return logspace(1e-11 * s, 1.0 * s, count);
}

VectorXd tikhonov_lcurve(const VectorXd& z, double dt) {
  const TikhonovPath path = tikhonov_sweep(z, dt, tikhonov_lambda_grid(dt));
  return path.fitted[static_cast<std::size_t>(select_tikhonov(path, SelectionMethod::lcurve))];
}

CalibratedChannel calibrate_noise(const VectorXd& clean, double dt, double target_db, std::uint64_t seed) {
  const auto eval = [&](double level) {
    CalibratedChannel c;
    c.noise_percent = level;
    c.denoised = tikhonov_lcurve(add_awgn(clean, level, seed), dt);
    c.snr_db = snr_db(clean, c.denoised);
    return c;
  };
  // SNR falls by roughly 20 dB per decade of noise; secant steps in log level.
  CalibratedChannel a = eval(1.0);
  if (std::abs(a.snr_db - target_db) < 0.5) return a;
  CalibratedChannel b = eval(a.noise_percent * std::pow(10.0, (a.snr_db - target_db) / 20.0));
  for (int it = 0; it < 6 && std::abs(b.snr_db - target_db) >= 0.5; ++it) {
    const double la = std::log10(a.noise_percent), lb = std::log10(b.noise_percent);
    double slope = (b.snr_db - a.snr_db) / (lb - la);
    if (!(slope < -1.0) || !std::isfinite(slope)) slope = -20.0;
    const double next = lb + (target_db - b.snr_db) / slope;
    a = std::move(b);
    b = eval(std::pow(10.0, std::clamp(next, la - 2.0, la + 2.0)));
  }
  return std::abs(b.snr_db - target_db) <= std::abs(a.snr_db - target_db) ? b : a;
}

MatrixXd chatter_truth(const Library& library, const ChatterParams& params) {
  const ChatterCoefficients c = chatter_coefficients(params);
  MatrixXd xi = MatrixXd::Zero(library.matrix.cols(), 1);
  xi(library.column("1"), 0) = c.c0;
  xi(library.column("x"), 0) = c.cx;
  xi(library.column("xdot"), 0) = c.cxdot;
  xi(library.column("x_tau"), 0) = c.ctau;
  return xi;
}

ChatterData chatter_data(const ChatterExperiment& e) {
  const TimeSeries sim = dde_simulate(e.params, e.dt, e.T);
  const VectorXd x = sim.channel("x");
  const DerivativeOptions dopt;
  ChatterData out;
  // Velocity from the position, acceleration from the velocity estimate.
  out.lambda_first = select_derivative_lambda(x, 1, e.dt, dopt, x.size() / 3);
  const DerivativeEstimate d1 = regularized_derivative(x, 1, out.lambda_first, e.dt, dopt);
  out.lambda_second = select_derivative_lambda(d1.values, 1, e.dt, dopt, d1.values.size() / 3);
  const DerivativeEstimate d2 = regularized_derivative(d1.values, 1, out.lambda_second, e.dt, dopt);
  const Index off = d1.offset + d2.offset, n = d2.values.size();

  out.channels = {"x", "xdot", "xddot"};
  const std::vector<VectorXd> clean = {x.segment(off, n), d1.values.segment(d2.offset, n), d2.values};
  std::vector<VectorXd> denoised;
  for (std::size_t j = 0; j < clean.size(); ++j) {
    CalibratedChannel c = calibrate_noise(clean[j], e.dt, e.target_snr_db, derive_seed(e.seed, "chatter-noise", j));
    out.noise_percent.push_back(c.noise_percent);
    out.snr_db.push_back(c.snr_db);
    denoised.push_back(std::move(c.denoised));
  }

  const DelayEmbedding emb = delay_channels({{"x", denoised[0]}, {"xdot", denoised[1]}}, e.params.tau, e.dt);
  out.data.library = custom_library({{emb.current, e.degree}, {{emb.delayed[0]}, e.degree}}, true);
  const Index m = emb.current[0].values.size();
  out.data.targets = denoised[2].tail(m);
  out.data.target_names = {"xddot"};
  out.data.truth = chatter_truth(out.data.library, e.params);
  return out;
}

}  // namespace sparsedyn
