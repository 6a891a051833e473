#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "manifest.hpp"
#include "sparsedyn/chatter.hpp"
#include "sparsedyn/errors.hpp"
#include "sparsedyn/experiments.hpp"
#include "sparsedyn/parallel.hpp"
#include "sparsedyn/preprocess.hpp"
#include "sparsedyn/rng.hpp"
#include "sparsedyn/timeseries.hpp"
#include "sparsedyn/uq.hpp"

namespace sparsedyn::cli {

namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ schemas

constexpr double kBig = 1e300;

KeySpec key(std::string name, KeyType type, std::string fallback, std::string help, double min = -kBig,
            double max = kBig, std::vector<std::string> choices = {}) {
  return {std::move(name), type, std::move(fallback), min, max, std::move(choices), std::move(help)};
}

void add(std::vector<KeySpec>& to, const std::vector<KeySpec>& from) { to.insert(to.end(), from.begin(), from.end()); }

// Shortest text that reads back to the same double.
std::string exact_text(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<KeySpec> common_keys() {
  return {key("seed", KeyType::integer, "0", "top-level seed", 0, 9.2e18),
          key("out", KeyType::text, "out", "output directory"),
          key("jobs", KeyType::integer, "1", "worker threads", 1, 1024)};
}

std::vector<KeySpec> chatter_keys() {
  const ChatterParams p;
  return {key("tau", KeyType::real, exact_text(p.tau), "delay (s)", 1e-9),
          key("feed", KeyType::real, exact_text(p.f), "feed", 0),
          key("zeta", KeyType::real, exact_text(p.zeta), "damping ratio", 0, 1),
          key("omega_n", KeyType::real, exact_text(p.omega_n), "natural frequency (rad/s)", 1e-9),
          key("kappa", KeyType::real, exact_text(p.kappa), "depth-of-cut coefficient", 0),
          key("process_damping", KeyType::real, exact_text(p.rho), "process damping coefficient", 0),
          key("history", KeyType::real, exact_text(p.history), "initial history value")};
}

// Keys that build identification data (identify and bootstrap).
std::vector<KeySpec> data_keys() {
  return {key("system", KeyType::text, "file", "lorenz, chatter or file", -kBig, kBig, {"lorenz", "chatter", "file"}),
          key("data", KeyType::path, "", "time-series CSV (system = file)"),
          key("states", KeyType::texts, "", "library channels (system = file)"),
          key("targets", KeyType::texts, "", "target channels, default d<state> (system = file)"),
          key("constant", KeyType::boolean, "false", "add a ones column (system = file)"),
          key("truth", KeyType::path, "", "CSV label,<targets> of true coefficients (system = file)"),
          key("T", KeyType::real, "", "record length (s); system default when empty", 1e-9),
          key("dt", KeyType::real, "", "sampling step (s); system default when empty", 1e-12),
          key("noise", KeyType::text, "none", "none, awgn:<percent> or ar:<percent>"),
          key("degree", KeyType::integer, "", "polynomial degree; system default when empty", 1, 8),
          key("snr", KeyType::real, "40", "chatter: target SNR after denoising (dB)", 0, 200)};
}

std::vector<KeySpec> estimator_keys() {
  return {key("estimator", KeyType::text, "trim", "trim, stls, estls or irl1", -kBig, kBig,
              {"trim", "stls", "estls", "esindy", "sindy", "irl1"}),
          key("select", KeyType::text, "", "selection rule; estimator default when empty", -kBig, kBig,
              {"aic", "aicc", "bic", "hqc", "ric", "ricc", "lcurve", "trim_lcurve"}),
          key("max_k", KeyType::integer, "8", "largest TRIM sparsity", 1, 1000),
          key("nu", KeyType::integer, "10", "TRIM lambda grid size", 5, 1000),
          key("restarts", KeyType::integer, "3", "TRIM random starts per lambda", 0, 1000),
          key("tol", KeyType::real, "5", "forward-step tolerance (percent)", 0, 1000)};
}

const std::map<std::string, std::vector<KeySpec>>& schemas() {
  static const std::map<std::string, std::vector<KeySpec>> all = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    {
      auto& s = m["simulate"];
      s = {key("system", KeyType::text, "lorenz", "lorenz, boucwen or chatter", -kBig, kBig,
               {"lorenz", "boucwen", "chatter"}),
           key("T", KeyType::real, "", "duration (s); system default when empty", 1e-9),
           key("dt", KeyType::real, "", "sampling step (s); system default when empty", 1e-12),
           key("noise", KeyType::text, "none", "none, awgn:<percent> or ar:<percent>"),
           key("derivatives", KeyType::boolean, "true", "lorenz: include dx, dy, dz"),
           key("sigma", KeyType::real, "10", "lorenz sigma"),
           key("rho", KeyType::real, "28", "lorenz rho"),
           key("beta", KeyType::real, exact_text(8.0 / 3.0), "lorenz beta"),
           key("amplitude", KeyType::real, "50", "boucwen forcing amplitude (N)"),
           key("frequency", KeyType::real, "10", "boucwen forcing frequency (Hz)", 0),
           key("forcing_duration", KeyType::real, "6", "boucwen forcing duration (s)", 0)};
      add(s, chatter_keys());
    }
    {
      auto& s = m["identify"];
      s = data_keys();
      add(s, estimator_keys());
    }
    {
      auto& s = m["bootstrap"];
      s = data_keys();
      add(s, estimator_keys());
      add(s, {key("draws", KeyType::integer, "100", "bootstrap draws B", 1, 1e7),
              key("mode", KeyType::text, "resample", "resample, wild_sign or wild_gaussian", -kBig, kBig,
                  {"resample", "wild_sign", "wild_gaussian"}),
              key("reestimate", KeyType::text, "ls", "ls or trim", -kBig, kBig, {"ls", "trim"}),
              key("percentiles", KeyType::reals, "5,50,95", "reported percentiles", 0, 100)});
    }
    {
      auto& s = m["lobes"];
      s = chatter_keys();
      add(s, {key("c0", KeyType::real, "", "identified constant term"),
              key("cx", KeyType::real, "", "identified x coefficient"),
              key("cxdot", KeyType::real, "", "identified xdot coefficient"),
              key("ctau", KeyType::real, "", "identified x_tau coefficient"),
              key("ensemble", KeyType::path, "", "bootstrap ensemble CSV (draw,<labels>)"),
              key("lower", KeyType::real, "5", "lower percentile of the band", 0, 100),
              key("upper", KeyType::real, "95", "upper percentile of the band", 0, 100),
              key("omega_count", KeyType::integer, "2000", "chatter-frequency grid size", 2, 1e7),
              key("omega_span", KeyType::real, "1.6", "grid end as a multiple of omega_n", 1.000001, 100),
              key("first_lobe", KeyType::integer, "0", "first lobe index", 0, 10000),
              key("last_lobe", KeyType::integer, "30", "last lobe index", 0, 10000),
              key("spindle_min", KeyType::real, "20", "band grid start (rev/s)", 1e-9),
              key("spindle_max", KeyType::real, "100", "band grid end (rev/s)", 1e-9),
              key("spindle_count", KeyType::integer, "401", "band grid size", 2, 1e7)});
    }
    {
      auto& s = m["bench"];
      s = {key("noise", KeyType::reals, "0,1,2,3", "noise levels (percent)", 0, 100),
           key("lengths", KeyType::reals, "2,6,10", "record lengths (s)", 1e-9),
           key("estimators", KeyType::texts, "trim,stls,estls,irl1", "estimators", -kBig, kBig,
               {"trim", "stls", "estls", "esindy", "sindy", "irl1"}),
           key("trials", KeyType::integer, "20", "noise realisations per cell", 1, 1e6),
           key("degree", KeyType::integer, "2", "polynomial degree", 2, 8),
           key("dt", KeyType::real, "0.01", "sampling step (s)", 1e-12),
           key("max_k", KeyType::integer, "8", "largest TRIM sparsity", 1, 1000),
           key("resume", KeyType::boolean, "false", "skip cells already completed in out/")};
    }
    for (auto& [name, s] : m) add(s, common_keys());
    return m;
  }();
  return all;
}

// ------------------------------------------------------------------ helpers

std::uint64_t seed_of(const Config& c) { return static_cast<std::uint64_t>(c.integer("seed")); }
int jobs_of(const Config& c) { return static_cast<int>(c.integer("jobs")); }

fs::path out_dir(const Config& c) {
  const fs::path dir = c.text("out");
  fs::create_directories(dir);
  return dir;
}

Manifest start_manifest(const std::string& command, const Config& c) {
  Manifest m;
  m.command = command;
  m.seed = seed_of(c);
  // out and jobs do not change any result.
  for (const auto& kv : c.echo())
    if (kv.first != "out" && kv.first != "jobs") m.config.push_back(kv);
  return m;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct NoiseSpec {
  std::string kind = "none";
  double level = 0.0;
};

NoiseSpec parse_noise(const std::string& text) {
  NoiseSpec n;
  if (text.empty() || text == "none") return n;
  const auto colon = text.find(':');
  n.kind = text.substr(0, colon);
  if (colon == std::string::npos || (n.kind != "awgn" && n.kind != "ar"))
    throw ConfigError("noise: expected none, awgn:<percent> or ar:<percent>, got '" + text + "'");
  try {
    std::size_t used = 0;
    n.level = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("noise: bad level in '" + text + "'");
  }
  if (!(n.level >= 0.0) || n.level > 1000.0) throw ConfigError("noise: level must lie in [0, 1000]");
  return n;
}

double real_or(const Config& c, const std::string& k, double fallback) { return c.empty(k) ? fallback : c.real(k); }
int int_or(const Config& c, const std::string& k, int fallback) {
  return c.empty(k) ? fallback : static_cast<int>(c.integer(k));
}

ChatterParams chatter_params(const Config& c) {
  ChatterParams p;
  p.tau = c.real("tau");
  p.f = c.real("feed");
  p.zeta = c.real("zeta");
  p.omega_n = c.real("omega_n");
  p.kappa = c.real("kappa");
  p.rho = c.real("process_damping");
  p.history = c.real("history");
  return p;
}

std::vector<double> linspace(double lo, double hi, Index n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::string timeseries_csv(const TimeSeries& ts) {
  std::ostringstream os;
  write_csv(os, ts);
  return os.str();
}

// ----------------------------------------------------------------- simulate

void cmd_simulate(const Config& c, std::ostream& log) {
  const std::string system = c.text("system");
  const NoiseSpec noise = parse_noise(c.text("noise"));
  const std::uint64_t seed = seed_of(c);
  Manifest man = start_manifest("simulate", c);
  TimeSeries ts;

  if (system == "lorenz") {
    LorenzScenario s;
    s.T = real_or(c, "T", 10.0);
    s.dt = real_or(c, "dt", 0.01);
    s.noise_percent = noise.level;
    s.correlated = noise.kind == "ar";
    s.seed = seed;
    s.params.sigma = c.real("sigma");
    s.params.rho = c.real("rho");
    s.params.beta = c.real("beta");
    ts = lorenz_noisy(s);
    if (!c.boolean("derivatives")) {
      TimeSeries states = make_timeseries(ts.dt, ts.samples(), ts.t(0));
      for (const char* n : {"x", "y", "z"}) states.set(n, ts.channel(n));
      ts = states;
    }
  } else {
    if (system == "boucwen") {
      BoucWenParams p;
      p.forcing.amplitude = c.real("amplitude");
      p.forcing.frequency = c.real("frequency");
      p.forcing.duration = c.real("forcing_duration");
      ts = boucwen_simulate(p, real_or(c, "dt", 1.0 / 750.0), real_or(c, "T", 12.0));
    } else {
      const ChatterParams p = chatter_params(c);
      ts = dde_simulate(p, real_or(c, "dt", 1e-5), real_or(c, "T", 0.3));
      const double ratio = growth_ratio(ts, p.tau);
      man.info["growth_ratio"] = ratio;
      man.info["unstable"] = ratio > 10.0;
      log << "velocity growth ratio " << num(ratio) << (ratio > 10.0 ? " (unstable)" : ratio > 1.0 ? " (growing)" : " (decaying)") << '\n';
    }
    for (Index j = 0; j < ts.channels(); ++j) {
      const std::uint64_t sj = derive_seed(seed, "noise", static_cast<std::uint64_t>(j));
      const VectorXd clean = ts.data.col(j);
      if (noise.kind == "awgn") ts.data.col(j) = add_awgn(clean, noise.level, sj);
      if (noise.kind == "ar") ts.data.col(j) = add_correlated_noise(clean, noise.level, sj);
    }
  }
  man.info["samples"] = ts.samples();
  man.info["channels"] = ts.names;
  const fs::path dir = out_dir(c);
  man.emit(dir, "data.csv", timeseries_csv(ts));
  man.write(dir);
  log << "wrote " << (dir / "data.csv").string() << " (" << ts.samples() << " samples)\n";
}

// ----------------------------------------------------------- identification

EstimatorSpec estimator_spec(const Config& c) {
  const EstimatorKind kind = parse_estimator(c.text("estimator"));
  EstimatorSpec spec = default_estimator(kind, static_cast<int>(c.integer("max_k")));
  if (!c.empty("select")) {
    std::string rule = c.text("select");
    if (kind == EstimatorKind::trim && rule == "lcurve") rule = "trim_lcurve";
    if (kind != EstimatorKind::trim && rule == "trim_lcurve")
      throw ConfigError("select: trim_lcurve needs estimator = trim");
    spec.select = parse_selection(rule);
  }
  spec.trim.nu = static_cast<int>(c.integer("nu"));
  spec.trim.restarts = static_cast<int>(c.integer("restarts"));
  spec.tol_percent = c.real("tol");
  return spec;
}

MatrixXd read_truth(const std::string& path, const Library& lib, const std::vector<std::string>& targets) {
  std::ifstream in(path);
  if (!in) throw ConfigError("truth: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty truth file");
  const auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "label") throw ConfigError(path + ":1: expected header label,<targets>");
  std::vector<Index> col_of;
  for (std::size_t j = 1; j < header.size(); ++j) {
    const auto it = std::find(targets.begin(), targets.end(), header[j]);
    if (it == targets.end()) throw ConfigError(path + ":1: unknown target '" + header[j] + "'");
    col_of.push_back(it - targets.begin());
  }
  MatrixXd truth = MatrixXd::Zero(lib.cols(), static_cast<Index>(targets.size()));
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw ConfigError(path + ":" + std::to_string(number) + ": wrong field count");
    const auto lit = std::find(lib.labels.begin(), lib.labels.end(), cells[0]);
    if (lit == lib.labels.end())
      throw ConfigError(path + ":" + std::to_string(number) + ": label '" + cells[0] + "' is not a library column");
    for (std::size_t j = 1; j < cells.size(); ++j) {
      try {
        truth(lit - lib.labels.begin(), col_of[j - 1]) = std::stod(cells[j]);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(number) + ": bad number '" + cells[j] + "'");
      }
    }
  }
  return truth;
}

IdentificationData identification_data(const Config& c, nlohmann::ordered_json& info) {
  const std::string system = c.text("system");
  const NoiseSpec noise = parse_noise(c.text("noise"));
  const std::uint64_t seed = seed_of(c);
  if (system == "lorenz") {
    LorenzScenario s;
    s.T = real_or(c, "T", 10.0);
    s.dt = real_or(c, "dt", 0.01);
    s.noise_percent = noise.level;
    s.correlated = noise.kind == "ar";
    s.degree = int_or(c, "degree", 2);
    s.seed = seed;
    return lorenz_data(s);
  }
  if (system == "chatter") {
    if (noise.kind != "none") throw ConfigError("noise: chatter data are calibrated by snr, not noise");
    ChatterExperiment e;
    e.params = ChatterParams{};
    e.T = real_or(c, "T", e.T);
    e.dt = real_or(c, "dt", e.dt);
    e.degree = int_or(c, "degree", e.degree);
    e.target_snr_db = c.real("snr");
    e.seed = seed;
    ChatterData cd = chatter_data(e);
    info["noise_percent"] = cd.noise_percent;
    info["snr_db"] = cd.snr_db;
    return std::move(cd.data);
  }

  if (c.empty("data")) throw ConfigError("data: required when system = file");
  if (c.empty("states")) throw ConfigError("states: required when system = file");
  TimeSeries ts = read_csv(c.text("data"));
  const auto states = c.texts("states");
  auto targets = c.texts("targets");
  if (targets.empty())
    for (const auto& s : states) targets.push_back("d" + s);
  std::vector<Channel> chans;
  for (const auto& s : states) {
    if (!ts.has(s)) throw ConfigError("states: no channel '" + s + "' in " + c.text("data"));
    chans.push_back({s, ts.channel(s)});
  }
  if (noise.kind != "none")
    for (std::size_t j = 0; j < chans.size(); ++j)
      chans[j].values = noise.kind == "awgn" ? add_awgn(chans[j].values, noise.level, derive_seed(seed, "noise", j))
                                             : add_correlated_noise(chans[j].values, noise.level,
                                                                    derive_seed(seed, "noise", j));
  IdentificationData d;
  d.library = poly_library(chans, int_or(c, "degree", 2), c.boolean("constant"));
  d.targets.resize(ts.samples(), static_cast<Index>(targets.size()));
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (!ts.has(targets[j])) throw ConfigError("targets: no channel '" + targets[j] + "' in " + c.text("data"));
    d.targets.col(static_cast<Index>(j)) = ts.channel(targets[j]);
  }
  d.target_names = targets;
  if (!c.empty("truth")) d.truth = read_truth(c.text("truth"), d.library, targets);
  return d;
}

std::string coefficients_csv(const IdentificationData& d, const MatrixXd& xi) {
  std::ostringstream os;
  os << "label";
  for (const auto& t : d.target_names) os << ',' << t;
  os << '\n';
  for (Index i = 0; i < xi.rows(); ++i) {
    os << d.library.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < xi.cols(); ++j) os << ',' << format_double(xi(i, j));
    os << '\n';
  }
  return os.str();
}

std::string equation(const std::string& target, const SparseSolution& m, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << target << " =";
  bool first = true;
  for (int i : m.support) {
    const double v = m.coefficients(i);
    os << (first ? (v < 0 ? " -" : " ") : (v < 0 ? " - " : " + ")) << '(' << num(std::abs(v)) << ')'
       << labels[static_cast<std::size_t>(i)];
    first = false;
  }
  if (first) os << " 0";
  return os.str();
}

std::string hyperparameter_text(const TargetFit& tf) {
  std::string out;
  for (const auto& [k, v] : tf.model.hyperparams) out += (out.empty() ? "" : ", ") + k + " = " + num(v);
  return out;
}

std::string fit_report(const std::string& estimator, const EstimatorSpec& spec, const IdentificationData& d,
                       const SystemFit& fit) {
  std::ostringstream os;
  os << "estimator " << estimator << ", selection " << to_string(spec.select) << "\n";
  os << "library " << d.library.cols() << " columns, " << d.library.rows() << " samples\n\n";
  for (std::size_t j = 0; j < fit.targets.size(); ++j) {
    const TargetFit& tf = fit.targets[j];
    os << equation(d.target_names[j], tf.model, d.library.labels) << "\n";
    os << "  terms " << tf.model.card() << ", residual norm " << num(tf.model.residual_norm) << ", "
       << hyperparameter_text(tf) << "\n";
    for (const auto& f : tf.model.flags) os << "  flag: " << f << "\n";
    for (std::size_t g = 0; g < tf.path.errors.size(); ++g)
      if (!tf.path.valid[g]) os << "  grid point " << num(tf.path.grid[g]) << " failed: " << tf.path.errors[g] << "\n";
  }
  if (d.truth.size() > 0) {
    const TrialResult r = evaluate(d, fit);
    const auto truth_support = supports_of(d.truth);
    os << "\nrecovery against the supplied truth\n";
    for (std::size_t j = 0; j < fit.targets.size(); ++j)
      os << "  " << d.target_names[j] << ": support " << (fit.supports[j] == truth_support[j] ? "exact" : "differs")
         << "\n";
    os << "  E_S " << r.support_exact << ", E_c " << num(r.coeff_error) << ", RMSE " << num(r.rmse) << "\n";
  }
  return os.str();
}

std::string path_csv(const SelectionPath& p) {
  std::ostringstream os;
  write_path_csv(os, p);
  return os.str();
}

void cmd_identify(const Config& c, std::ostream& log) {
  Manifest man = start_manifest("identify", c);
  const IdentificationData d = identification_data(c, man.info);
  const EstimatorSpec spec = estimator_spec(c);
  log << "identifying " << d.targets.cols() << " target(s) with " << to_string(spec.kind) << '\n';
  const SystemFit fit = identify_system(d, spec, seed_of(c), jobs_of(c));
  const fs::path dir = out_dir(c);
  man.emit(dir, "coefficients.csv", coefficients_csv(d, fit.coefficients));
  for (std::size_t j = 0; j < fit.targets.size(); ++j)
    man.emit(dir, "path_" + d.target_names[j] + ".csv", path_csv(fit.targets[j].path));
  const std::string report = fit_report(to_string(spec.kind), spec, d, fit);
  man.emit(dir, "report.txt", report);
  if (d.truth.size() > 0) {
    const TrialResult r = evaluate(d, fit);
    man.info["support_exact"] = r.support_exact;
    man.info["coeff_error"] = r.coeff_error;
    man.info["rmse"] = r.rmse;
  }
  man.write(dir);
  log << report;
}

// ---------------------------------------------------------------- bootstrap

void cmd_bootstrap(const Config& c, std::ostream& log) {
  Manifest man = start_manifest("bootstrap", c);
  const IdentificationData d = identification_data(c, man.info);
  const EstimatorSpec spec = estimator_spec(c);
  const std::uint64_t seed = seed_of(c);
  const SystemFit fit = identify_system(d, spec, seed, jobs_of(c));
  const auto percentiles = c.reals("percentiles");
  if (percentiles.empty()) throw ConfigError("percentiles: at least one value required");

  const auto n = static_cast<std::size_t>(d.targets.cols());
  std::vector<BootstrapEnsemble> ens(n);
  parallel_for(n, jobs_of(c), [&](std::size_t j) {
    BootstrapOptions bo;
    bo.draws = static_cast<int>(c.integer("draws"));
    bo.mode = parse_bootstrap_mode(c.text("mode"));
    bo.seed = derive_seed(seed, "bootstrap", j);
    bo.reestimate = c.text("reestimate") == "trim" ? Reestimate::trim : Reestimate::least_squares;
    bo.trim = spec.trim;
    ens[j] = bootstrap(fit.targets[j].model, d.library.matrix, d.targets.col(static_cast<Index>(j)), bo);
  });

  const fs::path dir = out_dir(c);
  man.emit(dir, "coefficients.csv", coefficients_csv(d, fit.coefficients));
  std::ostringstream report;
  report << fit_report(to_string(spec.kind), spec, d, fit) << "\n";
  nlohmann::ordered_json failed = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < n; ++j) {
    const std::string& t = d.target_names[j];
    std::ostringstream e, q;
    write_ensemble_csv(e, ens[j]);
    write_quantile_csv(q, ens[j], percentiles);
    man.emit(dir, "ensemble_" + t + ".csv", e.str());
    man.emit(dir, "quantiles_" + t + ".csv", q.str());
    failed[t] = ens[j].failed;
    report << t << ": " << ens[j].draws.rows() << " of " << ens[j].requested << " draws accepted ("
           << to_string(ens[j].mode) << ")\n" << q.str();
  }
  man.info["failed_draws"] = failed;
  man.emit(dir, "report.txt", report.str());
  man.write(dir);
  log << report.str();
}

// -------------------------------------------------------------------- lobes

std::vector<ChatterCoefficients> percentile_sets(const std::string& path, const std::vector<double>& ps) {
  const Table t = read_table(path);
  if (t.header.empty() || t.header[0] != "draw") throw ConfigError(path + ": expected header draw,<labels>");
  if (t.rows.empty()) throw ConfigError(path + ": ensemble has no draws");
  const std::vector<std::string> labels(t.header.begin() + 1, t.header.end());
  std::vector<ChatterCoefficients> out;
  for (double p : ps) {
    VectorXd v(static_cast<Index>(labels.size()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
      std::vector<double> col;
      for (const auto& r : t.rows) col.push_back(r[j + 1]);
      v(static_cast<Index>(j)) = quantile(col, p);
    }
    out.push_back(chatter_coefficients(v, labels));
  }
  return out;
}

void cmd_lobes(const Config& c, std::ostream& log) {
  Manifest man = start_manifest("lobes", c);
  const ChatterParams params = chatter_params(c);
  const std::vector<std::string> coef_keys = {"c0", "cx", "cxdot", "ctau"};
  const bool from_coefficients =
      std::any_of(coef_keys.begin(), coef_keys.end(), [&](const std::string& k) { return !c.empty(k); });
  const bool with_ensemble = !c.empty("ensemble");

  ChatterCoefficients point = chatter_coefficients(params);
  if (from_coefficients) {
    for (const auto& k : coef_keys)
      if (c.empty(k)) throw ConfigError(k + ": all of c0, cx, cxdot, ctau are needed together");
    point = {c.real("c0"), c.real("cx"), c.real("cxdot"), c.real("ctau")};
  } else if (with_ensemble) {
    point = percentile_sets(c.text("ensemble"), {50.0})[0];
  }
  // The damping ratio cannot be separated from process damping in identified
  // coefficients; the configured zeta resolves it.
  const bool identified = from_coefficients || with_ensemble;
  const ChatterModel model = identified ? chatter_model(point, params.zeta) : chatter_model(params);

  const int first = static_cast<int>(c.integer("first_lobe"));
  const int last = static_cast<int>(c.integer("last_lobe"));
  if (last < first) throw ConfigError("last_lobe: must not be below first_lobe");
  const std::vector<double> omega_grid =
      default_omega_grid(model, static_cast<int>(c.integer("omega_count")), c.real("omega_span"));
  if (omega_grid.empty()) throw ConfigError("omega_count: empty chatter-frequency grid");

  std::vector<std::string> warnings;
  const auto lobes = stability_boundary(model, omega_grid, first, last, &warnings);
  double worst = 0.0;
  std::size_t points = 0;
  for (const auto& l : lobes)
    for (const auto& p : l.points) {
      worst = std::max(worst, p.residual);
      ++points;
    }
  man.info["model"] = {{"omega_n", model.omega_n}, {"zeta", model.zeta},     {"kappa", model.kappa},
                       {"rho", model.rho},         {"feed", model.feed},     {"rho_assumed_zero", model.rho_assumed_zero}};
  man.info["boundary_points"] = points;
  man.info["max_scaled_residual"] = worst;
  man.info["warnings"] = warnings;

  const fs::path dir = out_dir(c);
  std::ostringstream lo;
  write_lobes_csv(lo, lobes);
  man.emit(dir, "lobes.csv", lo.str());

  if (with_ensemble) {
    const double smin = c.real("spindle_min"), smax = c.real("spindle_max");
    if (!(smax > smin)) throw ConfigError("spindle_max: must exceed spindle_min");
    const auto bounds = percentile_sets(c.text("ensemble"), {c.real("lower"), c.real("upper")});
    const LobeBand band = propagate_uncertainty(point, bounds, params.zeta, omega_grid, first, last,
                                                linspace(smin, smax, static_cast<Index>(c.integer("spindle_count"))));
    std::ostringstream bo;
    write_band_csv(bo, band);
    man.emit(dir, "band.csv", bo.str());
    man.info["band_diagnostics"] = band.diagnostics;
  }
  man.write(dir);
  log << points << " boundary points on " << lobes.size() << " lobes, max scaled |det| " << num(worst) << '\n';
  for (const auto& w : warnings) log << "warning: " << w << '\n';
}

// -------------------------------------------------------------------- bench

struct Cell {
  double noise = 0.0;
  double length = 0.0;
  EstimatorKind kind = EstimatorKind::trim;
  std::string key;  // canonical description, hashed into the cell id
  std::string id;
};

const char* kTrialHeader = "estimator,noise,length,degree,seed,support_exact,rmse,coeff_error";

std::string trials_csv(const std::vector<TrialResult>& rows) {
  std::ostringstream os;
  os << kTrialHeader << '\n';
  for (const auto& r : rows)
    os << r.estimator << ',' << format_double(r.noise_percent) << ',' << format_double(r.length) << ',' << r.degree
       << ',' << r.seed << ',' << r.support_exact << ',' << format_double(r.rmse) << ','
       << format_double(r.coeff_error) << '\n';
  return os.str();
}

std::vector<TrialResult> parse_trials(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (trim(line) != kTrialHeader) throw InvalidArgument("cell file has an unexpected header");
  std::vector<TrialResult> out;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw InvalidArgument("cell file has a malformed row");
    TrialResult r;
    r.estimator = f[0];
    r.noise_percent = std::stod(f[1]);
    r.length = std::stod(f[2]);
    r.degree = std::stoi(f[3]);
    r.seed = std::stoull(f[4]);
    r.support_exact = std::stoi(f[5]);
    r.rmse = std::stod(f[6]);
    r.coeff_error = std::stod(f[7]);
    out.push_back(r);
  }
  return out;
}

void cmd_bench(const Config& c, std::ostream& log) {
  Manifest man = start_manifest("bench", c);
  const std::uint64_t seed = seed_of(c);
  const int trials = static_cast<int>(c.integer("trials"));
  const int degree = static_cast<int>(c.integer("degree"));
  const int max_k = static_cast<int>(c.integer("max_k"));
  const double dt = c.real("dt");
  const auto noises = c.reals("noise");
  const auto lengths = c.reals("lengths");
  const auto names = c.texts("estimators");
  if (noises.empty() || lengths.empty() || names.empty())
    throw ConfigError("noise, lengths and estimators must each list at least one value");

  std::vector<Cell> cells;
  for (double noise : noises)
    for (double length : lengths)
      for (const auto& name : names) {
        Cell cell{noise, length, parse_estimator(name), "", ""};
        cell.key = "lorenz;noise=" + format_double(noise) + ";length=" + format_double(length) +
                   ";estimator=" + to_string(cell.kind) + ";trials=" + std::to_string(trials) +
                   ";degree=" + std::to_string(degree) + ";dt=" + format_double(dt) +
                   ";max_k=" + std::to_string(max_k) + ";seed=" + std::to_string(seed);
        cell.id = git_blob_sha1(cell.key).substr(0, 16);
        cells.push_back(std::move(cell));
      }

  const fs::path dir = out_dir(c);
  const fs::path manifest_path = dir / "manifest.json";
  // Completed cells of an earlier run: id -> hash of its trial file.
  std::map<std::string, std::string> done;
  if (c.boolean("resume") && fs::exists(manifest_path)) {
    const auto old = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
    if (!old.is_discarded() && old.contains("info") && old["info"].contains("cells"))
      for (const auto& [id, entry] : old["info"]["cells"].items())
        if (entry.contains("hash")) done[id] = entry["hash"].get<std::string>();
  }

  std::vector<std::vector<TrialResult>> results(cells.size());
  std::vector<std::string> hashes(cells.size());
  std::vector<bool> finished(cells.size(), false);
  std::mutex progress;
  int skipped = 0;

  const auto record_progress = [&] {
    // Partial manifest so an interrupted run can resume.
    Manifest partial = man;
    nlohmann::ordered_json cj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (finished[i]) cj[cells[i].id] = {{"key", cells[i].key}, {"hash", hashes[i]}};
    partial.info["cells"] = cj;
    partial.info["complete"] = false;
    partial.write(dir);
  };

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto it = done.find(cells[i].id);
    const fs::path file = dir / "cells" / (cells[i].id + ".csv");
    if (it == done.end() || !fs::exists(file)) continue;
    const std::string text = read_file(file);
    if (git_blob_sha1(text) != it->second) continue;
    results[i] = parse_trials(text);
    hashes[i] = it->second;
    finished[i] = true;
    ++skipped;
  }
  if (skipped > 0) log << "resuming: " << skipped << " of " << cells.size() << " cells already complete\n";

  parallel_for(cells.size(), jobs_of(c), [&](std::size_t i) {
    if (finished[i]) return;
    const Cell& cell = cells[i];
    const EstimatorSpec spec = default_estimator(cell.kind, max_k);
    std::vector<TrialResult> rows;
    for (int t = 0; t < trials; ++t) {
      LorenzScenario s;
      s.T = cell.length;
      s.dt = dt;
      s.noise_percent = cell.noise;
      s.degree = degree;
      // Trials share noise realisations across estimators.
      s.seed = derive_seed(seed, "bench-trial", static_cast<std::uint64_t>(t));
      const IdentificationData d = lorenz_data(s);
      TrialResult r;
      try {
        r = evaluate(d, identify_system(d, spec, s.seed));
      } catch (const NumericalError&) {
        r.support_exact = 0;  // a failed identification counts as a miss
        r.rmse = r.coeff_error = std::numeric_limits<double>::quiet_NaN();
      }
      r.estimator = to_string(cell.kind);
      r.noise_percent = cell.noise;
      r.length = cell.length;
      r.degree = degree;
      r.seed = s.seed;
      rows.push_back(r);
    }
    const std::string text = trials_csv(rows);
    atomic_write(dir / "cells" / (cell.id + ".csv"), text);
    std::lock_guard<std::mutex> lock(progress);
    results[i] = std::move(rows);
    hashes[i] = git_blob_sha1(text);
    finished[i] = true;
    record_progress();
    log << "cell " << to_string(cell.kind) << " noise " << num(cell.noise) << "% length " << num(cell.length)
        << " s done\n";
  });

  std::vector<TrialResult> all;
  nlohmann::ordered_json cj = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    all.insert(all.end(), results[i].begin(), results[i].end());
    cj[cells[i].id] = {{"key", cells[i].key}, {"hash", hashes[i]}};
    man.outputs.emplace_back("cells/" + cells[i].id + ".csv", hashes[i]);
  }
  std::ostringstream heat;
  write_heatmap_csv(heat, aggregate(all));
  man.emit(dir, "heatmap.csv", heat.str());
  man.emit(dir, "trials.csv", trials_csv(all));
  man.info["cells"] = cj;
  man.info["complete"] = true;
  man.write(dir);
  log << "wrote " << (dir / "heatmap.csv").string() << " (" << cells.size() << " cells)\n";
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "identify", "bootstrap", "lobes", "bench"};
  return names;
}

std::vector<KeySpec> command_schema(const std::string& command) {
  const auto it = schemas().find(command);
  if (it == schemas().end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

void run_command(const std::string& command, const Config& config, std::ostream& log) {
  config.validate();
  if (command == "simulate") return cmd_simulate(config, log);
  if (command == "identify") return cmd_identify(config, log);
  if (command == "bootstrap") return cmd_bootstrap(config, log);
  if (command == "lobes") return cmd_lobes(config, log);
  if (command == "bench") return cmd_bench(config, log);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace sparsedyn::cli
