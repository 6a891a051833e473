#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsedyn/chatter.hpp"
#include "sparsedyn/library.hpp"
#include "sparsedyn/metrics.hpp"
#include "sparsedyn/selection.hpp"
#include "sparsedyn/solvers.hpp"
#include "sparsedyn/systems.hpp"

namespace sparsedyn {

// --------------------------------------------------------------- estimators

enum class EstimatorKind { trim, stls, estls, irl1 };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);

/// Estimator plus its hyperparameter grid and selection rule.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::trim;
  SelectionMethod select = SelectionMethod::trim_lcurve;
  std::vector<double> grid;    // phi (stls, estls), lambda (irl1) or k (trim)
  std::vector<double> q_grid;  // irl1 exponents
  TrimConfig trim;
  EnsembleConfig ensemble;
  int stls_iters = 25;
  int irl1_reweights = 2;
  double tol_percent = 5.0;
};

/// Defaults: STLS and E-SINDy sweep 100 log-spaced phi in [1e-3, 1e3] with
/// RICc; IRL1 sweeps 75 lambda in [1e-10, 1e6] times q in {2, 2.5, ..., 5}
/// with RICc; TRIM sweeps k = 1..max_k with nu = 10 and its L-curve rule.
EstimatorSpec default_estimator(EstimatorKind kind, int max_k = 8);

struct TargetFit {
  std::string target;
  SelectionPath path;
  SparseSolution model;
};

/// Sweeps the estimator's grid on one regression target and selects a model.
TargetFit identify_target(const RegressionProblem& problem, const EstimatorSpec& spec, std::uint64_t seed,
                          const std::string& target = "");

/// Labelled regression data: library, one column of targets per state and
/// (optionally) the true coefficients.
struct IdentificationData {
  Library library;
  MatrixXd targets;
  std::vector<std::string> target_names;
  MatrixXd truth;  // empty when unknown
};

struct SystemFit {
  std::vector<TargetFit> targets;
  MatrixXd coefficients;          // P x N
  std::vector<Support> supports;  // per target
};

/// Targets are independent; `jobs` threads share them. Target j uses the
/// seed derived from (seed, "target", j) whatever the thread count.
SystemFit identify_system(const IdentificationData& data, const EstimatorSpec& spec, std::uint64_t seed,
                          int jobs = 1);

/// Recovery metrics of a fit against data.truth.
TrialResult evaluate(const IdentificationData& data, const SystemFit& fit);

std::vector<Support> supports_of(const MatrixXd& coefficients);

// ------------------------------------------------------------------ Lorenz

struct LorenzScenario {
  double T = 10.0;
  double dt = 0.01;
  double noise_percent = 0.0;
  bool correlated = false;  // AR(1) instead of white noise
  int degree = 2;
  std::uint64_t seed = 0;
  LorenzParams params;
};

/// M = round(T/dt) samples of the Lorenz system; noise of the given level is
/// added independently to every state and every analytic derivative channel.
TimeSeries lorenz_noisy(const LorenzScenario& scenario);
IdentificationData lorenz_data(const LorenzScenario& scenario);
MatrixXd lorenz_truth(const Library& library, const LorenzParams& params);

/// L-curve and GCV Tikhonov denoising of one correlated-noise Lorenz state.
struct DenoiseComparison {
  double rmse_lcurve = 0.0;
  double rmse_gcv = 0.0;
  double lambda_lcurve = 0.0;
  double lambda_gcv = 0.0;
  TikhonovPath path;
};

DenoiseComparison tikhonov_comparison(std::uint64_t seed, double T = 4.0, double dt = 0.005,
                                      double level_percent = 3.0, const std::string& channel = "y");

// ---------------------------------------------------------------- Bouc Wen

struct BoucWenExperiment {
  BoucWenParams params;
  double dt = 1.0 / 750.0;
  double T = 12.0;
  int degree = 2;
  int k = 3;
  FlinOptions flin;  // decay_start defaults to the end of the forcing
  TrimConfig trim;
};

struct BoucWenResult {
  FlinEstimate flin;
  Library library;          // Theta with columns from P(x,|x|,xdot,|xdot|,y,|y|) and u
  VectorXd y;               // latent-state proxy over the trimmed range
  VectorXd z_true;          // simulator's hysteretic force on the same range
  double correlation = 0.0; // corr(y, z_true)
  IvpSolution fit;
  double start_time = 0.0;  // time of the first retained sample
  // Linear-part refit against u - y_model (m, c, k).
  double m_refit = 0.0, c_refit = 0.0, k_refit = 0.0;
};

BoucWenResult boucwen_identify(const BoucWenExperiment& experiment);

// ----------------------------------------------------------------- chatter

struct ChatterExperiment {
  ChatterParams params;
  double dt = 1e-5;
  double T = 0.3;
  double target_snr_db = 40.0;
  int max_k = 8;
  int degree = 3;
  TrimConfig trim;
  std::uint64_t seed = 0;
};

struct ChatterData {
  IdentificationData data;       // one target column, "xddot"
  std::vector<std::string> channels;
  std::vector<double> noise_percent;  // raw AWGN level per channel
  std::vector<double> snr_db;         // achieved after denoising
  double lambda_first = 0.0;
  double lambda_second = 0.0;
};

/// Simulation, numerical differentiation of the clean position, AWGN on x,
/// xdot and xddot calibrated so that the L-curve Tikhonov denoised channels
/// sit near the target SNR, then the delayed polynomial library.
ChatterData chatter_data(const ChatterExperiment& experiment);

/// Denoised channel and the AWGN level needed to land near `target_db`.
struct CalibratedChannel {
  VectorXd denoised;
  double noise_percent = 0.0;
  double snr_db = 0.0;
};
CalibratedChannel calibrate_noise(const VectorXd& clean, double dt, double target_db, std::uint64_t seed);

/// L-curve Tikhonov denoising on the default lambda grid rescaled to dt.
VectorXd tikhonov_lcurve(const VectorXd& z, double dt);
std::vector<double> tikhonov_lambda_grid(double dt, int count = 40);

MatrixXd chatter_truth(const Library& library, const ChatterParams& params);

}  // namespace sparsedyn
