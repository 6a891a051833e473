#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sparsedyn/numerics.hpp"
#include "sparsedyn/preprocess.hpp"
#include "sparsedyn/timeseries.hpp"

namespace sparsedyn {

using VectorField = std::function<VectorXd(double t, const VectorXd& z)>;

/// Fixed-step classical RK4 from t = 0 to T (round(T/dt) steps, T included).
/// Channels are the state names followed by "d<name>", the vector field
/// evaluated along the trajectory. `substeps` RK4 steps are taken per sample.
TimeSeries rk4_integrate(const VectorField& field, const VectorXd& z0, double dt, double T,
                         const std::vector<std::string>& names, int substeps = 1);

// ------------------------------------------------------------------ Lorenz

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  Eigen::Vector3d z0{-8.0, 7.0, 27.0};
};

VectorField lorenz63(const LorenzParams& params = {});

/// States x, y, z and analytic derivatives dx, dy, dz.
TimeSeries lorenz_simulate(const LorenzParams& params, double dt, double T);

// ---------------------------------------------------------------- Bouc Wen

struct SineForcing {
  double amplitude = 50.0;  // N
  double frequency = 10.0;  // Hz
  double duration = 6.0;    // s; free decay afterwards
};

struct BoucWenParams {
  double m = 2.0;
  double c = 10.0;
  double k = 5e4;
  double alpha = 5e4;
  double beta = 8e2;
  double delta = 1.1e3;
  double nu = 1.0;
  SineForcing forcing;
};

double boucwen_input(const SineForcing& forcing, double t);

/// Channels x, xdot, xddot, z, u. Zero initial conditions.
TimeSeries boucwen_simulate(const BoucWenParams& params, double dt, double T, int substeps = 8);

/// y = u - f_lin.
VectorXd boucwen_latent_state(const VectorXd& u, const VectorXd& f_lin);

/// Averaged logarithmic decrement over successive positive peaks above
/// `floor` times the largest peak, mapped to a damping ratio.
struct DecrementEstimate {
  double zeta = 0.0;
  int peaks = 0;
};
DecrementEstimate log_decrement_damping(const VectorXd& x, double floor = 1e-3);

/// Dominant non-DC frequency (rad/s) from the FFT magnitude with three-bin
/// quadratic interpolation; the signal is zero padded to at least `pad` times
/// its length.
double spectral_peak(const VectorXd& x, double dt, int pad = 8);

struct FlinOptions {
  double decay_start = 6.0;     // s
  double mass = 1.0;            // f_lin is mass times the normalized oscillator
  double derivative_lambda = -1.0;  // < 0: L-curve choice per order
  DerivativeOptions derivative;
};

struct FlinEstimate {
  double zeta = 0.0;
  double omega_d = 0.0;
  double omega_n = 0.0;
  int peaks = 0;
  Index offset = 0;   // first sample of the trimmed derivative range
  VectorXd x;         // aligned with the estimates below
  VectorXd xdot;
  VectorXd xddot;
  VectorXd f_lin;
  double lambda_first = 0.0;
  double lambda_second = 0.0;
};

/// Linear-oscillator estimate from the free-decay tail of channel x.
FlinEstimate estimate_flin(const TimeSeries& data, const FlinOptions& options = {});

// ----------------------------------------------------------------- chatter

struct ChatterParams {
  double tau = 2.0e-2;
  double f = 3.0e-3;
  double zeta = 2.380e-2;
  double omega_n = 2.129e3;
  double kappa = 1.5e-1;
  double rho = 1.247e-5;
  double history = 1e-6;
};

/// Constant-delay turning model integrated by the method of steps. Channels
/// x, xdot, xddot; the acceleration comes from the model equation.
TimeSeries dde_simulate(const ChatterParams& params, double dt, double T);

}  // namespace sparsedyn
