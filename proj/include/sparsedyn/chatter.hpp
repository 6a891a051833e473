#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsedyn/solvers.hpp"
#include "sparsedyn/systems.hpp"

namespace sparsedyn {

/// Coefficients of the identified acceleration model
///   xddot = c0 + cx x + cxdot xdot + ctau x(t - tau).
struct ChatterCoefficients {
  double c0 = 0.0;
  double cx = 0.0;
  double cxdot = 0.0;
  double ctau = 0.0;
};

ChatterCoefficients chatter_coefficients(const ChatterParams& params);

/// Reads the four terms from an identified model by label ("1", "x", "xdot",
/// "x_tau"); missing terms are zero.
ChatterCoefficients chatter_coefficients(const SparseSolution& model);
ChatterCoefficients chatter_coefficients(const VectorXd& coefficients, const std::vector<std::string>& labels);

/// Physical parameters behind a coefficient set. Damping ratio and process
/// damping share one coefficient, so zeta has to come from elsewhere; without
/// it rho is set to zero and `rho_assumed_zero` is raised.
struct ChatterModel {
  double omega_n = 0.0;
  double zeta = 0.0;
  double kappa = 0.0;
  double rho = 0.0;
  double feed = 0.0;
  bool rho_assumed_zero = false;

  double damping() const { return 2.0 * zeta * omega_n + rho * omega_n * omega_n; }
};

ChatterModel chatter_model(const ChatterCoefficients& c, std::optional<double> zeta = std::nullopt);
ChatterModel chatter_model(const ChatterParams& params);

/// Delayed state-space form in time scaled by the spindle period.
struct DelayStateSpace {
  Eigen::Matrix2d a1;
  Eigen::Matrix2d a2;
  double omega_spindle = 0.0;  // rev/s
  double kappa = 0.0;
};

DelayStateSpace state_space(const ChatterModel& model, double omega_spindle, double kappa);

/// det(j w I - A1 - exp(-j 2 pi mu) A2) with w the scaled chatter frequency.
std::complex<double> characteristic(const DelayStateSpace& ss, double scaled_frequency, double mu);

/// |characteristic| divided by max(||A1||, w)^2.
double scaled_residual(const DelayStateSpace& ss, double scaled_frequency, double mu);

struct LobePoint {
  double spindle = 0.0;    // Omega, rev/s
  double kappa = 0.0;      // critical depth-of-cut coefficient
  double omega = 0.0;      // chatter frequency, rad/s
  double mu = 0.0;         // phase fraction in (1/2, 1)
  double residual = 0.0;   // scaled determinant at the point
};

struct StabilityLobe {
  int lobe_index = 0;
  std::vector<LobePoint> points;  // ascending in spindle speed
};

/// Frequency-sweep construction of the lobes n = first..last. Points whose
/// determinant check fails (scaled residual >= 1e-6) are dropped; empty lobes
/// are omitted and reported in `warnings`.
std::vector<StabilityLobe> stability_boundary(const ChatterModel& model, const std::vector<double>& omega_grid,
                                              int first_lobe, int last_lobe,
                                              std::vector<std::string>* warnings = nullptr);

/// Chatter frequencies from just above omega_n to `span` times omega_n.
std::vector<double> default_omega_grid(const ChatterModel& model, int count = 2000, double span = 1.6);

/// Lower envelope of the lobes at one spindle speed (linear interpolation
/// inside each lobe); +inf where no lobe covers Omega.
double critical_kappa(const std::vector<StabilityLobe>& lobes, double omega_spindle);

struct LobeBand {
  std::vector<double> spindle;
  std::vector<double> lower;
  std::vector<double> point;
  std::vector<double> upper;
  std::vector<StabilityLobe> point_lobes;
  std::vector<std::string> diagnostics;
};

/// Boundary at the point, 5th- and 95th-percentile coefficient sets, reduced
/// to a band on a common spindle-speed grid. A percentile set that maps to
/// invalid physical parameters is skipped with a diagnostic.
LobeBand propagate_uncertainty(const ChatterCoefficients& point, const std::vector<ChatterCoefficients>& bounds,
                               std::optional<double> zeta, const std::vector<double>& omega_grid, int first_lobe,
                               int last_lobe, const std::vector<double>& spindle_grid);

/// lobe_index,spindle_speed,kappa_crit,omega,mu
void write_lobes_csv(std::ostream& os, const std::vector<StabilityLobe>& lobes);
/// spindle_speed,kappa_lower,kappa_point,kappa_upper
void write_band_csv(std::ostream& os, const LobeBand& band);

/// Ratio of late to early RMS of the simulated velocity (last and first fifth
/// of the record after the first delay).
double growth_ratio(const TimeSeries& sim, double tau);

struct ProbeResult {
  double spindle = 0.0;
  double kappa = 0.0;
  double ratio = 0.0;
  bool unstable = false;
};

/// Simulates the model at (Omega, kappa) and classifies it as unstable when
/// the growth ratio exceeds 10.
ProbeResult time_domain_probe(const ChatterParams& base, double omega_spindle, double kappa, double duration,
                              double max_dt = 1e-5);

}  // namespace sparsedyn
