#include "sparsedyn/systems.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/selection.hpp"

namespace sparsedyn {

namespace {

constexpr double kBlowUp = 1e150;

bool blown_up(const VectorXd& z) { return !z.allFinite() || z.cwiseAbs().maxCoeff() > kBlowUp; }

Index step_count(double dt, double T) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(T >= dt)) throw InvalidArgument("T must be at least dt");
  return static_cast<Index>(std::llround(T / dt));
}

}  // namespace

TimeSeries rk4_integrate(const VectorField& field, const VectorXd& z0, double dt, double T,
                         const std::vector<std::string>& names, int substeps) {
  const Index steps = step_count(dt, T);
  const Index n = z0.size();
  if (static_cast<Index>(names.size()) != n) throw InvalidArgument("rk4_integrate: one name per state");
  if (substeps < 1) throw InvalidArgument("substeps must be positive");
  if (!z0.allFinite()) throw InvalidArgument("initial state must be finite");

  TimeSeries ts = make_timeseries(dt, steps + 1);
  ts.names = names;
  for (const auto& nm : names) ts.names.push_back("d" + nm);
  ts.data.resize(steps + 1, 2 * n);

  const double h = dt / substeps;
  VectorXd z = z0;
  for (Index i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const VectorXd dz = field(t, z);
    if (blown_up(dz)) throw BlowUpError("trajectory blew up", t);
    ts.data.row(i).head(n) = z.transpose();
    ts.data.row(i).tail(n) = dz.transpose();
    if (i == steps) break;
    for (int s = 0; s < substeps; ++s) {
      const double ts0 = t + s * h;
      const VectorXd k1 = field(ts0, z);
      const VectorXd k2 = field(ts0 + h / 2, z + h / 2 * k1);
      const VectorXd k3 = field(ts0 + h / 2, z + h / 2 * k2);
      const VectorXd k4 = field(ts0 + h, z + h * k3);
      z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    if (blown_up(z)) throw BlowUpError("trajectory blew up", t + dt);
  }
  return ts;
}

// ------------------------------------------------------------------ Lorenz

VectorField lorenz63(const LorenzParams& p) {
  return [p](double, const VectorXd& z) {
    VectorXd dz(3);
    dz << p.sigma * (z(1) - z(0)), z(0) * (p.rho - z(2)) - z(1), z(0) * z(1) - p.beta * z(2);
    return dz;
  };
}

TimeSeries lorenz_simulate(const LorenzParams& params, double dt, double T) {
  return rk4_integrate(lorenz63(params), params.z0, dt, T, {"x", "y", "z"});
}

// ---------------------------------------------------------------- Bouc Wen

double boucwen_input(const SineForcing& forcing, double t) {
  if (t > forcing.duration) return 0.0;
  return forcing.amplitude * std::sin(2.0 * std::numbers::pi * forcing.frequency * t);
}

TimeSeries boucwen_simulate(const BoucWenParams& p, double dt, double T, int substeps) {
  if (!(p.m > 0.0) || !(p.nu > 0.0)) throw InvalidArgument("Bouc Wen needs m > 0 and nu > 0");
  const auto field = [p](double t, const VectorXd& s) {
    const double x = s(0), v = s(1), z = s(2);
    const double u = boucwen_input(p.forcing, t);
    const double az = std::abs(z);
    const double znu1 = p.nu == 1.0 ? z : std::pow(az, p.nu - 1.0) * z;
    const double znu = p.nu == 1.0 ? az : std::pow(az, p.nu);
    VectorXd ds(3);
    ds << v, (u - p.c * v - p.k * x - z) / p.m, p.alpha * v - p.beta * std::abs(v) * znu1 - p.delta * v * znu;
    return ds;
  };
  const TimeSeries raw = rk4_integrate(field, VectorXd::Zero(3), dt, T, {"x", "xdot", "z"}, substeps);
  TimeSeries ts = make_timeseries(dt, raw.samples());
  ts.set("x", raw.channel("x"));
  ts.set("xdot", raw.channel("xdot"));
  ts.set("xddot", raw.channel("dxdot"));
  ts.set("z", raw.channel("z"));
  VectorXd u(raw.samples());
  for (Index i = 0; i < u.size(); ++i) u(i) = boucwen_input(p.forcing, ts.t(i));
  ts.set("u", u);
  return ts;
}

VectorXd boucwen_latent_state(const VectorXd& u, const VectorXd& f_lin) {
  if (u.size() != f_lin.size()) throw InvalidArgument("boucwen_latent_state: length mismatch");
  return u - f_lin;
}

DecrementEstimate log_decrement_damping(const VectorXd& x, double floor) {
  std::vector<double> peaks;
  for (Index i = 1; i + 1 < x.size(); ++i)
    if (x(i) > 0.0 && x(i) > x(i - 1) && x(i) >= x(i + 1)) peaks.push_back(x(i));
  if (peaks.empty()) throw NumericalError("free decay has fewer than 2 peaks");
  const double top = *std::max_element(peaks.begin(), peaks.end());
  std::vector<double> kept;
  for (double pk : peaks)
    if (pk >= floor * top) kept.push_back(pk);
  if (kept.size() < 2) throw NumericalError("free decay has fewer than 2 peaks");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) sum += std::log(kept[i] / kept[i + 1]);
  const double delta = sum / static_cast<double>(kept.size() - 1);
  const double two_pi = 2.0 * std::numbers::pi;
  return {delta / std::sqrt(two_pi * two_pi + delta * delta), static_cast<int>(kept.size())};
}

double spectral_peak(const VectorXd& x, double dt, int pad) {
  if (x.size() < 4) throw InvalidArgument("spectral_peak needs at least 4 samples");
  Index n = 1;
  while (n < static_cast<Index>(pad) * x.size()) n <<= 1;
  std::vector<double> in(static_cast<std::size_t>(n), 0.0);
  const double mean = x.mean();
  for (Index i = 0; i < x.size(); ++i) in[static_cast<std::size_t>(i)] = x(i) - mean;
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  {
    // The FFTW planner is not re-entrant.
    static std::mutex planner;
    std::lock_guard<std::mutex> lock(planner);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  std::size_t best = 1;
  for (std::size_t i = 1; i < out.size(); ++i)
    if (std::abs(out[i]) > std::abs(out[best])) best = i;
  double shift = 0.0;
  if (best > 0 && best + 1 < out.size()) {
    const double a = std::abs(out[best - 1]), b = std::abs(out[best]), c = std::abs(out[best + 1]);
    const double denom = a - 2 * b + c;
    if (denom != 0.0) shift = 0.5 * (a - c) / denom;
  }
  const double freq = (static_cast<double>(best) + shift) / (static_cast<double>(n) * dt);
  return 2.0 * std::numbers::pi * freq;
}

FlinEstimate estimate_flin(const TimeSeries& data, const FlinOptions& options) {
  const VectorXd x = data.channel("x");
  const auto start = static_cast<Index>(std::llround((options.decay_start - data.t(0)) / data.dt));
  if (start < 0 || start + 8 >= x.size()) throw InvalidArgument("decay window lies outside the record");
  // The hysteretic state leaves a slowly creeping offset under the decay;
  // first differences remove it and keep the decrement and the frequency.
  const VectorXd seg = x.segment(start, x.size() - start);
  const VectorXd tail = seg.tail(seg.size() - 1) - seg.head(seg.size() - 1);

  FlinEstimate est;
  const DecrementEstimate dec = log_decrement_damping(tail);
  est.zeta = dec.zeta;
  est.peaks = dec.peaks;
  est.omega_d = spectral_peak(tail, data.dt);
  est.omega_n = est.omega_d / std::sqrt(1.0 - est.zeta * est.zeta);

  const Index probe = std::min<Index>(x.size() / 4, std::max<Index>(0, x.size() - options.derivative.window));
  est.lambda_first = options.derivative_lambda >= 0.0
                         ? options.derivative_lambda
                         : select_derivative_lambda(x, 1, data.dt, options.derivative, probe);
  const DerivativeEstimate d1 = regularized_derivative(x, 1, est.lambda_first, data.dt, options.derivative);
  // Acceleration as the first derivative of the velocity estimate: the
  // direct second-order L-curve choice oversmooths.
  const Index probe2 = std::min<Index>(d1.values.size() / 4,
                                       std::max<Index>(0, d1.values.size() - options.derivative.window));
  est.lambda_second = options.derivative_lambda >= 0.0
                          ? options.derivative_lambda
                          : select_derivative_lambda(d1.values, 1, data.dt, options.derivative, probe2);
  const DerivativeEstimate d2 = regularized_derivative(d1.values, 1, est.lambda_second, data.dt, options.derivative);
  est.offset = d1.offset + d2.offset;
  est.x = x.segment(est.offset, d2.values.size());
  est.xdot = d1.values.segment(d2.offset, d2.values.size());
  est.xddot = d2.values;
  const double w = est.omega_n;
  est.f_lin = options.mass * (est.xddot + 2.0 * est.zeta * w * est.xdot + w * w * est.x);
  return est;
}

// ----------------------------------------------------------------- chatter

namespace {

// Four-point Lagrange interpolation at fractional position s in [1, 2]
// through samples v0..v3 at positions 0..3.
double cubic(double v0, double v1, double v2, double v3, double s) {
  const double a = s - 0, b = s - 1, c = s - 2, d = s - 3;
  return -v0 * b * c * d / 6 + v1 * a * c * d / 2 - v2 * a * b * d / 2 + v3 * a * b * c / 6;
}

}  // namespace

TimeSeries dde_simulate(const ChatterParams& p, double dt, double T) {
  if (!(p.tau > 0.0) || !(p.omega_n > 0.0)) throw InvalidArgument("chatter model needs tau > 0 and omega_n > 0");
  const Index steps = step_count(dt, T);
  const double ratio = p.tau / dt;
  const auto s = static_cast<Index>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(s)) > 1e-9 * std::max(1.0, ratio))
    throw InvalidArgument("tau/dt must be an integer");
  if (s < 2) throw InvalidArgument("delay must span at least two steps");

  const double w2 = p.omega_n * p.omega_n;
  const double damping = 2.0 * p.zeta * p.omega_n + p.rho * w2;
  const auto accel = [&](double x, double v, double xd) {
    return w2 * (p.kappa * p.f - (1.0 + p.kappa) * x + p.kappa * xd) - damping * v;
  };

  std::vector<double> xs(static_cast<std::size_t>(steps + 1));
  std::vector<double> vs(static_cast<std::size_t>(steps + 1));
  // Delayed position at grid position q (in steps, possibly fractional).
  const auto delayed = [&](Index i, double frac) -> double {
    // time index of x(t_i + frac*dt - tau)
    const Index j = i - s;
    if (static_cast<double>(j) + frac < 0.0) return p.history;
    if (frac == 0.0) return xs[static_cast<std::size_t>(j)];
    // Cubic through j-1..j+2, clamped at the start of the solution.
    const Index lo = std::max<Index>(0, j - 1);
    const auto at = [&](Index k) { return xs[static_cast<std::size_t>(k)]; };
    return cubic(at(lo), at(lo + 1), at(lo + 2), at(lo + 3), static_cast<double>(j - lo) + frac);
  };

  double x = 0.0, v = 0.0;
  xs[0] = x;
  vs[0] = v;
  for (Index i = 0; i < steps; ++i) {
    const double d0 = delayed(i, 0.0), dh = delayed(i, 0.5), d1 = delayed(i, 1.0);
    const double k1x = v, k1v = accel(x, v, d0);
    const double k2x = v + dt / 2 * k1v, k2v = accel(x + dt / 2 * k1x, v + dt / 2 * k1v, dh);
    const double k3x = v + dt / 2 * k2v, k3v = accel(x + dt / 2 * k2x, v + dt / 2 * k2v, dh);
    const double k4x = v + dt * k3v, k4v = accel(x + dt * k3x, v + dt * k3v, d1);
    x += dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (!std::isfinite(x) || !std::isfinite(v) || std::abs(x) > kBlowUp)
      throw BlowUpError("chatter simulation blew up", static_cast<double>(i + 1) * dt);
    xs[static_cast<std::size_t>(i + 1)] = x;
    vs[static_cast<std::size_t>(i + 1)] = v;
  }

  TimeSeries ts = make_timeseries(dt, steps + 1);
  VectorXd cx(steps + 1), cv(steps + 1), ca(steps + 1);
  for (Index i = 0; i <= steps; ++i) {
    cx(i) = xs[static_cast<std::size_t>(i)];
    cv(i) = vs[static_cast<std::size_t>(i)];
    ca(i) = accel(cx(i), cv(i), delayed(i, 0.0));
  }
  ts.set("x", cx);
  ts.set("xdot", cv);
  ts.set("xddot", ca);
  return ts;
}

}  // namespace sparsedyn
