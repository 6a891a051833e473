#include "sparsedyn/chatter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/timeseries.hpp"

namespace sparsedyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDetTolerance = 1e-6;

}  // namespace

ChatterCoefficients chatter_coefficients(const ChatterParams& p) {
  const double w2 = p.omega_n * p.omega_n;
  return {p.kappa * p.f * w2, -(1.0 + p.kappa) * w2, -(2.0 * p.zeta * p.omega_n + p.rho * w2), p.kappa * w2};
}

ChatterCoefficients chatter_coefficients(const VectorXd& coefficients, const std::vector<std::string>& labels) {
  if (static_cast<Index>(labels.size()) != coefficients.size())
    throw InvalidArgument("chatter_coefficients: one label per coefficient");
  ChatterCoefficients c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = coefficients(static_cast<Index>(i));
    if (labels[i] == "1") c.c0 = v;
    else if (labels[i] == "x") c.cx = v;
    else if (labels[i] == "xdot") c.cxdot = v;
    else if (labels[i] == "x_tau") c.ctau = v;
  }
  return c;
}

ChatterCoefficients chatter_coefficients(const SparseSolution& model) {
  return chatter_coefficients(model.coefficients, model.labels);
}

ChatterModel chatter_model(const ChatterCoefficients& c, std::optional<double> zeta) {
  const double w2 = -c.cx - c.ctau;
  if (!(w2 > 0.0) || !std::isfinite(w2)) throw InvalidArgument("coefficients give a non-positive omega_n^2");
  ChatterModel m;
  m.omega_n = std::sqrt(w2);
  m.kappa = c.ctau / w2;
  m.feed = c.ctau != 0.0 ? c.c0 / c.ctau : 0.0;
  const double b = -c.cxdot;
  if (zeta) {
    m.zeta = *zeta;
    m.rho = (b - 2.0 * m.zeta * m.omega_n) / w2;
  } else {
    m.rho = 0.0;
    m.zeta = b / (2.0 * m.omega_n);
    m.rho_assumed_zero = true;
  }
  return m;
}

ChatterModel chatter_model(const ChatterParams& p) {
  ChatterModel m;
  m.omega_n = p.omega_n;
  m.zeta = p.zeta;
  m.kappa = p.kappa;
  m.rho = p.rho;
  m.feed = p.f;
  return m;
}

DelayStateSpace state_space(const ChatterModel& model, double omega_spindle, double kappa) {
  if (!(model.omega_n > 0.0)) throw InvalidArgument("omega_n must be positive");
  if (!(omega_spindle > 0.0)) throw InvalidArgument("spindle speed must be positive");
  const double w2 = model.omega_n * model.omega_n;
  const double o = omega_spindle;
  DelayStateSpace ss;
  ss.a1 << 0.0, 1.0, -(w2 + kappa * w2) / (o * o), -model.damping() / o;
  ss.a2 << 0.0, 0.0, kappa * w2 / (o * o), 0.0;
  ss.omega_spindle = omega_spindle;
  ss.kappa = kappa;
  return ss;
}

std::complex<double> characteristic(const DelayStateSpace& ss, double w, double mu) {
  using C = std::complex<double>;
  const C j(0.0, 1.0);
  const C e = std::exp(-j * (2.0 * kPi * mu));
  const C m00 = j * w - ss.a1(0, 0) - e * ss.a2(0, 0);
  const C m01 = -ss.a1(0, 1) - e * ss.a2(0, 1);
  const C m10 = -ss.a1(1, 0) - e * ss.a2(1, 0);
  const C m11 = j * w - ss.a1(1, 1) - e * ss.a2(1, 1);
  return m00 * m11 - m01 * m10;
}

double scaled_residual(const DelayStateSpace& ss, double w, double mu) {
  const double s = std::max(ss.a1.norm(), std::abs(w));
  return std::abs(characteristic(ss, w, mu)) / (s * s);
}

std::vector<StabilityLobe> stability_boundary(const ChatterModel& model, const std::vector<double>& omega_grid,
                                              int first_lobe, int last_lobe, std::vector<std::string>* warnings) {
  if (omega_grid.empty()) throw InvalidArgument("chatter frequency grid is empty");
  if (first_lobe < 0 || last_lobe < first_lobe) throw InvalidArgument("bad lobe range");
  const double wn = model.omega_n;
  const double b = model.damping();
  if (!(wn > 0.0) || !(b > 0.0)) throw InvalidArgument("model needs omega_n > 0 and positive damping");

  std::vector<StabilityLobe> lobes;
  for (int n = first_lobe; n <= last_lobe; ++n) {
    StabilityLobe lobe;
    lobe.lobe_index = n;
    for (double w : omega_grid) {
      if (!(w > wn)) continue;
      // Real and imaginary parts of the characteristic equation on s = j w.
      const double phi = 2.0 * (kPi + std::atan((wn * wn - w * w) / (w * b)));
      const double kappa = (w * w - wn * wn) / (wn * wn * (1.0 - std::cos(phi)));
      if (!(kappa > 0.0) || !std::isfinite(kappa)) continue;
      LobePoint pt;
      pt.omega = w;
      pt.mu = phi / (2.0 * kPi);
      pt.kappa = kappa;
      pt.spindle = w / (phi + 2.0 * kPi * n);
      const DelayStateSpace ss = state_space(model, pt.spindle, kappa);
      pt.residual = scaled_residual(ss, w / pt.spindle, pt.mu);
      if (pt.residual < kDetTolerance) lobe.points.push_back(pt);
    }
    if (lobe.points.empty()) {
      if (warnings) warnings->push_back("lobe " + std::to_string(n) + " has no boundary points");
      continue;
    }
    std::sort(lobe.points.begin(), lobe.points.end(),
              [](const LobePoint& a, const LobePoint& c) { return a.spindle < c.spindle; });
    lobes.push_back(std::move(lobe));
  }
  return lobes;
}

std::vector<double> default_omega_grid(const ChatterModel& model, int count, double span) {
  if (count < 2 || !(span > 1.0)) throw InvalidArgument("bad chatter frequency grid");
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double lo = model.omega_n * (1.0 + 1e-4), hi = model.omega_n * span;
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  return grid;
}

double critical_kappa(const std::vector<StabilityLobe>& lobes, double omega_spindle) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& lobe : lobes) {
    const auto& pts = lobe.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double a = pts[i].spindle, c = pts[i + 1].spindle;
      if (omega_spindle < a || omega_spindle > c) continue;
      const double t = c > a ? (omega_spindle - a) / (c - a) : 0.0;
      best = std::min(best, pts[i].kappa + t * (pts[i + 1].kappa - pts[i].kappa));
    }
  }
  return best;
}

LobeBand propagate_uncertainty(const ChatterCoefficients& point, const std::vector<ChatterCoefficients>& bounds,
                               std::optional<double> zeta, const std::vector<double>& omega_grid, int first_lobe,
                               int last_lobe, const std::vector<double>& spindle_grid) {
  if (spindle_grid.empty()) throw InvalidArgument("spindle-speed grid is empty");
  LobeBand band;
  band.spindle = spindle_grid;
  band.point_lobes = stability_boundary(chatter_model(point, zeta), omega_grid, first_lobe, last_lobe,
                                        &band.diagnostics);
  for (double o : spindle_grid) band.point.push_back(critical_kappa(band.point_lobes, o));
  band.lower = band.point;
  band.upper = band.point;
  for (std::size_t b = 0; b < bounds.size(); ++b) {
    std::vector<StabilityLobe> lobes;
    try {
      lobes = stability_boundary(chatter_model(bounds[b], zeta), omega_grid, first_lobe, last_lobe,
                                 &band.diagnostics);
    } catch (const Error& e) {
      band.diagnostics.push_back("bound " + std::to_string(b) + " skipped: " + e.what());
      continue;
    }
    for (std::size_t i = 0; i < spindle_grid.size(); ++i) {
      const double k = critical_kappa(lobes, spindle_grid[i]);
      band.lower[i] = std::min(band.lower[i], k);
      band.upper[i] = std::max(band.upper[i], k);
    }
  }
  return band;
}

void write_lobes_csv(std::ostream& os, const std::vector<StabilityLobe>& lobes) {
  os << "lobe_index,spindle_speed,kappa_crit,omega,mu\n";
  for (const auto& lobe : lobes)
    for (const auto& p : lobe.points)
      os << lobe.lobe_index << ',' << format_double(p.spindle) << ',' << format_double(p.kappa) << ','
         << format_double(p.omega) << ',' << format_double(p.mu) << '\n';
}

void write_band_csv(std::ostream& os, const LobeBand& band) {
  os << "spindle_speed,kappa_lower,kappa_point,kappa_upper\n";
  for (std::size_t i = 0; i < band.spindle.size(); ++i)
    os << format_double(band.spindle[i]) << ',' << format_double(band.lower[i]) << ','
       << format_double(band.point[i]) << ',' << format_double(band.upper[i]) << '\n';
}

double growth_ratio(const TimeSeries& sim, double tau) {
  const VectorXd v = sim.channel("xdot");
  const auto skip = static_cast<Index>(std::llround(tau / sim.dt));
  const Index usable = v.size() - skip;
  if (usable < 10) throw InvalidArgument("record too short for a growth estimate");
  const Index w = usable / 5;
  const auto rms = [](const VectorXd& s) { return std::sqrt(s.squaredNorm() / static_cast<double>(s.size())); };
  const double early = rms(v.segment(skip, w));
  const double late = rms(v.tail(w));
  if (!(early > 0.0)) return late > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return late / early;
}

ProbeResult time_domain_probe(const ChatterParams& base, double omega_spindle, double kappa, double duration,
                              double max_dt) {
  if (!(omega_spindle > 0.0) || !(kappa >= 0.0)) throw InvalidArgument("bad probe point");
  ChatterParams p = base;
  p.tau = 1.0 / omega_spindle;
  p.kappa = kappa;
  const double steps = std::ceil(p.tau / max_dt);
  const double dt = p.tau / steps;
  ProbeResult r;
  r.spindle = omega_spindle;
  r.kappa = kappa;
  try {
    const TimeSeries sim = dde_simulate(p, dt, duration);
    r.ratio = growth_ratio(sim, p.tau);
  } catch (const BlowUpError&) {
    r.ratio = std::numeric_limits<double>::infinity();
  }
  r.unstable = r.ratio > 10.0;
  return r;
}

}  // namespace sparsedyn
