#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sparsedyn {

/// Uniformly sampled multichannel signal. Row i is the sample at time t(i).
struct TimeSeries {
  double dt = 1.0;
  Eigen::VectorXd t;
  std::vector<std::string> names;
  Eigen::MatrixXd data;  // samples x channels

  Eigen::Index samples() const { return data.rows(); }
  Eigen::Index channels() const { return data.cols(); }

  bool has(const std::string& name) const;
  Eigen::Index index_of(const std::string& name) const;
  Eigen::VectorXd channel(const std::string& name) const;

  /// Appends (or replaces) a channel with the same sample count.
  void set(const std::string& name, const Eigen::VectorXd& values);

  /// Rows [begin, begin + count).
  TimeSeries slice(Eigen::Index begin, Eigen::Index count) const;
};

TimeSeries make_timeseries(double dt, Eigen::Index samples, double t0 = 0.0);

/// CSV with header `t,<names>`, 17 significant digits, '.' decimal point.
void write_csv(std::ostream& os, const TimeSeries& ts);
void write_csv(const std::string& path, const TimeSeries& ts);

/// Reads a time-series CSV; dt is taken from the first two time stamps and
/// the grid is checked to be uniform within 1e-9 relative.
TimeSeries read_csv(std::istream& is);
TimeSeries read_csv(const std::string& path);

/// Minimal table: string header plus numeric rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path);
void write_table(std::ostream& os, const Table& table);

/// Formats a double with 17 significant digits, independent of the locale.
std::string format_double(double v);

}  // namespace sparsedyn
