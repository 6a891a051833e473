#include "sparsedyn/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sparsedyn/errors.hpp"

namespace sparsedyn {

bool TimeSeries::has(const std::string& name) const {
  for (const auto& n : names)
    if (n == name) return true;
  return false;
}

Eigen::Index TimeSeries::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  throw InvalidArgument("time series has no channel '" + name + "'");
}

Eigen::VectorXd TimeSeries::channel(const std::string& name) const { return data.col(index_of(name)); }

void TimeSeries::set(const std::string& name, const Eigen::VectorXd& values) {
  if (values.size() != samples()) throw InvalidArgument("channel '" + name + "' has the wrong length");
  if (has(name)) {
    data.col(index_of(name)) = values;
    return;
  }
  data.conservativeResize(Eigen::NoChange, data.cols() + 1);
  data.col(data.cols() - 1) = values;
  names.push_back(name);
}

TimeSeries TimeSeries::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 0 || begin + count > samples()) throw InvalidArgument("time series slice out of range");
  TimeSeries out;
  out.dt = dt;
  out.t = t.segment(begin, count);
  out.names = names;
  out.data = data.middleRows(begin, count);
  return out;
}

TimeSeries make_timeseries(double dt, Eigen::Index samples, double t0) {
  TimeSeries ts;
  ts.dt = dt;
  ts.t.resize(samples);
  for (Eigen::Index i = 0; i < samples; ++i) ts.t(i) = t0 + static_cast<double>(i) * dt;
  ts.data.resize(samples, 0);
  return ts;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const TimeSeries& ts) {
  os << 't';
  for (const auto& n : ts.names) os << ',' << n;
  os << '\n';
  for (Eigen::Index i = 0; i < ts.samples(); ++i) {
    os << format_double(ts.t(i));
    for (Eigen::Index c = 0; c < ts.channels(); ++c) os << ',' << format_double(ts.data(i, c));
    os << '\n';
  }
}

void write_csv(const std::string& path, const TimeSeries& ts) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open '" + path + "' for writing");
  write_csv(os, ts);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const std::string f = trim(field);
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size())
    throw InvalidArgument("line " + std::to_string(line) + ": cannot parse number '" + f + "'");
  return v;
}

}  // namespace

Table read_table_stream(std::istream& is) {
  Table table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (table.header.empty()) {
      for (auto& h : split(line, ',')) table.header.push_back(trim(h));
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != table.header.size())
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, lineno));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw InvalidArgument("empty CSV");
  return table;
}

Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open '" + path + "'");
  return read_table_stream(is);
}

void write_table(std::ostream& os, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

TimeSeries read_csv(std::istream& is) {
  const Table table = read_table_stream(is);
  if (table.header.front() != "t") throw InvalidArgument("time-series CSV must start with a 't' column");
  const auto m = static_cast<Eigen::Index>(table.rows.size());
  if (m < 2) throw InvalidArgument("time-series CSV needs at least two samples");
  TimeSeries ts;
  ts.names.assign(table.header.begin() + 1, table.header.end());
  ts.t.resize(m);
  ts.data.resize(m, static_cast<Eigen::Index>(ts.names.size()));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    ts.t(i) = row[0];
    for (Eigen::Index c = 0; c < ts.data.cols(); ++c) ts.data(i, c) = row[static_cast<std::size_t>(c) + 1];
  }
  ts.dt = ts.t(1) - ts.t(0);
  if (!(ts.dt > 0.0)) throw InvalidArgument("time stamps must be increasing");
  for (Eigen::Index i = 1; i < m; ++i) {
    const double step = ts.t(i) - ts.t(i - 1);
    if (std::abs(step - ts.dt) > 1e-6 * ts.dt)
      throw InvalidArgument("time grid is not uniform at sample " + std::to_string(i));
  }
  return ts;
}

TimeSeries read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open '" + path + "'");
  return read_csv(is);
}

}  // namespace sparsedyn
