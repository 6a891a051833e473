#include "sparsedyn/library.hpp"

#include <cmath>
#include <set>

#include "sparsedyn/errors.hpp"

namespace sparsedyn {

int Library::column(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  throw InvalidArgument("library has no column '" + label + "'");
}

Library Library::rows_subset(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > rows()) throw InvalidArgument("library row subset out of range");
  Library out = *this;
  out.matrix = matrix.middleRows(begin, count);
  return out;
}

namespace {

// Nondecreasing index tuples of length d over v variables, lexicographic.
void combos(int v, int d, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < v; ++i) {
    cur.push_back(i);
    combos(v, d, i, cur, out);
    cur.pop_back();
  }
}

std::string monomial_label(const std::vector<Channel>& channels, const std::vector<int>& exps) {
  std::string label;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i] == 0) continue;
    if (!label.empty()) label += '*';
    label += channels[i].name;
    if (exps[i] > 1) label += '^' + std::to_string(exps[i]);
  }
  return label;
}

void check_lengths(const std::vector<Channel>& channels, Index& rows) {
  for (const auto& c : channels) {
    if (rows < 0) rows = c.values.size();
    if (c.values.size() != rows)
      throw InvalidArgument("channel '" + c.name + "' has " + std::to_string(c.values.size()) + " samples, expected " +
                            std::to_string(rows));
  }
}

void append_block(const std::vector<Channel>& channels, int degree, Index rows, std::vector<VectorXd>& cols,
                  std::vector<std::string>& labels) {
  if (degree == 0) {
    for (const auto& c : channels) {
      cols.push_back(c.values);
      labels.push_back(c.name);
    }
    return;
  }
  for (const auto& exps : monomial_exponents(static_cast<int>(channels.size()), degree)) {
    VectorXd col = VectorXd::Ones(rows);
    for (std::size_t i = 0; i < exps.size(); ++i)
      for (int p = 0; p < exps[i]; ++p) col.array() *= channels[i].values.array();
    cols.push_back(std::move(col));
    labels.push_back(monomial_label(channels, exps));
  }
}

Library assemble(std::vector<VectorXd> cols, std::vector<std::string> labels, std::vector<std::string> names,
                 Index rows, bool include_constant) {
  if (include_constant) {
    cols.insert(cols.begin(), VectorXd::Ones(rows));
    labels.insert(labels.begin(), "1");
  }
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second) throw InvalidArgument("duplicate library label '" + l + "'");
  Library lib;
  lib.matrix.resize(rows, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) lib.matrix.col(static_cast<Index>(j)) = cols[j];
  lib.labels = std::move(labels);
  lib.state_names = std::move(names);
  lib.includes_constant = include_constant;
  return lib;
}

}  // namespace

std::vector<std::vector<int>> monomial_exponents(int variables, int degree) {
  std::vector<std::vector<int>> out;
  for (int d = 1; d <= degree; ++d) {
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur;
    combos(variables, d, 0, cur, tuples);
    for (const auto& t : tuples) {
      std::vector<int> exps(static_cast<std::size_t>(variables), 0);
      for (int i : t) ++exps[static_cast<std::size_t>(i)];
      out.push_back(std::move(exps));
    }
  }
  return out;
}

Library poly_library(const std::vector<Channel>& channels, int degree, bool include_constant) {
  return custom_library({LibraryBlock{channels, degree}}, include_constant);
}

Library custom_library(const std::vector<LibraryBlock>& blocks, bool include_constant) {
  Index rows = -1;
  std::vector<std::string> names;
  for (const auto& b : blocks) {
    if (b.channels.empty()) throw InvalidArgument("library block has no channels");
    if (b.degree < 0) throw InvalidArgument("library degree must be >= 0");
    check_lengths(b.channels, rows);
    for (const auto& c : b.channels) names.push_back(c.name);
  }
  if (rows < 0) throw InvalidArgument("library needs at least one channel");
  std::vector<VectorXd> cols;
  std::vector<std::string> labels;
  for (const auto& b : blocks) append_block(b.channels, b.degree, rows, cols, labels);
  return assemble(std::move(cols), std::move(labels), std::move(names), rows, include_constant);
}

Channel abs_channel(const Channel& c) { return Channel{"|" + c.name + "|", c.values.cwiseAbs()}; }

Index delay_samples(double tau, double dt) {
  if (!(tau > 0.0) || !(dt > 0.0)) throw InvalidArgument("delay and dt must be positive");
  const double ratio = tau / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9) throw InvalidArgument("delay is not an integer multiple of dt");
  return static_cast<Index>(n);
}

DelayEmbedding delay_channels(const std::vector<Channel>& channels, double tau, double dt) {
  const Index s = delay_samples(tau, dt);
  Index rows = -1;
  check_lengths(channels, rows);
  if (rows <= s) throw InvalidArgument("series shorter than the delay");
  DelayEmbedding out;
  out.offset = s;
  for (const auto& c : channels) {
    out.current.push_back(Channel{c.name, c.values.segment(s, rows - s)});
    out.delayed.push_back(Channel{c.name + "_tau", c.values.head(rows - s)});
  }
  return out;
}

namespace {

AugmentedLibrary with_ones(const Library& theta, MatrixXd integrated) {
  AugmentedLibrary out;
  out.matrix.resize(theta.rows(), theta.cols() + 1);
  out.matrix.col(0).setOnes();
  out.matrix.rightCols(theta.cols()) = integrated;
  out.labels.push_back("1");
  out.labels.insert(out.labels.end(), theta.labels.begin(), theta.labels.end());
  return out;
}

}  // namespace

AugmentedLibrary augment_integral(const Library& theta, const OperatorMatrix& t1) {
  if (t1.kind != OperatorKind::integral || t1.order != 1) throw InvalidArgument("augment_integral needs T_1");
  if (t1.cols() != theta.rows()) throw InvalidArgument("integral operator does not match library rows");
  return with_ones(theta, t1.entries * theta.matrix);
}

AugmentedLibrary augment_integral(const Library& theta, double dt, int newton_order) {
  return with_ones(theta, cumulative_integral(theta.matrix, dt, newton_order));
}

}  // namespace sparsedyn
