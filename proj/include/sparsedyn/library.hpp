#pragma once

#include <string>
#include <vector>

#include "sparsedyn/numerics.hpp"

namespace sparsedyn {

/// A named signal, one value per sample.
struct Channel {
  std::string name;
  VectorXd values;
};

/// Candidate-function matrix with one label per column.
struct Library {
  MatrixXd matrix;
  std::vector<std::string> labels;
  std::vector<std::string> state_names;
  bool includes_constant = false;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  /// Column index of `label`; throws InvalidArgument when absent.
  int column(const std::string& label) const;
  Library rows_subset(Index begin, Index count) const;
};

/// All monomials of total degree 1..degree over the channels, graded
/// lexicographic order; constant column 0 when requested.
Library poly_library(const std::vector<Channel>& channels, int degree, bool include_constant = false);

/// One block of a custom library: a polynomial expansion of its channels,
/// or (degree == 0) the channels copied verbatim.
struct LibraryBlock {
  std::vector<Channel> channels;
  int degree = 1;
};

Library custom_library(const std::vector<LibraryBlock>& blocks, bool include_constant = false);

/// Elementwise |x|, labelled "|name|".
Channel abs_channel(const Channel& c);

/// Current and delayed views of channels on a uniform grid. Rows of
/// `current` start at sample `offset` = tau/dt so that every delayed value
/// refers to recorded history.
struct DelayEmbedding {
  std::vector<Channel> current;
  std::vector<Channel> delayed;  // named "<name>_tau"
  Index offset = 0;
};

/// Requires tau/dt to be an integer within 1e-9.
Index delay_samples(double tau, double dt);
DelayEmbedding delay_channels(const std::vector<Channel>& channels, double tau, double dt);

/// Gamma = [1, T_1 Theta] for the initial-value formulation.
struct AugmentedLibrary {
  MatrixXd matrix;
  std::vector<std::string> labels;  // "1" followed by the library labels
};

AugmentedLibrary augment_integral(const Library& theta, const OperatorMatrix& t1);
/// Same, applying the quadrature recursively instead of forming T_1.
AugmentedLibrary augment_integral(const Library& theta, double dt, int newton_order = 1);

/// Monomial exponent tuples used by poly_library, in column order.
std::vector<std::vector<int>> monomial_exponents(int variables, int degree);

}  // namespace sparsedyn
