#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/experiments.hpp"
#include "sparsedyn/library.hpp"
#include "sparsedyn/preprocess.hpp"
#include "sparsedyn/rng.hpp"
#include "sparsedyn/selection.hpp"

using namespace sparsedyn;

namespace {

VectorXd grid(Index m, double dt) {
  VectorXd t(m);
  for (Index i = 0; i < m; ++i) t(i) = static_cast<double>(i) * dt;
  return t;
}

double max_abs(const VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

double rms(const VectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

VectorXd random_vector(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n01;
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = n01(rng);
  return v;
}

}  // namespace

TEST_CASE("column scaling of a diagonal design") {
  MatrixXd theta = MatrixXd::Zero(2, 2);
  theta(0, 0) = 2.0;
  theta(1, 1) = 3.0;
  const auto [scaled, h] = scale_columns(theta);
  CHECK(scaled.isApprox(MatrixXd::Identity(2, 2)));
  CHECK(h.diag(0) == 2.0);
  CHECK(h.diag(1) == 3.0);
}

TEST_CASE("scale and unscale are inverse and keep fitted values") {
  MatrixXd theta = MatrixXd::Random(40, 6);
  theta.col(3) *= 1e4;
  const auto [scaled, h] = scale_columns(theta);
  for (Index j = 0; j < h.size(); ++j) {
    CHECK(h.diag(j) > 0.0);
    CHECK(scaled.col(j).norm() == doctest::Approx(1.0));
  }
  const VectorXd xi = random_vector(6, 9);
  CHECK(max_abs(h.unscale(h.scale(xi)) - xi) <= 1e-12 * max_abs(xi));
  const VectorXd a = scaled * h.scale(xi), b = theta * xi;
  CHECK(max_abs(a - b) <= 1e-10 * max_abs(b));
}

TEST_CASE("zero columns are rejected by name") {
  MatrixXd theta = MatrixXd::Random(5, 3);
  theta.col(1).setZero();
  CHECK_THROWS_WITH_AS(scale_columns(theta, {"a", "b", "c"}), doctest::Contains("b"), InvalidArgument);
}

TEST_CASE("scaling improves conditioning of a noisy cubic Lorenz library") {
  LorenzScenario s;
  s.T = 4.0;
  s.noise_percent = 2.0;
  s.degree = 3;
  s.seed = 17;
  const IdentificationData d = lorenz_data(s);
  const auto [scaled, h] = scale_columns(d.library.matrix);
  CHECK(condition_number(scaled) < condition_number(d.library.matrix));
}

TEST_CASE("Tikhonov at zero lambda is the identity") {
  const VectorXd z = random_vector(30, 1);
  CHECK(max_abs(tikhonov_denoise(z, 0.0) - z) < 1e-12);
}

TEST_CASE("Tikhonov with huge lambda tends to the affine fit") {
  const Index m = 40;
  const VectorXd t = grid(m, 1.0);
  const VectorXd z = random_vector(m, 2) + 0.3 * t;
  MatrixXd a(m, 2);
  a.col(0).setOnes();
  a.col(1) = t;
  const VectorXd affine = a * least_squares(a, z);
  CHECK(max_abs(tikhonov_denoise(z, 1e10) - affine) < 1e-4);
}

TEST_CASE("Tikhonov solution satisfies its normal equations") {
  const Index m = 50;
  const double dt = 0.01, lambda = 3e-6;
  const VectorXd z = random_vector(m, 4);
  const VectorXd zh = tikhonov_denoise(z, lambda, dt);
  const MatrixXd d2 = diff_matrix(2, m, dt).entries;
  const MatrixXd a = MatrixXd::Identity(m, m) + lambda * d2.transpose() * d2;
  CHECK((a * zh - z).norm() <= 1e-8 * z.norm());
}

TEST_CASE("regularized derivative of t^2") {
  const double dt = 1e-3;
  const VectorXd t = grid(1001, dt);
  const VectorXd z = t.array().square().matrix();
  const DerivativeEstimate d = regularized_derivative(z, 1, 1e-12, dt);
  REQUIRE(d.values.size() > 0);
  VectorXd want(d.values.size());
  for (Index i = 0; i < want.size(); ++i) want(i) = 2.0 * t(d.offset + i);
  CHECK(max_abs(d.values - want) < 1e-2);
}

TEST_CASE("derivative of a constant is zero") {
  const VectorXd z = VectorXd::Constant(300, 4.2);
  for (double lambda : {1e-9, 1e-3, 1.0}) {
    const DerivativeEstimate d = regularized_derivative(z, 1, lambda, 0.01);
    CHECK(max_abs(d.values) < 1e-8);
  }
}

TEST_CASE("derivative estimator is linear in the data") {
  const VectorXd t = grid(200, 0.01);
  const VectorXd z1 = t.array().sin().matrix();
  const VectorXd z2 = random_vector(200, 6);
  const double a = 2.5, b = -0.75, lambda = 1e-5;
  DerivativeOptions o;
  o.z0 = 0.0;
  const VectorXd lhs = regularized_derivative(a * z1 + b * z2, 1, lambda, 0.01, o).values;
  const VectorXd rhs = a * regularized_derivative(z1, 1, lambda, 0.01, o).values +
                       b * regularized_derivative(z2, 1, lambda, 0.01, o).values;
  CHECK(max_abs(lhs - rhs) <= 1e-8 * max_abs(rhs));
}

TEST_CASE("L-curve derivative beats raw differences on noisy sine") {
  const double dt = 0.01;
  const VectorXd t = grid(1000, dt);
  const VectorXd clean = t.array().sin().matrix();
  const VectorXd noisy = add_awgn(clean, 1.0, 21);
  const double lambda = select_derivative_lambda(noisy, 1, dt);
  const DerivativeEstimate d = regularized_derivative(noisy, 1, lambda, dt);
  VectorXd truth(d.values.size()), raw(d.values.size());
  for (Index i = 0; i < truth.size(); ++i) {
    const Index k = d.offset + i;
    truth(i) = std::cos(t(k));
    raw(i) = (noisy(k + 1) - noisy(k)) / dt - std::cos(t(k));
  }
  CHECK(rms(d.values - truth) * 5.0 < rms(raw));
}

TEST_CASE("white noise level and determinism") {
  const Index m = 100000;
  const VectorXd z = (grid(m, 1e-3).array() * 3.0).sin().matrix();
  CHECK(add_awgn(z, 0.0, 1) == z);
  const VectorXd a = add_awgn(z, 2.0, 99), b = add_awgn(z, 2.0, 99);
  CHECK(a == b);
  CHECK(stddev(a - z) == doctest::Approx(0.02 * stddev(z)).epsilon(0.05));
  CHECK(add_awgn(z, 2.0, 100) != a);
}

TEST_CASE("correlated noise autocovariance") {
  const Index m = 200000;
  const VectorXd z = (grid(m, 1e-3).array() * 2.0).sin().matrix();
  CHECK(add_correlated_noise(z, 0.0, 1) == z);
  const VectorXd e = add_correlated_noise(z, 3.0, 5) - z;
  const double mean = e.mean();
  const auto acov = [&](Index lag) {
    double s = 0.0;
    for (Index i = 0; i + lag < m; ++i) s += (e(i) - mean) * (e(i + lag) - mean);
    return s / static_cast<double>(m - lag);
  };
  CHECK(acov(2) / acov(0) == doctest::Approx(std::exp(-1.0)).epsilon(0.1));
  CHECK(std::sqrt(acov(0)) == doctest::Approx(0.03 * stddev(z)).epsilon(0.1));
}

TEST_CASE("snr of a known perturbation") {
  const VectorXd truth = VectorXd::Constant(100, 10.0);
  const VectorXd est = truth + VectorXd::Constant(100, 0.1);
  CHECK(snr_db(truth, est) == doctest::Approx(40.0));
}

TEST_CASE("default denoising grid") {
  const auto g = default_lambda_grid();
  REQUIRE(g.size() == 50);
  CHECK(g.front() == doctest::Approx(1e-11));
  CHECK(g.back() == doctest::Approx(1.0));
}
