#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/numerics.hpp"
#include "sparsedyn/rng.hpp"

using namespace sparsedyn;

namespace {

VectorXd grid(Index m, double dt) {
  VectorXd t(m);
  for (Index i = 0; i < m; ++i) t(i) = static_cast<double>(i) * dt;
  return t;
}

double max_abs(const VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("first difference stencil") {
  const OperatorMatrix d = diff_matrix(1, 3, 1.0);
  MatrixXd want(2, 3);
  want << -1, 1, 0, 0, -1, 1;
  CHECK(d.entries == want);
}

TEST_CASE("second difference is the square of the first") {
  const OperatorMatrix d2 = diff_matrix(2, 4, 1.0);
  MatrixXd want(2, 4);
  want << 1, -2, 1, 0, 0, 1, -2, 1;
  CHECK(d2.entries == want);
}

TEST_CASE("first difference of a ramp is one") {
  const VectorXd t = grid(50, 0.1);
  const VectorXd d = diff_matrix(1, 50, 0.1).apply(t);
  CHECK(max_abs(d - VectorXd::Ones(49)) < 1e-12);
}

TEST_CASE("D1 entries are +-1/dt or zero") {
  const double dt = 0.25;
  const MatrixXd& e = diff_matrix(1, 7, dt).entries;
  for (Index i = 0; i < e.rows(); ++i)
    for (Index j = 0; j < e.cols(); ++j) {
      const double v = e(i, j);
      CHECK((v == 0.0 || v == 1.0 / dt || v == -1.0 / dt));
    }
}

TEST_CASE("D_i has shape (M-i) x M and kills polynomials of degree below i") {
  const double dt = 0.5;
  const Index m = 12;
  const VectorXd t = grid(m, dt);
  for (int order = 1; order <= 4; ++order) {
    const OperatorMatrix d = diff_matrix(order, m, dt);
    CHECK(d.rows() == m - order);
    CHECK(d.cols() == m);
    for (int p = 0; p < order; ++p) {
      const VectorXd f = t.array().pow(p).matrix();
      CHECK(max_abs(d.apply(f)) < 1e-9);
    }
  }
}

TEST_CASE("diff_matrix rejects bad arguments") {
  CHECK_THROWS_AS(diff_matrix(0, 5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(diff_matrix(3, 3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(diff_matrix(1, 5, 0.0), InvalidArgument);
}

TEST_CASE("trapezoid integral of one is a ramp") {
  const VectorXd v = integ_matrix(1, 11, 0.1, 1).apply(VectorXd::Ones(11));
  for (Index i = 0; i < 11; ++i) CHECK(v(i) == doctest::Approx(0.1 * static_cast<double>(i)).epsilon(1e-14));
}

TEST_CASE("integral operators start at zero") {
  for (int nw = 1; nw <= 3; ++nw)
    for (int order = 1; order <= 3; ++order) {
      const OperatorMatrix t = integ_matrix(order, 9, 0.3, nw);
      CHECK(t.rows() == 9);
      CHECK(t.cols() == 9);
      CHECK(t.entries.row(0).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("trapezoid error is second order") {
  // Oracle: the antiderivative of cos is sin.
  const auto err = [](double h) {
    const Index m = static_cast<Index>(std::llround(2.0 / h)) + 1;
    const VectorXd t = grid(m, h);
    const VectorXd f = t.array().cos().matrix();
    return max_abs(cumulative_integral(f, h, 1) - VectorXd(t.array().sin().matrix()));
  };
  const double e1 = err(0.02), e2 = err(0.01), e3 = err(0.005);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("third-order stencil rows") {
  const double dt = 1.0;
  const MatrixXd t = integ_matrix(1, 6, dt, 3).entries;
  // First interval uses (9, 19, -5, 1)/24, interior ones (-1, 13, 13, -1)/24
  // and the last interval the mirror of the first.
  CHECK(t(1, 0) == doctest::Approx(9.0 / 24));
  CHECK(t(1, 1) == doctest::Approx(19.0 / 24));
  CHECK(t(1, 2) == doctest::Approx(-5.0 / 24));
  CHECK(t(1, 3) == doctest::Approx(1.0 / 24));
  const VectorXd interior = t.row(2) - t.row(1);
  CHECK(interior(0) == doctest::Approx(-1.0 / 24));
  CHECK(interior(1) == doctest::Approx(13.0 / 24));
  CHECK(interior(2) == doctest::Approx(13.0 / 24));
  CHECK(interior(3) == doctest::Approx(-1.0 / 24));
  const VectorXd last = t.row(5) - t.row(4);
  CHECK(last(2) == doctest::Approx(1.0 / 24));
  CHECK(last(3) == doctest::Approx(-5.0 / 24));
  CHECK(last(4) == doctest::Approx(19.0 / 24));
  CHECK(last(5) == doctest::Approx(9.0 / 24));
}

TEST_CASE("exactness degrees of the quadrature stencils") {
  const double dt = 0.1;
  const Index m = 21;
  const VectorXd t = grid(m, dt);
  // Trapezoid: exact on linear functions.
  const VectorXd lin = (2.0 * t.array() + 1.0).matrix();
  const VectorXd lin_int = (t.array().square() + t.array()).matrix();
  CHECK(max_abs(cumulative_integral(lin, dt, 1) - lin_int) < 1e-12);
  // Third order: exact on every cubic monomial.
  for (int p = 0; p <= 3; ++p) {
    const VectorXd f = t.array().pow(p).matrix();
    const VectorXd want = (t.array().pow(p + 1) / (p + 1)).matrix();
    CHECK(max_abs(cumulative_integral(f, dt, 3) - want) < 1e-12);
  }
}

TEST_CASE("matrix and recursive integrals agree") {
  Rng rng(3);
  std::normal_distribution<double> n01;
  VectorXd f(15);
  for (Index i = 0; i < f.size(); ++i) f(i) = n01(rng);
  for (int nw = 1; nw <= 3; ++nw) {
    const VectorXd a = integ_matrix(1, 15, 0.2, nw).apply(f);
    const VectorXd b = cumulative_integral(f, 0.2, nw);
    CHECK(max_abs(a - b) < 1e-12);
    const VectorXd twice = integ_matrix(2, 15, 0.2, nw).apply(f);
    CHECK(max_abs(twice - cumulative_integral(b, 0.2, nw)) < 1e-12);
  }
}

TEST_CASE("least squares on identity designs") {
  const MatrixXd a = MatrixXd::Identity(3, 3);
  const VectorXd b = (VectorXd(3) << 1, 2, 3).finished();
  CHECK(least_squares(a, b) == b);
  CHECK(least_squares(a, b, Support{0, 1, 2}) == b);
  CHECK(least_squares(a, b, Support{1}) == (VectorXd(3) << 0, 2, 0).finished());
}

TEST_CASE("least squares recovers a planted solution") {
  Rng rng(11);
  std::normal_distribution<double> n01;
  MatrixXd a(20, 5);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = n01(rng);
  const VectorXd x = (VectorXd(5) << 1.5, -2, 0.25, 3, -0.5).finished();
  CHECK(max_abs(least_squares(a, a * x) - x) < 1e-10);
}

TEST_CASE("least squares reports dependent columns") {
  MatrixXd a(6, 3);
  a.setRandom();
  a.col(2) = 2.0 * a.col(0);
  try {
    least_squares(a, VectorXd::Ones(6));
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(e.columns().size() == 1);
  }
}

TEST_CASE("factored least squares matches direct solves on every support") {
  Rng rng(5);
  std::normal_distribution<double> n01;
  MatrixXd a(30, 4);
  VectorXd b(30);
  for (Index i = 0; i < 30; ++i) {
    b(i) = n01(rng);
    for (Index j = 0; j < 4; ++j) a(i, j) = n01(rng);
  }
  const LeastSquaresProblem ls(a, b);
  for (int mask = 1; mask < 16; ++mask) {
    Support s;
    for (int j = 0; j < 4; ++j)
      if (mask & (1 << j)) s.push_back(j);
    const auto fit = ls.solve(s);
    const VectorXd direct = least_squares(a, b, s);
    CHECK(max_abs(fit.coefficients - direct) < 1e-10);
    CHECK(fit.rss == doctest::Approx((a * direct - b).squaredNorm()).epsilon(1e-10));
    CHECK(ls.rss(direct) == doctest::Approx(fit.rss).epsilon(1e-10));
  }
}

TEST_CASE("logspace and support_of") {
  const auto g = logspace(1e-3, 1e3, 7);
  REQUIRE(g.size() == 7);
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g[3] == doctest::Approx(1.0));
  CHECK(g.back() == doctest::Approx(1e3));
  CHECK(support_of((VectorXd(4) << 0, -1e-300, 0, 2).finished()) == Support{1, 3});
}

TEST_CASE("condition number of a diagonal matrix") {
  const MatrixXd a = (VectorXd(3) << 1, 10, 100).finished().asDiagonal();
  CHECK(condition_number(a) == doctest::Approx(100.0));
}
