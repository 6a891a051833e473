#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sparsedyn/errors.hpp"
#include "sparsedyn/experiments.hpp"
#include "sparsedyn/preprocess.hpp"
#include "sparsedyn/rng.hpp"
#include "sparsedyn/selection.hpp"

using namespace sparsedyn;

namespace {

using Points = std::vector<std::pair<double, double>>;

const Criterion kKinds[] = {Criterion::aic, Criterion::aicc, Criterion::bic,
                            Criterion::hqc, Criterion::ric,  Criterion::ricc};

// L-shaped polyline: down the y axis, then along the x axis.
Points right_angle() {
  Points p;
  for (int i = 0; i <= 10; ++i) p.emplace_back(0.001 * i, 1.0 - 0.1 * i);
  for (int i = 1; i <= 10; ++i) p.emplace_back(0.01 + 0.1 * i, 0.0);
  return p;
}

}  // namespace

TEST_CASE("penalty factors") {
  const Index m = 300, p = 19;
  CHECK(penalty_factor(Criterion::aic, 3, m, p) == 2.0);
  CHECK(penalty_factor(Criterion::bic, 3, m, p) == doctest::Approx(std::log(300.0)));
  CHECK(penalty_factor(Criterion::ric, 3, m, p) == doctest::Approx(2.0 * std::log(19.0)));
  CHECK(penalty_factor(Criterion::ricc, 3, m, p) == doctest::Approx(2.0 * (std::log(19.0) + std::log(std::log(19.0)))));
  CHECK(penalty_factor(Criterion::hqc, 3, m, p) == doctest::Approx(2.01 * std::log(std::log(300.0))));
  CHECK(penalty_factor(Criterion::aicc, 3, m, p) == doctest::Approx(2.0 + 8.0 / 296.0));
}

TEST_CASE("equal fit prefers the smaller model") {
  for (Criterion kind : kKinds)
    CHECK(info_criterion(5.0, 2, 100, 10, 0.1, kind) < info_criterion(5.0, 3, 100, 10, 0.1, kind));
}

TEST_CASE("criteria increase strictly with card") {
  for (Criterion kind : kKinds)
    for (Index p = 2; p <= 12; p += 5)
      for (Index m = p + 1; m <= 60; m += 9)
        for (Index card = 0; card + 2 < std::min(m, p); ++card)
          CHECK(info_criterion(1.0, card, m, p, 0.3, kind) < info_criterion(1.0, card + 1, m, p, 0.3, kind));
}

TEST_CASE("corner of a right angle") {
  CHECK(lcurve_corner(right_angle()) == 10);
}

TEST_CASE("straight line has no corner") {
  Points p;
  for (int i = 0; i < 10; ++i) p.emplace_back(i, 2.0 - 0.2 * i);
  CHECK_THROWS_AS(lcurve_corner(p), NoCornerError);
}

TEST_CASE("corner is invariant to affine rescaling and reversal") {
  Points p;
  for (int i = 0; i < 30; ++i) {
    const double t = -3.0 + 0.2 * i;
    p.emplace_back(std::log1p(std::exp(2.0 * t)), std::log1p(std::exp(-3.0 * t)));
  }
  const Index c = lcurve_corner(p);
  Points scaled;
  for (auto [x, y] : p) scaled.emplace_back(7.0 * x - 3.0, 0.01 * y + 5.0);
  CHECK(lcurve_corner(scaled) == c);
  Points reversed(p.rbegin(), p.rend());
  CHECK(lcurve_corner(reversed) == static_cast<Index>(p.size()) - 1 - c);
}

TEST_CASE("trim_select constructed elbows") {
  const std::vector<int> k{1, 2, 3, 4, 5};
  const TrimSelection a = trim_select_index({10, 9.8, 1.0, 0.99, 0.985}, k);
  CHECK(k[static_cast<std::size_t>(a.corner)] == 3);
  CHECK(trim_select({10, 9.8, 1.0, 0.99, 0.985}, k) == 3);
  // The second elbow is shallow enough that the corner itself may already
  // sit at k=4; either way the selection ends there.
  const TrimSelection b = trim_select_index({10, 9.8, 1.0, 0.5, 0.49}, k);
  CHECK(k[static_cast<std::size_t>(b.corner)] >= 3);
  CHECK(k[static_cast<std::size_t>(b.corner)] <= 4);
  CHECK(trim_select({10, 9.8, 1.0, 0.5, 0.49}, k) == 4);
}

TEST_CASE("trim_select stays on the grid") {
  Rng rng(4);
  std::uniform_real_distribution<double> drop(0.2, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> k;
    std::vector<double> r;
    double v = 100.0;
    for (int i = 0; i < 8; ++i) {
      k.push_back(2 * i + 1);
      r.push_back(v);
      v *= drop(rng);
    }
    const TrimSelection s = trim_select_index(r, k);
    CHECK(s.chosen >= s.corner);
    CHECK(s.chosen < static_cast<Index>(k.size()));
    CHECK(std::find(k.begin(), k.end(), trim_select(r, k)) != k.end());
  }
}

TEST_CASE("gcv lands within a grid step of the best lambda") {
  // Oracle: the clean signal is known, so the RMSE-optimal lambda is too.
  const double dt = 0.01;
  const Index m = 400;
  VectorXd clean(m);
  for (Index i = 0; i < m; ++i) clean(i) = std::sin(2.0 * dt * static_cast<double>(i));
  const VectorXd noisy = add_awgn(clean, 5.0, 31);
  const auto grid = logspace(1e-10, 1e-2, 33);
  const TikhonovPath path = tikhonov_sweep(noisy, dt, grid, true);
  Index best = 0;
  for (Index i = 1; i < static_cast<Index>(grid.size()); ++i)
    if ((path.fitted[static_cast<std::size_t>(i)] - clean).norm() <
        (path.fitted[static_cast<std::size_t>(best)] - clean).norm())
      best = i;
  const Index chosen = select_tikhonov(path, SelectionMethod::gcv);
  CHECK(std::abs(chosen - best) <= 1);
  // An interior minimum exists.
  CHECK(chosen > 0);
  CHECK(chosen < static_cast<Index>(grid.size()) - 1);
}

TEST_CASE("gcv smooths less than the L-curve under correlated noise") {
  int under = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DenoiseComparison c = tikhonov_comparison(derive_seed(88, "gcv", seed));
    if (c.lambda_gcv < c.lambda_lcurve) ++under;
  }
  CHECK(under >= 4);
}

TEST_CASE("single-point sweep picks that point") {
  Rng rng(5);
  MatrixXd a(30, 4);
  a.setRandom();
  const VectorXd y = a.col(0) + 0.01 * VectorXd::Random(30);
  const RegressionProblem problem(a, y);
  const Estimator est = [&](double phi) { return stls(problem, phi); };
  for (SelectionMethod m : {SelectionMethod::ricc, SelectionMethod::aic, SelectionMethod::lcurve}) {
    const SelectionPath path = sweep(est, {0.1}, m, context_for(problem));
    CHECK(path.chosen == 0);
    CHECK(path.scores.size() == path.solutions.size());
  }
}

TEST_CASE("trim sweep ordinates are increasing k") {
  LorenzScenario s;
  s.T = 4.0;
  s.noise_percent = 2.0;
  s.degree = 3;
  s.seed = 3;
  const IdentificationData d = lorenz_data(s);
  const RegressionProblem problem(d.library.matrix, d.targets.col(1), d.library.labels);
  const TargetFit fit = identify_target(problem, default_estimator(EstimatorKind::trim, 8), 3);
  REQUIRE(fit.path.ordinate.size() == 8);
  for (std::size_t i = 1; i < fit.path.ordinate.size(); ++i) CHECK(fit.path.ordinate[i] > fit.path.ordinate[i - 1]);
  CHECK(fit.path.chosen >= 0);
  CHECK(fit.path.chosen < 8);
  CHECK(fit.model.card() == 3);
  CHECK(fit.model.support == support_of(d.truth.col(1)));
}

TEST_CASE("RICc on the STLS path finds noiseless Lorenz") {
  LorenzScenario s;
  s.T = 10.0;
  const IdentificationData d = lorenz_data(s);
  for (Index j = 0; j < 3; ++j) {
    const RegressionProblem problem(d.library.matrix, d.targets.col(j), d.library.labels);
    const TargetFit fit = identify_target(problem, default_estimator(EstimatorKind::stls), 1);
    CHECK(fit.model.support == support_of(d.truth.col(j)));
  }
}

TEST_CASE("RICc picks two terms for the third Lorenz equation") {
  int two = 0;
  for (std::uint64_t sd = 0; sd < 10; ++sd) {
    LorenzScenario s;
    s.T = 3.0;
    s.noise_percent = 2.0;
    s.degree = 3;
    s.seed = derive_seed(42, "ricc", sd);
    const IdentificationData d = lorenz_data(s);
    const RegressionProblem problem(d.library.matrix, d.targets.col(2), d.library.labels);
    if (identify_target(problem, default_estimator(EstimatorKind::stls), s.seed).model.card() == 2) ++two;
  }
  CHECK(two >= 8);
}

TEST_CASE("method names round-trip") {
  for (SelectionMethod m : {SelectionMethod::aic, SelectionMethod::aicc, SelectionMethod::bic, SelectionMethod::hqc,
                            SelectionMethod::ric, SelectionMethod::ricc, SelectionMethod::lcurve,
                            SelectionMethod::trim_lcurve, SelectionMethod::gcv})
    CHECK(parse_selection(to_string(m)) == m);
  CHECK_THROWS_AS(parse_selection("nope"), InvalidArgument);
}
