#include <cmath>

#include "covshift/error.hpp"
#include "covshift/mutual_info.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace covshift;
using covshift::testing::random_matrix;
using covshift::testing::simpson;

namespace {

// Data with y = scale * x_0 + noise and d - 1 pure-noise columns.
void linear_instance(int n, int d, double scale, Rng& rng, Eigen::MatrixXd& X,
                     Eigen::VectorXd& y) {
  X = random_matrix(n, d, rng);
  y.resize(n);
  for (int i = 0; i < n; ++i) y[i] = scale * X(i, 0) + rng.normal();
}

}  // namespace

TEST_SUITE("mutual_info") {

TEST_CASE("independent label carries no information") {
  Rng rng(61);
  const Eigen::MatrixXd X = random_matrix(5000, 1, rng);
  Eigen::VectorXd y(5000);
  for (int i = 0; i < 5000; ++i) y[i] = rng.normal();
  Rng mi_rng(62);
  const double mi = estimate_mi_regression(X, y, mi_rng);
  CHECK(std::abs(mi) <= 0.03);
}

TEST_CASE("bivariate Gaussian estimate is close to the analytic value") {
  const double rho = 0.8;
  Rng rng(63);
  Eigen::MatrixXd X(5000, 1);
  Eigen::VectorXd y(5000);
  for (int i = 0; i < 5000; ++i) {
    X(i, 0) = rng.normal();
    y[i] = rho * X(i, 0) + std::sqrt(1.0 - rho * rho) * rng.normal();
  }
  Rng mi_rng(64);
  const double mi = estimate_mi_regression(X, y, mi_rng);
  CHECK(std::abs(mi - 0.5108256) <= 0.07);
}

TEST_CASE("deterministic dependence gives a large estimate") {
  Rng rng(65);
  Eigen::MatrixXd X = random_matrix(2000, 1, rng);
  Eigen::VectorXd y = X.col(0);
  Rng mi_rng(66);
  CHECK(estimate_mi_regression(X, y, mi_rng) > 2.0);
}

TEST_CASE("classification estimate against a quadrature oracle") {
  // Balanced classes at means -3 and 3, unit variance. The oracle value is
  // ln 2 - E_x[H(Y|x)], computed by quadrature.
  auto class_density = [](double x, double mu) {
    return std::exp(-0.5 * (x - mu) * (x - mu)) / std::sqrt(2.0 * M_PI);
  };
  auto integrand = [&](double x) {
    const double p0 = class_density(x, -3.0), p1 = class_density(x, 3.0);
    const double mix = 0.5 * (p0 + p1);
    double h = 0.0;
    for (double pc : {p0, p1}) {
      const double post = 0.5 * pc / mix;
      if (post > 0.0) h -= post * std::log(post);
    }
    return mix * h;
  };
  const double oracle = std::log(2.0) - simpson(integrand, -12.0, 12.0, 4000);
  CHECK(oracle == doctest::Approx(0.689297933).epsilon(1e-6));

  Rng rng(67);
  const int n = 5000;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1.0 : 0.0;
    X(i, 0) = rng.normal() + (y[i] > 0.5 ? 3.0 : -3.0);
  }
  Rng mi_rng(68);
  const double mi = estimate_mi_classification(X, y, mi_rng);
  CHECK(std::abs(mi - oracle) <= 0.05);
  CHECK(std::abs(mi - std::log(2.0)) <= 0.05);
}

TEST_CASE("classification estimate vanishes for an independent label") {
  Rng rng(69);
  const Eigen::MatrixXd X = random_matrix(5000, 1, rng);
  Eigen::VectorXd y(5000);
  for (int i = 0; i < 5000; ++i) y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  Rng mi_rng(70);
  CHECK(std::abs(estimate_mi_classification(X, y, mi_rng)) <= 0.03);
}

TEST_CASE("classification estimator rejects degenerate inputs") {
  Rng rng(71);
  const Eigen::MatrixXd X = random_matrix(100, 1, rng);
  const Eigen::VectorXd single = Eigen::VectorXd::Zero(100);
  Rng mi_rng(72);
  CHECK_THROWS_AS(estimate_mi_classification(X, single, mi_rng), ValidationError);
  Eigen::VectorXd tiny_class = Eigen::VectorXd::Zero(100);
  tiny_class.tail(10).setOnes();  // class 1 has fewer than 30 rows
  CHECK_THROWS_AS(estimate_mi_classification(X, tiny_class, mi_rng), ValidationError);
}

TEST_CASE("forward selection premier feature and stopping") {
  Rng rng(73);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  linear_instance(5000, 10, 100.0, rng, X, y);
  Rng sel_rng(74);
  const SelectionResult result =
      forward_select(X, y, TreeTask::regression, {}, sel_rng);
  REQUIRE_FALSE(result.selected.empty());
  CHECK(result.selected[0] == 0);
  CHECK(result.selected.size() <= 3);
  CHECK(result.stop_reason == StopReason::relative_improvement);
  CHECK(result.mi_trajectory.size() == result.selected.size());
}

TEST_CASE("forward selection with one feature exhausts") {
  Rng rng(75);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  linear_instance(600, 1, 2.0, rng, X, y);
  Rng sel_rng(76);
  const SelectionResult result =
      forward_select(X, y, TreeTask::regression, {}, sel_rng);
  CHECK(result.selected == std::vector<int>{0});
  CHECK(result.stop_reason == StopReason::exhausted);
}

TEST_CASE("forward selection honors max_features") {
  Rng rng(77);
  Eigen::MatrixXd X = random_matrix(800, 4, rng);
  Eigen::VectorXd y(800);
  for (int i = 0; i < 800; ++i) {
    y[i] = X(i, 0) + X(i, 1) + X(i, 2) + X(i, 3) + 0.05 * rng.normal();
  }
  MiConfig config;
  config.max_features = 2;
  Rng sel_rng(78);
  const SelectionResult result =
      forward_select(X, y, TreeTask::regression, config, sel_rng);
  CHECK(result.selected.size() == 2);
  CHECK(result.stop_reason == StopReason::max_features);
}

TEST_CASE("selection trajectory replays bit for bit") {
  Rng rng(79);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  linear_instance(1000, 4, 3.0, rng, X, y);
  Rng a(80), b(80);
  const SelectionResult ra = forward_select(X, y, TreeTask::regression, {}, a);
  const SelectionResult rb = forward_select(X, y, TreeTask::regression, {}, b);
  CHECK(ra.selected == rb.selected);
  REQUIRE(ra.mi_trajectory.size() == rb.mi_trajectory.size());
  for (std::size_t i = 0; i < ra.mi_trajectory.size(); ++i) {
    CHECK(ra.mi_trajectory[i] == rb.mi_trajectory[i]);
  }
}

TEST_CASE("estimates are symmetric under feature permutation") {
  Rng rng(81);
  Eigen::MatrixXd X(500, 2);
  Eigen::VectorXd y(500);
  for (int i = 0; i < 500; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal() * 2.0;
    y[i] = X(i, 0) - X(i, 1) + rng.normal();
  }
  Eigen::MatrixXd swapped(500, 2);
  swapped.col(0) = X.col(1);
  swapped.col(1) = X.col(0);
  Rng a(82), b(82);
  const double mi = estimate_mi_regression(X, y, a);
  const double mi_swapped = estimate_mi_regression(swapped, y, b);
  CHECK(std::abs(mi - mi_swapped) < 1e-9);
}

TEST_CASE("adding a feature does not lose information, up to estimator noise") {
  int ok = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(8300 + static_cast<std::uint64_t>(seed));
    Eigen::MatrixXd X(1200, 2);
    Eigen::VectorXd y(1200);
    for (int i = 0; i < 1200; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      y[i] = X(i, 0) + 0.5 * X(i, 1) + rng.normal();
    }
    Rng a(8400 + static_cast<std::uint64_t>(seed));
    Rng b(8500 + static_cast<std::uint64_t>(seed));
    const double both = estimate_mi_regression(X, y, a);
    const double first = estimate_mi_regression(X.leftCols(1), y, b);
    if (both >= first - 0.05) ++ok;
  }
  CHECK(ok == 10);
}

TEST_CASE("backward elimination keeps the informative feature") {
  int kept = 0;
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(8600 + static_cast<std::uint64_t>(seed));
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_instance(2000, 5, 100.0, rng, X, y);
    Rng sel_rng(8700 + static_cast<std::uint64_t>(seed));
    const SelectionResult result =
        backward_eliminate(X, y, TreeTask::regression, {}, sel_rng);
    bool has0 = false;
    for (int f : result.selected) has0 = has0 || f == 0;
    if (has0) ++kept;
    CHECK(result.mi_trajectory.size() == 5 - result.selected.size() + 1);
  }
  CHECK(kept == 5);
}

TEST_CASE("backward elimination terminates on pure noise") {
  Rng rng(88);
  const Eigen::MatrixXd X = random_matrix(600, 3, rng);
  Eigen::VectorXd y(600);
  for (int i = 0; i < 600; ++i) y[i] = rng.normal();
  Rng sel_rng(89);
  const SelectionResult result =
      backward_eliminate(X, y, TreeTask::regression, {}, sel_rng);
  CHECK_FALSE(result.selected.empty());
}

TEST_CASE("two features, one informative: backward keeps it") {
  int kept = 0;
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(9000 + static_cast<std::uint64_t>(seed));
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_instance(1500, 2, 50.0, rng, X, y);
    Rng sel_rng(9100 + static_cast<std::uint64_t>(seed));
    const SelectionResult result =
        backward_eliminate(X, y, TreeTask::regression, {}, sel_rng);
    bool has0 = false;
    for (int f : result.selected) has0 = has0 || f == 0;
    if (has0) ++kept;
  }
  CHECK(kept == 5);
}

TEST_CASE("estimator preconditions") {
  Rng rng(92);
  const Eigen::MatrixXd tiny = random_matrix(20, 1, rng);
  Eigen::VectorXd y = tiny.col(0);
  CHECK_THROWS_AS(estimate_mi_regression(tiny, y, rng), ValidationError);
  CHECK_THROWS_AS(forward_select(Eigen::MatrixXd(5, 0), y, TreeTask::regression, {}, rng),
                  ValidationError);
  CHECK_THROWS_AS(backward_eliminate(tiny, y, TreeTask::regression, {}, rng),
                  ValidationError);
}

}  // TEST_SUITE
