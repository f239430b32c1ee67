#include <cmath>

#include "covshift/error.hpp"
#include "covshift/dataset.hpp"
#include "covshift/shift.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace covshift;
using covshift::testing::random_matrix;

TEST_SUITE("shift") {

TEST_CASE("standard normal CDF") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  for (double x : {0.5, 1.0, 2.0, 5.0}) {
    CHECK(std::abs(std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))) <= 1e-12);
  }
  CHECK(std::abs(std_normal_cdf(1.959964) - 0.975) <= 1e-6);
  CHECK(std::abs(std_normal_cdf(-1.2815515655446004) - 0.1) <= 1e-10);
}

TEST_CASE("sample_direction draws Uniform[-1,1] entries") {
  Rng rng(121);
  const Eigen::VectorXd big = sample_direction(10000, rng);
  CHECK(big.minCoeff() >= -1.0);
  CHECK(big.maxCoeff() <= 1.0);
  CHECK(std::abs(big.mean()) <= 0.03);

  Rng a(7), b(7);
  CHECK(sample_direction(16, a) == sample_direction(16, b));
  CHECK_THROWS_AS(sample_direction(0, rng), ValidationError);
}

TEST_CASE("compute_scores centers at the median and clips") {
  Rng rng(122);
  const Eigen::MatrixXd X = random_matrix(101, 3, rng);
  Eigen::VectorXd dir(3);
  dir << 0.5, -0.2, 0.8;
  const Eigen::VectorXd scores = compute_scores(X, dir, 1.0);

  const Eigen::VectorXd proj = X * dir;
  const double med = lower_median(proj);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (proj[i] == med) CHECK(scores[i] == 0.5);
    CHECK(scores[i] > 0.0);
    CHECK(scores[i] < 1.0);
  }

  const Eigen::VectorXd flat = compute_scores(X, dir, 1e9);
  CHECK((flat.array() - 0.5).abs().maxCoeff() <= 1e-6);

  // monotone in the projection
  std::vector<std::pair<double, double>> pairs;
  for (Eigen::Index i = 0; i < X.rows(); ++i) pairs.push_back({proj[i], scores[i]});
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    CHECK(pairs[i].second >= pairs[i - 1].second);
  }

  CHECK_THROWS_AS(compute_scores(X, Eigen::VectorXd::Zero(3), 1.0), ValidationError);
  CHECK_THROWS_AS(compute_scores(X, dir, 0.0), ValidationError);
}

TEST_CASE("allocate follows the scores") {
  Rng rng(123);
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(10000, 0.5);
  const std::vector<bool> mask = allocate(half, rng);
  int train = 0;
  for (bool b : mask) train += b ? 1 : 0;
  CHECK(std::abs(train / 10000.0 - 0.5) <= 4.0 / std::sqrt(10000.0));

  const Eigen::VectorXd sure = Eigen::VectorXd::Constant(1000, 1.0 - 1e-12);
  Rng rng2(124);
  const std::vector<bool> all_train = allocate(sure, rng2);
  for (bool b : all_train) CHECK(b);

  Rng a(9), b(9);
  CHECK(allocate(half, a) == allocate(half, b));
}

TEST_CASE("true weights are the odds of staying out of training") {
  Eigen::VectorXd s(3);
  s << 0.5, 0.8, 0.2;
  const WeightVector w = true_weights(s);
  CHECK(w.values[0] == doctest::Approx(1.0));
  CHECK(w.values[1] == doctest::Approx(0.25));
  CHECK(w.values[2] == doctest::Approx(4.0));

  Eigen::VectorXd bad(1);
  bad << 1.0;
  CHECK_THROWS_AS(true_weights(bad), ValidationError);
}

TEST_CASE("calibrate_sigma reaches the target and keeps its invariants") {
  Rng data_rng(125);
  const Eigen::MatrixXd X = random_matrix(2000, 5, data_rng);
  Rng dir_rng(126);
  const Eigen::VectorXd direction = sample_direction(5, dir_rng);
  Rng cal_rng(127);
  const ShiftAssignment a = calibrate_sigma(X, direction, cal_rng);

  CHECK(a.sigma > 0.0);
  CHECK(empirical_ess(a.true_weights_train) < 0.01);
  REQUIRE(a.is_train.size() == 2000);
  REQUIRE(a.scores.size() == 2000);

  // true weights align with the train rows, in order
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < 2000; ++i) {
    if (a.is_train[static_cast<std::size_t>(i)]) {
      const double s = a.scores[i];
      CHECK(a.true_weights_train.values[t] == (1.0 - s) / s);
      ++t;
    }
  }
  CHECK(t == a.true_weights_train.values.size());

  const double train_fraction = static_cast<double>(t) / 2000.0;
  CHECK(train_fraction >= 0.3);
  CHECK(train_fraction <= 0.7);

  // bit-for-bit reproducibility
  Rng cal_rng2(127);
  const ShiftAssignment b = calibrate_sigma(X, direction, cal_rng2);
  CHECK(a.sigma == b.sigma);
  CHECK(a.scores == b.scores);
  CHECK(a.is_train == b.is_train);
  CHECK(a.true_weights_train.values == b.true_weights_train.values);
}

TEST_CASE("a trivial target returns immediately at sigma0") {
  Rng data_rng(128);
  const Eigen::MatrixXd X = random_matrix(500, 3, data_rng);
  Eigen::VectorXd direction(3);
  direction << 1.0, 0.0, 0.0;
  Rng cal_rng(129);
  CalibrationConfig config;
  config.ess_target = 1.0;
  const ShiftAssignment a = calibrate_sigma(X, direction, cal_rng, config);

  const Eigen::VectorXd proj = X * direction;
  const double mean = proj.mean();
  const double sigma0 = std::sqrt((proj.array() - mean).square().sum() / 499.0);
  CHECK(a.sigma == sigma0);
}

TEST_CASE("sharper probit gates lower the ESS") {
  int monotone = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng data_rng(1500 + static_cast<std::uint64_t>(seed));
    const Eigen::MatrixXd X = random_matrix(1000, 4, data_rng);
    Rng dir_rng(1600 + static_cast<std::uint64_t>(seed));
    const Eigen::VectorXd direction = sample_direction(4, dir_rng);
    const Eigen::VectorXd proj = X * direction;
    const double sigma0 =
        std::sqrt((proj.array() - proj.mean()).square().sum() / 999.0);

    auto ess_at = [&](double sigma, std::uint64_t tag) {
      const Eigen::VectorXd scores = compute_scores(X, direction, sigma);
      Rng alloc_rng(1700 + tag);
      const std::vector<bool> mask = allocate(scores, alloc_rng);
      std::vector<double> train_scores;
      for (Eigen::Index i = 0; i < 1000; ++i) {
        if (mask[static_cast<std::size_t>(i)]) train_scores.push_back(scores[i]);
      }
      Eigen::VectorXd ts =
          Eigen::Map<Eigen::VectorXd>(train_scores.data(), train_scores.size());
      return empirical_ess(true_weights(ts));
    };
    if (ess_at(sigma0, static_cast<std::uint64_t>(seed)) >=
        ess_at(sigma0 / 64.0, static_cast<std::uint64_t>(seed))) {
      ++monotone;
    }
  }
  CHECK(monotone >= 19);
}

TEST_CASE("calibration failure raises and small inputs are rejected") {
  Rng rng(130);
  const Eigen::MatrixXd tiny = random_matrix(100, 2, rng);
  Eigen::VectorXd dir(2);
  dir << 1.0, 0.0;
  CHECK_THROWS_AS(calibrate_sigma(tiny, dir, rng), ValidationError);

  // constant projections cannot be calibrated
  Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(300, 2);
  constant.col(1) = Eigen::VectorXd::Random(300);
  CHECK_THROWS_AS(calibrate_sigma(constant, dir, rng), CalibrationError);
}

}  // TEST_SUITE
