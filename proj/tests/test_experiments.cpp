#include <cmath>

#include "covshift/error.hpp"
#include "covshift/experiments.hpp"
#include "covshift/parallel.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace covshift;
using covshift::testing::ols_slope;

namespace {

// Light settings that keep the smoke benchmark fast.
BenchConfig small_bench_config(std::uint64_t seed) {
  BenchConfig config;
  config.simulations = 3;
  config.noise_target_width = 12;
  config.max_rows = 700;
  config.seed = seed;
  config.selection.max_features = 6;
  config.selection.gmm.max_components = 6;
  config.selection.gmm.fit.restarts = 1;
  config.selection.gmm.fit.max_iter = 60;
  config.solver.max_iter = 400;
  return config;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("analytic toy curves match the closed forms") {
  const auto rows = analytic_toy_curves({1.0, 0.5, -0.5}, {4, 10});
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].d2 == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(rows[0].ess_star == doctest::Approx(0.0183156).epsilon(1e-5));
  CHECK(rows[3].d2 == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(rows[3].ess_star == doctest::Approx(0.0820850).epsilon(1e-6));
  // lambda and -lambda give identical curves
  CHECK(rows[2].d2 == rows[4].d2);
  CHECK(rows[3].ess_star == rows[5].ess_star);
}

TEST_CASE("gaussian_shift_pair honors the generating law") {
  Rng rng(141);
  const ShiftPair zero = gaussian_shift_pair(3, 0.0, 200, rng);
  CHECK((zero.true_train_weights.values.array() == 1.0).all());

  Rng rng2(142);
  const ShiftPair pair = gaussian_shift_pair(2, 0.4, 20000, rng2);
  CHECK(std::abs(ols_slope(pair.test.features.col(0), *pair.test.labels) - 100.0) <=
        1.0);
  CHECK(std::abs(pair.test.features.col(0).mean() - 0.4) <= 0.04);
  CHECK(std::abs(pair.train.features.col(0).mean()) <= 0.04);
}

TEST_CASE("run_toy aggregates over replications") {
  ToyConfig config;
  config.lambdas = {0.0};
  config.dims = {1, 4};
  config.n_per_set = 4000;
  config.replications = 2;
  config.seed = 5;
  const ToyReport report = run_toy(config);
  REQUIRE(report.rows.size() == 2);
  // no shift: RMSE sits at the label-noise floor for every d
  CHECK(report.rows[1].mean_rmse ==
        doctest::Approx(report.rows[0].mean_rmse).epsilon(0.10));
  CHECK(report.rows[0].mean_rmse > 0.9);

  ToyConfig single = config;
  single.replications = 1;
  const ToyReport one = run_toy(single);
  CHECK(one.rows[0].std_rmse == 0.0);
}

TEST_CASE("run_toy is reproducible and thread-count independent") {
  ToyConfig config;
  config.lambdas = {0.25};
  config.dims = {1, 2};
  config.n_per_set = 2000;
  config.replications = 3;
  config.seed = 11;
  set_threads(1);
  const ToyReport a = run_toy(config);
  set_threads(2);
  const ToyReport b = run_toy(config);
  set_threads(0);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean_rmse == b.rows[i].mean_rmse);
    CHECK(a.rows[i].std_rmse == b.rows[i].std_rmse);
  }
}

TEST_CASE("friedman generator moments") {
  Rng rng(143);
  const Dataset ds = generate_friedman(20000, rng);
  CHECK(ds.cols() == 10);
  CHECK(ds.features.minCoeff() >= 0.0);
  CHECK(ds.features.maxCoeff() <= 1.0);
  CHECK(std::abs(ols_slope(ds.features.col(3), *ds.labels) - 10.0) <= 0.5);
  const double mean = ds.labels->mean();
  const double var = (ds.labels->array() - mean).square().sum() / 20000.0;
  CHECK(std::abs(var - 25.0) <= 3.0);
}

TEST_CASE("benchmark smoke run keeps its per-simulation contracts") {
  Rng data_rng(144);
  const Dataset ds = generate_friedman(700, data_rng);
  const BenchConfig config = small_bench_config(17);
  const BenchReport report = run_benchmark(ds, config, TreeTask::regression);

  REQUIRE(report.simulations.size() == 3);
  CHECK(report.completed + report.skipped == 3);
  CHECK(report.completed >= 1);
  for (const SimulationRecord& rec : report.simulations) {
    if (rec.skipped) continue;
    CHECK(rec.rel_error[0] == 1.0);
    CHECK(rec.shift_ess < config.ess_target);
    CHECK(rec.selected_features >= 1);
    CHECK(rec.selected_features <= config.selection.max_features);
    CHECK(rec.train_rows + rec.test_rows == 700);
    for (int s = 0; s < kScenarios; ++s) {
      CHECK(rec.error[static_cast<std::size_t>(s)] >= 0.0);
      CHECK(std::isfinite(rec.rel_error[static_cast<std::size_t>(s)]));
    }
  }
}

TEST_CASE("benchmark reports are bit-identical across reruns and thread counts") {
  Rng data_rng(145);
  const Dataset ds = generate_friedman(600, data_rng);
  BenchConfig config = small_bench_config(23);
  config.simulations = 2;

  set_threads(2);
  const std::string a = run_benchmark(ds, config, TreeTask::regression)
                            .report()
                            .document.dump();
  set_threads(1);
  const std::string b = run_benchmark(ds, config, TreeTask::regression)
                            .report()
                            .document.dump();
  set_threads(0);
  CHECK(a == b);
}

TEST_CASE("classification benchmark binarizes labels at the median") {
  Rng data_rng(146);
  const Dataset ds = generate_friedman(600, data_rng);
  BenchConfig config = small_bench_config(29);
  config.simulations = 2;
  const BenchReport report = run_benchmark(ds, config, TreeTask::classification);
  CHECK(report.completed + report.skipped == 2);
  for (const SimulationRecord& rec : report.simulations) {
    if (rec.skipped) continue;
    for (int s = 0; s < kScenarios; ++s) {
      CHECK(rec.error[static_cast<std::size_t>(s)] <= 1.0);  // error rates
    }
  }
}

TEST_CASE("run_benchmark validates inputs") {
  Rng rng(147);
  Dataset unlabeled;
  unlabeled.features = covshift::testing::random_matrix(100, 2, rng);
  CHECK_THROWS_AS(run_benchmark(unlabeled, {}, TreeTask::regression), ValidationError);

  Dataset ds = generate_friedman(100, rng);
  BenchConfig bad;
  bad.noise_target_width = 5;  // below the dataset width
  CHECK_THROWS_AS(run_benchmark(ds, bad, TreeTask::regression), ValidationError);
}

}  // TEST_SUITE
