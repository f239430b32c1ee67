#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "covshift/dataset.hpp"
#include "covshift/logistic.hpp"
#include "covshift/mutual_info.hpp"
#include "covshift/report.hpp"
#include "covshift/rng.hpp"
#include "covshift/tree.hpp"
#include "covshift/weights.hpp"

namespace covshift {

struct ToyConfig {
  std::vector<double> lambdas{0.25};
  std::vector<int> dims{1, 2, 4, 8, 16};
  int n_per_set = 20000;
  int replications = 10;
  int min_samples_leaf = 10;
  std::uint64_t seed = 0;
};

struct ToyRow {
  double lambda = 0.0;
  int d = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
};

struct ToyReport {
  ToyConfig config;
  std::vector<ToyRow> rows;

  Report report() const;
};

struct AnalyticRow {
  double lambda = 0.0;
  int d = 0;
  double d2 = 0.0;
  double ess_star = 0.0;
};

// Exact D2 = d * lambda^2 and ESS* = exp(-d * lambda^2) per (lambda, d).
std::vector<AnalyticRow> analytic_toy_curves(const std::vector<double>& lambdas,
                                             const std::vector<int>& dims);

struct ShiftPair {
  Dataset train;  // features ~ N(0, I_d)
  Dataset test;   // features ~ N(lambda * 1, I_d)
  WeightVector true_train_weights;
};

// Labels are y = 100 * x_1 + eps on both sides; true weights on train rows
// are the closed-form ratio exp(lambda * sum_j x_j - d * lambda^2 / 2).
ShiftPair gaussian_shift_pair(int d, double lambda, int n, Rng& rng);

// Weighted-tree deterioration curves: per (lambda, d) the mean and stddev
// of test RMSE over replications, trees trained with true weights.
ToyReport run_toy(const ToyConfig& config);

// 10 Uniform[0,1] features; y = 10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 +
// 10 x4 + 5 x5 + N(0, 1).
Dataset generate_friedman(int n, Rng& rng);

struct BenchConfig {
  int simulations = 20;
  double ess_target = 0.01;
  int noise_target_width = 32;
  int max_rows = 8000;
  double ratio_train_fraction = 0.8;  // share of the test set the ratio model sees
  int direction_resamples = 20;
  MiConfig selection;
  LogisticSolverConfig solver;
  std::uint64_t seed = 0;
};

// Scenario order: 0 unweighted, 1 true weights, 2 estimated weights,
// 3 selected features + estimated weights.
inline constexpr int kScenarios = 4;
extern const std::array<std::string, kScenarios> kScenarioNames;

struct SimulationRecord {
  int index = 0;
  bool skipped = false;
  std::string skip_reason;
  double sigma = 0.0;
  double shift_ess = 0.0;  // ESS of true weights at the accepted sigma
  int train_rows = 0;
  int test_rows = 0;
  int eval_rows = 0;
  int selected_features = 0;
  std::array<double, kScenarios> error{};
  std::array<double, kScenarios> rel_error{};
  std::array<double, kScenarios> ess{};  // of the training weights used
};

struct ScenarioAggregate {
  double mean_rel_error = 0.0;
  double std_rel_error = 0.0;
};

struct BenchReport {
  TreeTask task = TreeTask::regression;
  std::vector<SimulationRecord> simulations;
  std::array<ScenarioAggregate, kScenarios> aggregate{};
  int completed = 0;
  int skipped = 0;
  int ess_majority_count = 0;  // sims where scenario-3 ESS >= scenario-2 ESS
  std::uint64_t seed = 0;

  Report report() const;
};

// The four-scenario shift-injection study on one labeled dataset.
BenchReport run_benchmark(const Dataset& ds, const BenchConfig& config, TreeTask task);

}  // namespace covshift
