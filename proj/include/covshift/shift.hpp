#pragma once

#include <Eigen/Core>
#include <vector>

#include "covshift/rng.hpp"
#include "covshift/weights.hpp"

namespace covshift {

// Result of a shift injection: probit allocation scores along a random
// direction, the train/test split drawn from them, and the implied true
// importance weights (1 - s) / s on the training rows.
struct ShiftAssignment {
  Eigen::VectorXd direction;       // length d, entries in [-1, 1]
  double sigma = 0.0;              // probit scale, > 0
  Eigen::VectorXd scores;          // length n, strictly inside (0, 1)
  std::vector<bool> is_train;      // length n
  WeightVector true_weights_train; // aligned with the train rows in order
};

// Standard normal CDF via erfc; absolute accuracy ~1e-15.
double std_normal_cdf(double x);

// i.i.d. Uniform[-1, 1] entries.
Eigen::VectorXd sample_direction(int d, Rng& rng);

// s_i = Phi((proj_i - median(proj)) / sigma), lower median, clipped into
// [1e-12, 1 - 1e-12].
Eigen::VectorXd compute_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& direction,
                               double sigma);

// Row i joins the training side with probability scores[i], independently.
std::vector<bool> allocate(const Eigen::VectorXd& scores, Rng& rng);

// Elementwise (1 - s) / s.
WeightVector true_weights(const Eigen::VectorXd& scores_on_train_rows);

struct CalibrationConfig {
  double ess_target = 0.01;
  int max_halvings = 60;
  int min_side_rows = 10;
};

// Starts at sigma0 = sample stddev of the projections and halves sigma,
// redrawing the allocation from a per-trial substream, until the empirical
// ESS of the train-side true weights is below the target and both sides
// hold at least min_side_rows rows. Throws CalibrationError when the
// target is unreachable.
ShiftAssignment calibrate_sigma(const Eigen::MatrixXd& X, const Eigen::VectorXd& direction,
                                Rng& rng, const CalibrationConfig& config = {});

}  // namespace covshift
