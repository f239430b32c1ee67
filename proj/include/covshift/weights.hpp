#pragma once

#include <Eigen/Core>

namespace covshift {

// Per-row nonnegative importance weights. Valid when every entry is finite
// and >= 0 and at least one entry is > 0.
struct WeightVector {
  Eigen::VectorXd values;

  void validate() const;
};

// (sum w)^2 / (n * sum w^2), in (0, 1].
double empirical_ess(const WeightVector& w);

// Rescale so the weights sum to 1.
WeightVector normalize_weights(const WeightVector& w);

// Weighted mean of values with weights normalized to sum 1.
double self_normalized_estimate(const Eigen::VectorXd& values, const WeightVector& w);

}  // namespace covshift
