#pragma once

#include <Eigen/Core>

#include "covshift/dataset.hpp"
#include "covshift/logistic.hpp"
#include "covshift/rng.hpp"
#include "covshift/weights.hpp"

namespace covshift {

// Density-ratio model built by probabilistic classification: source rows
// labeled 0, target rows labeled 1, tuned L1 logistic on the re-standardized
// quadratic expansion. prior_ratio = n_source / n_target enters the odds
// conversion.
struct RatioModel {
  LogisticModel logistic;
  ExpansionSpec expansion;
  ScalerParams expansion_scaler;
  double prior_ratio = 1.0;
};

RatioModel fit_density_ratio(const Eigen::MatrixXd& source_features,
                             const Eigen::MatrixXd& target_features, Rng& rng,
                             const LogisticSolverConfig& config = {},
                             double* holdout_log_loss = nullptr);

// w(x) = prior_ratio * p(target|x) / (1 - p(target|x)), probabilities
// clipped to [1e-6, 1 - 1e-6] first so every weight is finite and positive.
WeightVector predict_weights(const RatioModel& model, const Eigen::MatrixXd& features);

}  // namespace covshift
