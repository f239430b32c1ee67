#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "covshift/gmm.hpp"
#include "covshift/rng.hpp"
#include "covshift/tree.hpp"

namespace covshift {

struct MiConfig {
  double improvement_threshold = 0.01;  // relative to the previous level
  int max_features = 15;
  ComponentSelectConfig gmm;
};

enum class StopReason { relative_improvement, max_features, exhausted };

std::string to_string(StopReason reason);

struct SelectionResult {
  std::vector<int> selected;          // forward: inclusion order;
                                      // backward: surviving set, ascending
  std::vector<double> mi_trajectory;  // the estimates the stopping rule saw
  StopReason stop_reason = StopReason::exhausted;
};

// Plug-in estimate from a joint GMM over [X_sub | y] with holdout-selected
// component count; marginals come from the same fit. Natural log (nats);
// may be slightly negative.
double estimate_mi_regression(const Eigen::MatrixXd& X_sub, const Eigen::VectorXd& y,
                              Rng& rng, const MiConfig& config = {});

// Per-class GMMs with empirical priors; every class needs >= 30 rows.
double estimate_mi_classification(const Eigen::MatrixXd& X_sub, const Eigen::VectorXd& y,
                                  Rng& rng, const MiConfig& config = {});

double estimate_mi(const Eigen::MatrixXd& X_sub, const Eigen::VectorXd& y, TreeTask task,
                   Rng& rng, const MiConfig& config = {});

// Greedy inclusion of the feature maximizing the estimate; stops when the
// marginal improvement falls under threshold * previous level (or is <= 0),
// at max_features, or when features run out. The first feature is always
// kept. Candidate GMM seeds derive from (rng seed, sorted subset), so
// evaluation order and scheduling cannot change the result.
SelectionResult forward_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               TreeTask task, const MiConfig& config, Rng& rng);

// Starts from all features and repeatedly drops the one whose removal
// costs the least, until any removal would drop the estimate by at least
// threshold * current level, or one feature remains. mi_trajectory holds
// the accepted estimates from the full set to the final set.
SelectionResult backward_eliminate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   TreeTask task, const MiConfig& config, Rng& rng);

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols);

}  // namespace covshift
