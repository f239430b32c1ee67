#pragma once

#include <Eigen/Core>
#include <vector>

#include "covshift/rng.hpp"

namespace covshift {

// Binary logistic model with L1-penalized coefficients and an unpenalized
// intercept. reg_c is the inverse regularization strength: the objective is
// mean log loss + ||coefficients||_1 / (n * reg_c).
struct LogisticModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double reg_c = 1.0;
};

// Degree-2 polynomial expansion; output columns are
// [x_1..x_d, x_1^2, x_1 x_2, ..., x_d^2] (pairs i <= j in lexicographic
// order). The intercept stays in the model, so no bias column.
struct ExpansionSpec {
  int degree = 2;
  bool include_interactions = true;
  bool include_bias_column = false;
};

struct LogisticSolverConfig {
  int max_iter = 2000;
  double rel_tol = 1e-8;
};

Eigen::MatrixXd expand_quadratic(const Eigen::MatrixXd& features,
                                 const ExpansionSpec& spec = {});

Eigen::Index expanded_width(Eigen::Index d, const ExpansionSpec& spec = {});

// Accelerated proximal gradient (soft-threshold step) with backtracking;
// momentum restarts whenever an accelerated step would raise the objective,
// so accepted iterates are non-increasing in objective. Deterministic.
LogisticModel fit_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double reg_c, const LogisticSolverConfig& config = {},
                              std::vector<double>* objective_trace = nullptr);

struct LogisticTuneResult {
  LogisticModel model;
  double holdout_log_loss = 0.0;  // at the winning C
  std::vector<double> grid;       // the C values tried
};

// 50/50 random split, 10 log-spaced C values in [1e-4, 5], holdout log
// loss selection (ties to smaller C), refit on all rows.
LogisticTuneResult tune_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    Rng& rng, const LogisticSolverConfig& config = {});

Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& X);

// Mean log loss of predicted probabilities against binary labels.
double log_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& y);

// Gradient of the smooth part (mean log loss) at (coefficients, intercept);
// exposed for optimality checks. Returns [d_coefficients; d_intercept].
Eigen::VectorXd logistic_smooth_gradient(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& coefficients,
                                         double intercept);

}  // namespace covshift
