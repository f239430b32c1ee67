#include "covshift/ratio.hpp"

#include <algorithm>
#include <cmath>

#include "covshift/error.hpp"

namespace covshift {

RatioModel fit_density_ratio(const Eigen::MatrixXd& source_features,
                             const Eigen::MatrixXd& target_features, Rng& rng,
                             const LogisticSolverConfig& config,
                             double* holdout_log_loss) {
  const Eigen::Index ns = source_features.rows();
  const Eigen::Index nt = target_features.rows();
  if (ns < 1 || nt < 1) throw ValidationError("fit_density_ratio: empty input");
  if (source_features.cols() != target_features.cols()) {
    throw ValidationError("fit_density_ratio: width mismatch");
  }

  Eigen::MatrixXd stacked(ns + nt, source_features.cols());
  stacked.topRows(ns) = source_features;
  stacked.bottomRows(nt) = target_features;
  Eigen::VectorXd labels(ns + nt);
  labels.head(ns).setZero();
  labels.tail(nt).setOnes();

  RatioModel model;
  model.expansion = ExpansionSpec{};
  Eigen::MatrixXd expanded = expand_quadratic(stacked, model.expansion);
  model.expansion_scaler = fit_scaler(expanded);
  expanded = apply_scaler(expanded, model.expansion_scaler);

  LogisticTuneResult tuned = tune_l1_logistic(expanded, labels, rng, config);
  if (holdout_log_loss) *holdout_log_loss = tuned.holdout_log_loss;
  model.logistic = std::move(tuned.model);
  model.prior_ratio = static_cast<double>(ns) / static_cast<double>(nt);
  return model;
}

WeightVector predict_weights(const RatioModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd expanded =
      apply_scaler(expand_quadratic(features, model.expansion), model.expansion_scaler);
  const Eigen::VectorXd probs = predict_proba(model.logistic, expanded);

  WeightVector weights;
  weights.values.resize(probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-6, 1.0 - 1e-6);
    weights.values[i] = model.prior_ratio * p / (1.0 - p);
  }
  return weights;
}

}  // namespace covshift
