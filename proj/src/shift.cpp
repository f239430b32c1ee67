#include "covshift/shift.hpp"

#include <algorithm>
#include <cmath>

#include "covshift/dataset.hpp"
#include "covshift/error.hpp"

namespace covshift {

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

Eigen::VectorXd sample_direction(int d, Rng& rng) {
  if (d < 1) throw ValidationError("sample_direction: need d >= 1");
  Eigen::VectorXd u(d);
  for (int j = 0; j < d; ++j) u[j] = rng.uniform(-1.0, 1.0);
  return u;
}

Eigen::VectorXd compute_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& direction,
                               double sigma) {
  if (direction.size() != X.cols()) {
    throw ValidationError("compute_scores: direction length mismatch");
  }
  if (!(sigma > 0.0)) throw ValidationError("compute_scores: sigma must be > 0");
  if ((direction.array() == 0.0).all()) {
    throw ValidationError("compute_scores: zero direction vector");
  }

  const Eigen::VectorXd proj = X * direction;
  const double med = lower_median(proj);
  Eigen::VectorXd scores(proj.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    scores[i] = std::clamp(std_normal_cdf((proj[i] - med) / sigma), 1e-12, 1.0 - 1e-12);
  }
  return scores;
}

std::vector<bool> allocate(const Eigen::VectorXd& scores, Rng& rng) {
  std::vector<bool> mask(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    mask[static_cast<std::size_t>(i)] = rng.bernoulli(scores[i]);
  }
  return mask;
}

WeightVector true_weights(const Eigen::VectorXd& scores_on_train_rows) {
  WeightVector w;
  w.values.resize(scores_on_train_rows.size());
  for (Eigen::Index i = 0; i < scores_on_train_rows.size(); ++i) {
    const double s = scores_on_train_rows[i];
    if (!(s > 0.0 && s < 1.0)) {
      throw ValidationError("true_weights: scores must lie strictly in (0, 1)");
    }
    w.values[i] = (1.0 - s) / s;
  }
  w.validate();
  return w;
}

ShiftAssignment calibrate_sigma(const Eigen::MatrixXd& X, const Eigen::VectorXd& direction,
                                Rng& rng, const CalibrationConfig& config) {
  const Eigen::Index n = X.rows();
  if (n < 200) throw ValidationError("calibrate_sigma: need n >= 200");
  if (!(config.ess_target > 0.0)) {
    throw ValidationError("calibrate_sigma: ess_target must be > 0");
  }

  const Eigen::VectorXd proj = X * direction;
  const double mean = proj.mean();
  const double sigma0 = std::sqrt((proj.array() - mean).square().sum() /
                                  static_cast<double>(n - 1));
  if (!(sigma0 > 0.0)) {
    throw CalibrationError("calibrate_sigma: projections are constant");
  }

  for (int trial = 0; trial <= config.max_halvings; ++trial) {
    const double sigma = sigma0 / std::pow(2.0, trial);
    const Eigen::VectorXd scores = compute_scores(X, direction, sigma);
    Rng trial_rng = rng.child(static_cast<std::uint64_t>(trial));
    std::vector<bool> mask = allocate(scores, trial_rng);

    Eigen::Index n_train = 0;
    for (bool b : mask) n_train += b ? 1 : 0;
    const Eigen::Index n_test = n - n_train;
    if (n_train < config.min_side_rows || n_test < config.min_side_rows) continue;

    Eigen::VectorXd train_scores(n_train);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask[static_cast<std::size_t>(i)]) train_scores[t++] = scores[i];
    }
    WeightVector weights = true_weights(train_scores);
    if (empirical_ess(weights) < config.ess_target) {
      ShiftAssignment a;
      a.direction = direction;
      a.sigma = sigma;
      a.scores = scores;
      a.is_train = std::move(mask);
      a.true_weights_train = std::move(weights);
      return a;
    }
  }
  throw CalibrationError("calibrate_sigma: ESS target " + std::to_string(config.ess_target) +
                         " not reached within " + std::to_string(config.max_halvings) +
                         " halvings");
}

}  // namespace covshift
