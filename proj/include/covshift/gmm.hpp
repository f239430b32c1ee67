#pragma once

#include <Eigen/Core>
#include <vector>

#include "covshift/rng.hpp"

namespace covshift {

// k-component Gaussian mixture with full covariances.
struct GaussianMixture {
  Eigen::VectorXd weights;                   // length k, sums to 1
  std::vector<Eigen::VectorXd> means;        // k vectors of length q
  std::vector<Eigen::MatrixXd> covariances;  // k SPD matrices, q x q

  int components() const { return static_cast<int>(weights.size()); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  void validate() const;
};

struct GmmConfig {
  int max_iter = 200;
  double rel_tol = 1e-5;   // on relative log-likelihood improvement
  double ridge = 1e-6;     // added to every M-step covariance diagonal
  int restarts = 3;        // farthest-point seedings; best final LL wins
};

struct GmmFitInfo {
  std::vector<double> log_likelihood;  // per iteration, winning restart
  bool converged = false;
};

// EM from farthest-point seeding. Deterministic given the rng seed.
GaussianMixture fit_gmm(const Eigen::MatrixXd& X, int k, Rng& rng,
                        const GmmConfig& config = {}, GmmFitInfo* info = nullptr);

double log_density(const GaussianMixture& g, const Eigen::VectorXd& x);

// One value per row of X; rows evaluated in parallel.
Eigen::VectorXd log_density_batch(const GaussianMixture& g, const Eigen::MatrixXd& X);

// Restriction to a coordinate subset (order respected); weights unchanged.
GaussianMixture marginalize(const GaussianMixture& g, const std::vector<int>& coords);

struct ComponentSelectConfig {
  int max_components = 15;
  GmmConfig fit;
};

// Even random split, k = 1..max fitted on one half, holdout mean
// log-likelihood picks k; the smallest k within one standard error of the
// maximum wins (holdout means that close are noise). Winner refit on all
// rows.
GaussianMixture select_components(const Eigen::MatrixXd& X, Rng& rng,
                                  const ComponentSelectConfig& config = {},
                                  int* chosen_k = nullptr);

}  // namespace covshift
