#pragma once

#include <Eigen/Core>
#include <functional>

namespace covshift {

// Two Gaussians sharing one SPD covariance: P = N(mu_p, cov), Q = N(mu_q, cov).
struct GaussianPairSpec {
  Eigen::VectorXd mu_p;
  Eigen::VectorXd mu_q;
  Eigen::MatrixXd covariance;
};

// Closed-form order-2 Renyi divergence for an equal-covariance Gaussian
// pair: delta' * cov^{-1} * delta. Reduces to d*lambda^2 for cov = I and
// delta = lambda * ones. Natural log scale.
double gaussian_d2(const GaussianPairSpec& spec);

// exp(-d2); the almost-sure limit of the empirical ESS under true-ratio
// weights.
double population_ess(double d2);

// Log density evaluator; must be safe to call from multiple threads.
using LogDensityFn = std::function<double(Eigen::Ref<const Eigen::VectorXd>)>;

// Monte Carlo D2 from samples drawn from the target P:
// log( mean_j exp(log_p(x_j) - log_q(x_j)) ), max-shifted. Throws
// NumericError naming the sample index when q has no support at a sample.
double mc_d2(const LogDensityFn& log_p, const LogDensityFn& log_q,
             const Eigen::MatrixXd& samples_from_target);

struct BoundParams {
  double ess_star = 1.0;  // in (0, 1]
  long pdim = 1;          // pseudo-dimension p >= 1
  long n = 1;             // sample size, p <= n
  double delta = 0.05;    // in (0, 1)
};

// 2^(5/4)/sqrt(ess_star) * [ (p*ln(2 e n / p) + ln(4/delta)) / n ]^(3/8).
double generalization_bound(const BoundParams& b);

}  // namespace covshift
