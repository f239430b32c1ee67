#include "covshift/divergence.hpp"

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "covshift/error.hpp"
#include "covshift/kernels.hpp"

namespace covshift {

double gaussian_d2(const GaussianPairSpec& spec) {
  const Eigen::Index d = spec.mu_p.size();
  if (d < 1 || spec.mu_q.size() != d) {
    throw ValidationError("gaussian_d2: mean length mismatch");
  }
  if (spec.covariance.rows() != d || spec.covariance.cols() != d) {
    throw ValidationError("gaussian_d2: covariance shape mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("gaussian_d2: covariance is not SPD");
  }
  const Eigen::VectorXd delta = spec.mu_p - spec.mu_q;
  return delta.dot(llt.solve(delta));
}

double population_ess(double d2) {
  if (!std::isfinite(d2) || d2 < 0.0) {
    throw ValidationError("population_ess: d2 must be finite and >= 0");
  }
  return std::exp(-d2);
}

double mc_d2(const LogDensityFn& log_p, const LogDensityFn& log_q,
             const Eigen::MatrixXd& samples_from_target) {
  const Eigen::Index m = samples_from_target.rows();
  if (m < 1) throw ValidationError("mc_d2: need at least one sample");

  std::vector<double> lp(static_cast<std::size_t>(m)), lq(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd x = samples_from_target.row(j).transpose();
    lp[static_cast<std::size_t>(j)] = log_p(x);
    lq[static_cast<std::size_t>(j)] = log_q(x);
  }
  std::vector<double> log_ratio(static_cast<std::size_t>(m));
  for (std::size_t j = 0; j < log_ratio.size(); ++j) {
    if (std::isinf(lq[j]) && lq[j] < 0.0) {
      throw NumericError("mc_d2: source density is zero at sample " + std::to_string(j));
    }
    if (std::isnan(lp[j]) || std::isnan(lq[j])) {
      throw NumericError("mc_d2: non-finite log density at sample " + std::to_string(j));
    }
    log_ratio[j] = lp[j] - lq[j];
  }
  const double lse = kernels::log_sum_exp({log_ratio.data(), log_ratio.size()});
  return lse - std::log(static_cast<double>(m));
}

double generalization_bound(const BoundParams& b) {
  if (!(b.ess_star > 0.0 && b.ess_star <= 1.0)) {
    throw ValidationError("generalization_bound: ess_star must be in (0, 1]");
  }
  if (b.pdim < 1) throw ValidationError("generalization_bound: pdim must be >= 1");
  if (b.n < 1 || b.pdim > b.n) {
    throw ValidationError("generalization_bound: need 1 <= pdim <= n");
  }
  if (!(b.delta > 0.0 && b.delta < 1.0)) {
    throw ValidationError("generalization_bound: delta must be in (0, 1)");
  }
  const double p = static_cast<double>(b.pdim);
  const double n = static_cast<double>(b.n);
  const double inner =
      (p * std::log(2.0 * std::exp(1.0) * n / p) + std::log(4.0 / b.delta)) / n;
  return std::pow(2.0, 1.25) / std::sqrt(b.ess_star) * std::pow(inner, 0.375);
}

}  // namespace covshift
