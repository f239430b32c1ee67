#include "covshift/weights.hpp"

#include <cmath>
#include <span>

#include "covshift/error.hpp"
#include "covshift/kernels.hpp"

namespace covshift {

void WeightVector::validate() const {
  if (values.size() == 0) throw ValidationError("WeightVector: empty");
  bool any_positive = false;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("WeightVector: entries must be finite and >= 0");
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw ValidationError("WeightVector: all weights are zero");
}

double empirical_ess(const WeightVector& w) {
  w.validate();
  // Dividing by the max keeps constant vectors exactly at ESS 1 and stops
  // sum-of-squares overflow for extreme weights; ESS is scale invariant.
  const Eigen::VectorXd scaled = w.values / w.values.maxCoeff();
  double s1 = 0.0, s2 = 0.0;
  kernels::ess_sums({scaled.data(), static_cast<std::size_t>(scaled.size())}, s1, s2);
  return (s1 * s1) / (static_cast<double>(scaled.size()) * s2);
}

WeightVector normalize_weights(const WeightVector& w) {
  w.validate();
  const double total =
      kernels::sum({w.values.data(), static_cast<std::size_t>(w.values.size())});
  return WeightVector{w.values / total};
}

double self_normalized_estimate(const Eigen::VectorXd& values, const WeightVector& w) {
  w.validate();
  if (values.size() != w.values.size()) {
    throw ValidationError("self_normalized_estimate: length mismatch");
  }
  const std::size_t n = static_cast<std::size_t>(values.size());
  const double total = kernels::sum({w.values.data(), n});
  const double weighted = kernels::dot({w.values.data(), n}, {values.data(), n});
  return weighted / total;
}

}  // namespace covshift
