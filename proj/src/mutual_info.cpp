#include "covshift/mutual_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>

#include "covshift/error.hpp"
#include "covshift/kernels.hpp"

namespace covshift {
namespace {

double mean_of(const Eigen::VectorXd& v) {
  return kernels::sum({v.data(), static_cast<std::size_t>(v.size())}) /
         static_cast<double>(v.size());
}

// Evaluates candidate subsets in parallel with subset-derived seeds; the
// first exception (if any) is rethrown on the calling thread.
std::vector<double> evaluate_candidates(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, TreeTask task,
    const MiConfig& config, const Rng& rng,
    const std::vector<std::vector<int>>& subsets) {
  std::vector<double> out(subsets.size(),
                          -std::numeric_limits<double>::infinity());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(subsets.size()); ++c) {
    try {
      const std::vector<int>& subset = subsets[static_cast<std::size_t>(c)];
      Rng local = rng.child(subset_tag({subset.data(), subset.size()}));
      out[static_cast<std::size_t>(c)] =
          estimate_mi(select_columns(X, subset), y, task, local, config);
    } catch (...) {
#pragma omp critical(covshift_mi_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::relative_improvement:
      return "relative-improvement";
    case StopReason::max_features:
      return "max-features";
    case StopReason::exhausted:
      return "exhausted";
  }
  return "unknown";
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= X.cols()) {
      throw ValidationError("select_columns: index out of range");
    }
    out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  }
  return out;
}

double estimate_mi_regression(const Eigen::MatrixXd& X_sub, const Eigen::VectorXd& y,
                              Rng& rng, const MiConfig& config) {
  const Eigen::Index n = X_sub.rows();
  const Eigen::Index q = X_sub.cols();
  if (q < 1) throw ValidationError("estimate_mi_regression: need q >= 1");
  if (y.size() != n) throw ValidationError("estimate_mi_regression: length mismatch");
  if (n < 30) throw ValidationError("estimate_mi_regression: need n >= 30");

  Eigen::MatrixXd joint(n, q + 1);
  joint.leftCols(q) = X_sub;
  joint.col(q) = y;

  const GaussianMixture g = select_components(joint, rng, config.gmm);
  std::vector<int> x_coords(static_cast<std::size_t>(q));
  std::iota(x_coords.begin(), x_coords.end(), 0);
  const GaussianMixture gx = marginalize(g, x_coords);
  const GaussianMixture gy = marginalize(g, {static_cast<int>(q)});

  const Eigen::VectorXd log_joint = log_density_batch(g, joint);
  const Eigen::VectorXd log_x = log_density_batch(gx, X_sub);
  const Eigen::VectorXd log_y = log_density_batch(gy, y);
  return mean_of(log_joint - log_x - log_y);
}

double estimate_mi_classification(const Eigen::MatrixXd& X_sub, const Eigen::VectorXd& y,
                                  Rng& rng, const MiConfig& config) {
  const Eigen::Index n = X_sub.rows();
  const Eigen::Index q = X_sub.cols();
  if (q < 1) throw ValidationError("estimate_mi_classification: need q >= 1");
  if (y.size() != n) throw ValidationError("estimate_mi_classification: length mismatch");

  int num_classes = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] < 0.0 || y[i] != std::floor(y[i])) {
      throw ValidationError("estimate_mi_classification: labels must be class ids");
    }
    num_classes = std::max(num_classes, static_cast<int>(y[i]) + 1);
  }
  if (num_classes < 2) {
    throw ValidationError("estimate_mi_classification: need at least two classes");
  }

  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(num_classes));
  for (Eigen::Index i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(static_cast<int>(y[i]))].push_back(i);
  }
  for (int c = 0; c < num_classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < 30) {
      throw ValidationError("estimate_mi_classification: class " + std::to_string(c) +
                            " has fewer than 30 rows");
    }
  }

  // One conditional density model per class, evaluated on every row.
  Eigen::MatrixXd cond_log(n, num_classes);
  Eigen::VectorXd log_prior(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    const auto& rows = by_class[static_cast<std::size_t>(c)];
    Eigen::MatrixXd Xc(static_cast<Eigen::Index>(rows.size()), q);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Xc.row(static_cast<Eigen::Index>(r)) = X_sub.row(rows[r]);
    }
    Rng local = rng.child(static_cast<std::uint64_t>(c));
    const GaussianMixture g = select_components(Xc, local, config.gmm);
    cond_log.col(c) = log_density_batch(g, X_sub);
    log_prior[c] = std::log(static_cast<double>(rows.size()) / static_cast<double>(n));
  }

  Eigen::VectorXd terms(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < num_classes; ++c) m = std::max(m, log_prior[c] + cond_log(i, c));
    double acc = 0.0;
    for (int c = 0; c < num_classes; ++c) acc += std::exp(log_prior[c] + cond_log(i, c) - m);
    const double log_marginal = m + std::log(acc);
    terms[i] = cond_log(i, static_cast<int>(y[i])) - log_marginal;
  }
  return mean_of(terms);
}

double estimate_mi(const Eigen::MatrixXd& X_sub, const Eigen::VectorXd& y, TreeTask task,
                   Rng& rng, const MiConfig& config) {
  return task == TreeTask::regression
             ? estimate_mi_regression(X_sub, y, rng, config)
             : estimate_mi_classification(X_sub, y, rng, config);
}

SelectionResult forward_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               TreeTask task, const MiConfig& config, Rng& rng) {
  const int d = static_cast<int>(X.cols());
  if (d < 1) throw ValidationError("forward_select: need d >= 1");
  if (config.max_features < 1 || config.improvement_threshold <= 0.0) {
    throw ValidationError("forward_select: invalid config");
  }

  SelectionResult result;
  std::vector<int> remaining(static_cast<std::size_t>(d));
  std::iota(remaining.begin(), remaining.end(), 0);

  double current = 0.0;
  for (;;) {
    if (remaining.empty()) {
      result.stop_reason = StopReason::exhausted;
      break;
    }
    if (static_cast<int>(result.selected.size()) >= config.max_features) {
      result.stop_reason = StopReason::max_features;
      break;
    }

    std::vector<std::vector<int>> subsets;
    subsets.reserve(remaining.size());
    for (int f : remaining) {
      std::vector<int> s = result.selected;
      s.push_back(f);
      std::sort(s.begin(), s.end());
      subsets.push_back(std::move(s));
    }
    const std::vector<double> scores =
        evaluate_candidates(X, y, task, config, rng, subsets);

    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
      if (scores[c] > scores[best]) best = c;  // ties keep the lowest index
    }

    if (!result.selected.empty()) {
      const double improvement = scores[best] - current;
      if (improvement <= 0.0 ||
          improvement < config.improvement_threshold * std::max(current, 1e-12)) {
        result.stop_reason = StopReason::relative_improvement;
        break;
      }
    }

    result.selected.push_back(remaining[best]);
    result.mi_trajectory.push_back(scores[best]);
    current = scores[best];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return result;
}

SelectionResult backward_eliminate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   TreeTask task, const MiConfig& config, Rng& rng) {
  const int d = static_cast<int>(X.cols());
  if (d < 2) throw ValidationError("backward_eliminate: need d >= 2");
  if (config.improvement_threshold <= 0.0) {
    throw ValidationError("backward_eliminate: invalid config");
  }

  SelectionResult result;
  std::vector<int> active(static_cast<std::size_t>(d));
  std::iota(active.begin(), active.end(), 0);

  Rng full = rng.child(subset_tag({active.data(), active.size()}));
  double current = estimate_mi(X, y, task, full, config);
  result.mi_trajectory.push_back(current);

  for (;;) {
    if (active.size() == 1) {
      result.stop_reason = StopReason::exhausted;
      break;
    }
    std::vector<std::vector<int>> subsets;
    subsets.reserve(active.size());
    for (std::size_t r = 0; r < active.size(); ++r) {
      std::vector<int> s;
      s.reserve(active.size() - 1);
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (j != r) s.push_back(active[j]);
      }
      subsets.push_back(std::move(s));  // already sorted: active is sorted
    }
    const std::vector<double> scores =
        evaluate_candidates(X, y, task, config, rng, subsets);

    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
      if (scores[c] > scores[best]) best = c;
    }

    const double drop = current - scores[best];
    if (drop >= config.improvement_threshold * std::max(current, 1e-12)) {
      result.stop_reason = StopReason::relative_improvement;
      break;
    }
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best));
    current = scores[best];
    result.mi_trajectory.push_back(current);
  }

  result.selected = active;
  return result;
}

}  // namespace covshift
