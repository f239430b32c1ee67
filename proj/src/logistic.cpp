#include "covshift/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "covshift/error.hpp"
#include "covshift/kernels.hpp"

namespace covshift {
namespace {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double soft_threshold(double u, double tau) {
  if (u > tau) return u - tau;
  if (u < -tau) return u + tau;
  return 0.0;
}

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw ValidationError("fit_l1_logistic: length mismatch");
  if (X.rows() < 1) throw ValidationError("fit_l1_logistic: empty input");
  if (!X.allFinite()) throw ValidationError("fit_l1_logistic: non-finite feature");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) {
      has0 = true;
    } else if (y[i] == 1.0) {
      has1 = true;
    } else {
      throw ValidationError("fit_l1_logistic: labels must be 0 or 1");
    }
  }
  if (!has0 || !has1) throw ValidationError("fit_l1_logistic: both classes required");
}

// Mean log loss at margins m_i = intercept + x_i . beta.
double smooth_loss(const Eigen::VectorXd& margins, const Eigen::VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(margins.size());
  return kernels::logistic_loss_sum({margins.data(), n}, {y.data(), n}) /
         static_cast<double>(n);
}

}  // namespace

Eigen::Index expanded_width(Eigen::Index d, const ExpansionSpec& spec) {
  Eigen::Index m = d;
  if (spec.degree >= 2) m += spec.include_interactions ? d * (d + 1) / 2 : d;
  if (spec.include_bias_column) m += 1;
  return m;
}

Eigen::MatrixXd expand_quadratic(const Eigen::MatrixXd& features, const ExpansionSpec& spec) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (d < 1) throw ValidationError("expand_quadratic: need d >= 1");

  Eigen::MatrixXd out(n, expanded_width(d, spec));
  out.leftCols(d) = features;
  Eigen::Index col = d;
  if (spec.degree >= 2) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Index j_end = spec.include_interactions ? d : i + 1;
      for (Eigen::Index j = i; j < j_end; ++j) {
        out.col(col++) = features.col(i).cwiseProduct(features.col(j));
      }
    }
  }
  if (spec.include_bias_column) out.col(col).setOnes();
  return out;
}

Eigen::VectorXd logistic_smooth_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& coefficients,
                                         double intercept) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd margins = X * coefficients;
  margins.array() += intercept;
  Eigen::VectorXd residual(n);
  for (Eigen::Index i = 0; i < n; ++i) residual[i] = sigmoid(margins[i]) - y[i];
  Eigen::VectorXd grad(X.cols() + 1);
  grad.head(X.cols()) = X.transpose() * residual / static_cast<double>(n);
  grad[X.cols()] = residual.sum() / static_cast<double>(n);
  return grad;
}

LogisticModel fit_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double reg_c, const LogisticSolverConfig& config,
                              std::vector<double>* objective_trace) {
  check_inputs(X, y);
  if (!(reg_c > 0.0) || !std::isfinite(reg_c)) {
    throw ValidationError("fit_l1_logistic: reg_c must be positive and finite");
  }
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const double lambda = 1.0 / (static_cast<double>(n) * reg_c);

  // Parameter vector is [beta; intercept]; only beta is penalized.
  auto smooth_at = [&](const Eigen::VectorXd& beta, double b) {
    Eigen::VectorXd margins = X * beta;
    margins.array() += b;
    return smooth_loss(margins, y);
  };
  auto penalty = [&](const Eigen::VectorXd& beta) {
    return lambda * beta.lpNorm<1>();
  };

  Eigen::VectorXd x_beta = Eigen::VectorXd::Zero(m);
  double x_b = 0.0;
  Eigen::VectorXd xprev_beta = x_beta;
  double xprev_b = x_b;
  Eigen::VectorXd v_beta = x_beta;
  double v_b = x_b;

  double f_cur = smooth_at(x_beta, x_b) + penalty(x_beta);
  if (objective_trace) objective_trace->push_back(f_cur);

  double t = 1.0;
  double lip = 1.0;

  Eigen::VectorXd z_beta(m);
  double z_b = 0.0;

  // One backtracked proximal step from (p_beta, p_b); returns smooth value at z.
  auto prox_step = [&](const Eigen::VectorXd& p_beta, double p_b) {
    const double g_p = smooth_at(p_beta, p_b);
    const Eigen::VectorXd grad = logistic_smooth_gradient(X, y, p_beta, p_b);
    for (;;) {
      const double step = 1.0 / lip;
      for (Eigen::Index j = 0; j < m; ++j) {
        z_beta[j] = soft_threshold(p_beta[j] - step * grad[j], lambda * step);
      }
      z_b = p_b - step * grad[m];
      const double g_z = smooth_at(z_beta, z_b);
      double quad = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        const double dj = z_beta[j] - p_beta[j];
        quad += dj * (grad[j] + 0.5 * lip * dj);
      }
      const double db = z_b - p_b;
      quad += db * (grad[m] + 0.5 * lip * db);
      if (g_z <= g_p + quad + 1e-15 * std::abs(g_p) || lip > 1e15) return g_z;
      lip *= 2.0;
    }
  };

  for (int iter = 0; iter < config.max_iter; ++iter) {
    lip = std::max(lip * 0.9, 1e-10);

    double g_z = prox_step(v_beta, v_b);
    double f_z = g_z + penalty(z_beta);
    if (f_z > f_cur) {
      // Accelerated point overshot: restart momentum and step from x instead.
      // The majorization property guarantees this step cannot increase F.
      g_z = prox_step(x_beta, x_b);
      f_z = g_z + penalty(z_beta);
      t = 1.0;
    }

    xprev_beta.swap(x_beta);
    xprev_b = x_b;
    x_beta = z_beta;
    x_b = z_b;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    v_beta = x_beta + mom * (x_beta - xprev_beta);
    v_b = x_b + mom * (x_b - xprev_b);
    t = t_next;

    if (objective_trace) objective_trace->push_back(f_z);
    const double change = std::abs(f_cur - f_z);
    f_cur = f_z;
    if (change <= config.rel_tol * std::max(std::abs(f_cur), 1e-12)) break;
  }

  LogisticModel model;
  model.coefficients = x_beta;
  model.intercept = x_b;
  model.reg_c = reg_c;
  return model;
}

Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.coefficients.size()) {
    throw ValidationError("predict_proba: width mismatch");
  }
  Eigen::VectorXd margins = X * model.coefficients;
  margins.array() += model.intercept;
  Eigen::VectorXd probs(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    probs[i] = std::clamp(sigmoid(margins[i]), 1e-300, 1.0 - 1e-16);
  }
  return probs;
}

double log_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& y) {
  if (probs.size() != y.size()) throw ValidationError("log_loss: length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    acc += y[i] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
  }
  return acc / static_cast<double>(probs.size());
}

LogisticTuneResult tune_l1_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    Rng& rng, const LogisticSolverConfig& config) {
  check_inputs(X, y);
  const Eigen::Index n = X.rows();
  if (n < 10) throw ValidationError("tune_l1_logistic: need n >= 10");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  const Eigen::Index n_train = n / 2;

  Eigen::MatrixXd Xa(n_train, X.cols()), Xb(n - n_train, X.cols());
  Eigen::VectorXd ya(n_train), yb(n - n_train);
  for (Eigen::Index i = 0; i < n_train; ++i) {
    Xa.row(i) = X.row(idx[static_cast<std::size_t>(i)]);
    ya[i] = y[idx[static_cast<std::size_t>(i)]];
  }
  for (Eigen::Index i = n_train; i < n; ++i) {
    Xb.row(i - n_train) = X.row(idx[static_cast<std::size_t>(i)]);
    yb[i - n_train] = y[idx[static_cast<std::size_t>(i)]];
  }

  constexpr int kGridSize = 10;
  std::vector<double> grid(kGridSize);
  const double lo = std::log(1e-4), hi = std::log(5.0);
  for (int i = 0; i < kGridSize; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(lo + (hi - lo) * static_cast<double>(i) / (kGridSize - 1));
  }

  std::vector<double> holdout(kGridSize, 0.0);
  std::vector<std::string> errors(kGridSize);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < kGridSize; ++i) {
    try {
      const LogisticModel m = fit_l1_logistic(Xa, ya, grid[static_cast<std::size_t>(i)], config);
      holdout[static_cast<std::size_t>(i)] = log_loss(predict_proba(m, Xb), yb);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (int i = 0; i < kGridSize; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      throw ValidationError("tune_l1_logistic: " + errors[static_cast<std::size_t>(i)]);
    }
  }

  int best = 0;
  for (int i = 1; i < kGridSize; ++i) {
    if (holdout[static_cast<std::size_t>(i)] < holdout[static_cast<std::size_t>(best)]) {
      best = i;  // ties keep the smaller C
    }
  }

  LogisticTuneResult result;
  result.model = fit_l1_logistic(X, y, grid[static_cast<std::size_t>(best)], config);
  result.holdout_log_loss = holdout[static_cast<std::size_t>(best)];
  result.grid = grid;
  return result;
}

}  // namespace covshift
