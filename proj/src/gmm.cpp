#include "covshift/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>

#include <Eigen/Cholesky>

#include "covshift/error.hpp"
#include "covshift/kernels.hpp"

namespace covshift {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Cholesky factor plus the constants needed to evaluate one component.
struct PreparedComponent {
  Eigen::MatrixXd L;  // q x q lower factor, column-major
  Eigen::VectorXd mean;
  double log_norm = 0.0;    // -q/2 log(2 pi) - log|L|
  double log_weight = 0.0;  // -inf for empty components
};

PreparedComponent prepare_component(const Eigen::MatrixXd& cov,
                                    const Eigen::VectorXd& mean, double weight) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("GaussianMixture: covariance is not SPD");
  }
  PreparedComponent c;
  c.L = llt.matrixL();
  c.mean = mean;
  double log_det_l = 0.0;
  for (Eigen::Index i = 0; i < c.L.rows(); ++i) log_det_l += std::log(c.L(i, i));
  c.log_norm = -0.5 * static_cast<double>(c.L.rows()) * kLog2Pi - log_det_l;
  c.log_weight = weight > 0.0 ? std::log(weight)
                              : -std::numeric_limits<double>::infinity();
  return c;
}

std::vector<PreparedComponent> prepare_mixture(const GaussianMixture& g) {
  std::vector<PreparedComponent> comps;
  comps.reserve(static_cast<std::size_t>(g.components()));
  for (int j = 0; j < g.components(); ++j) {
    comps.push_back(prepare_component(g.covariances[static_cast<std::size_t>(j)],
                                      g.means[static_cast<std::size_t>(j)],
                                      g.weights[j]));
  }
  return comps;
}

// log N(x; mean, L L') via forward substitution; z is caller scratch of
// length q and x points at a contiguous q-vector.
inline double component_log_density(const PreparedComponent& c, const double* x,
                                    double* z) {
  const Eigen::Index q = c.mean.size();
  const double* L = c.L.data();
  double quad = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    double acc = x[i] - c.mean[i];
    for (Eigen::Index j = 0; j < i; ++j) acc -= L[i + j * q] * z[j];
    z[i] = acc / L[i + i * q];
    quad += z[i] * z[i];
  }
  return c.log_norm - 0.5 * quad;
}

// Row-major copy (q x n column-major) so each row of X is contiguous.
Eigen::MatrixXd transposed_rows(const Eigen::MatrixXd& X) {
  return X.transpose();
}

// Per-row log mixture density; fills responsibilities when resp != nullptr.
// Rows are independent, so the parallel fill is deterministic.
Eigen::VectorXd mixture_log_density_rows(const std::vector<PreparedComponent>& comps,
                                         const Eigen::MatrixXd& Xt,
                                         Eigen::MatrixXd* resp) {
  const Eigen::Index n = Xt.cols();
  const Eigen::Index q = Xt.rows();
  const int k = static_cast<int>(comps.size());
  Eigen::VectorXd lse(n);
#pragma omp parallel
  {
    std::vector<double> z(static_cast<std::size_t>(q));
    std::vector<double> ld(static_cast<std::size_t>(k));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* x = Xt.data() + i * q;
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        ld[static_cast<std::size_t>(j)] =
            comps[static_cast<std::size_t>(j)].log_weight +
            component_log_density(comps[static_cast<std::size_t>(j)], x, z.data());
        m = std::max(m, ld[static_cast<std::size_t>(j)]);
      }
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += std::exp(ld[static_cast<std::size_t>(j)] - m);
      lse[i] = m + std::log(acc);
      if (resp) {
        for (int j = 0; j < k; ++j) {
          (*resp)(i, j) = std::exp(ld[static_cast<std::size_t>(j)] - lse[i]);
        }
      }
    }
  }
  return lse;
}

std::vector<Eigen::Index> farthest_point_seeds(const Eigen::MatrixXd& X, int k,
                                               Eigen::Index first) {
  const Eigen::Index n = X.rows();
  std::vector<Eigen::Index> centers{first};
  Eigen::VectorXd min_dist =
      (X.rowwise() - X.row(first)).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    Eigen::Index best = 0;
    double best_dist = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    centers.push_back(best);
    const Eigen::VectorXd d = (X.rowwise() - X.row(best)).rowwise().squaredNorm();
    min_dist = min_dist.cwiseMin(d);
  }
  return centers;
}

struct EmRun {
  GaussianMixture model;
  std::vector<double> trace;
  double final_ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

EmRun run_em(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xt, int k,
             Eigen::Index first_center, const GmmConfig& config) {
  const Eigen::Index n = X.rows();
  const Eigen::Index q = X.cols();

  EmRun run;
  GaussianMixture& g = run.model;
  g.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  const auto seeds = farthest_point_seeds(X, k, first_center);
  const Eigen::RowVectorXd mean_row = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - mean_row;
  Eigen::MatrixXd global_cov =
      centered.transpose() * centered / static_cast<double>(n);
  global_cov.diagonal().array() += config.ridge;

  // k-means-style start: one-hot assignment to the nearest seed, then an
  // M-step, so every component opens with its own cluster-local shape.
  std::vector<std::vector<Eigen::Index>> assigned(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      const double dist =
          (X.row(i) - X.row(seeds[static_cast<std::size_t>(j)])).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    assigned[static_cast<std::size_t>(best)].push_back(i);
  }
  for (int j = 0; j < k; ++j) {
    const auto& rows = assigned[static_cast<std::size_t>(j)];
    if (rows.empty()) {
      g.means.push_back(X.row(seeds[static_cast<std::size_t>(j)]).transpose());
      g.covariances.push_back(global_cov);
      continue;
    }
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(q);
    for (Eigen::Index i : rows) mu += X.row(i).transpose();
    mu /= static_cast<double>(rows.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i : rows) {
      const Eigen::VectorXd diff = X.row(i).transpose() - mu;
      cov += diff * diff.transpose();
    }
    cov /= static_cast<double>(rows.size());
    cov.diagonal().array() += config.ridge;
    g.weights[j] = static_cast<double>(rows.size()) / static_cast<double>(n);
    g.means.push_back(std::move(mu));
    g.covariances.push_back(std::move(cov));
  }
  g.weights /= g.weights.sum();

  Eigen::MatrixXd resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iter; ++iter) {
    const auto comps = prepare_mixture(g);
    const Eigen::VectorXd lse = mixture_log_density_rows(comps, Xt, &resp);
    const double ll =
        kernels::sum({lse.data(), static_cast<std::size_t>(lse.size())});
    run.trace.push_back(ll);
    run.final_ll = ll;
    if (std::isfinite(prev_ll) &&
        ll - prev_ll <= config.rel_tol * std::abs(ll)) {
      run.converged = true;
      break;
    }
    prev_ll = ll;

#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < k; ++j) {
      const double* r = resp.data() + static_cast<Eigen::Index>(j) * n;
      double nk = 0.0;
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(q);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double* x = Xt.data() + i * q;
        nk += r[i];
        for (Eigen::Index a = 0; a < q; ++a) mu[a] += r[i] * x[a];
      }
      g.weights[j] = nk / static_cast<double>(n);
      if (nk < 1e-12) continue;  // empty component keeps previous shape
      mu /= nk;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
      std::vector<double> z(static_cast<std::size_t>(q));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double* x = Xt.data() + i * q;
        for (Eigen::Index a = 0; a < q; ++a) z[static_cast<std::size_t>(a)] = x[a] - mu[a];
        for (Eigen::Index a = 0; a < q; ++a) {
          const double ra = r[i] * z[static_cast<std::size_t>(a)];
          for (Eigen::Index b = 0; b <= a; ++b) {
            cov(a, b) += ra * z[static_cast<std::size_t>(b)];
          }
        }
      }
      cov /= nk;
      for (Eigen::Index a = 0; a < q; ++a) {
        for (Eigen::Index b = a + 1; b < q; ++b) cov(a, b) = cov(b, a);
      }
      cov.diagonal().array() += config.ridge;
      g.means[static_cast<std::size_t>(j)] = mu;
      g.covariances[static_cast<std::size_t>(j)] = cov;
    }
    const double wsum = g.weights.sum();
    g.weights /= wsum;
  }
  return run;
}

}  // namespace

void GaussianMixture::validate() const {
  const int k = components();
  if (k < 1) throw ValidationError("GaussianMixture: no components");
  if (means.size() != static_cast<std::size_t>(k) ||
      covariances.size() != static_cast<std::size_t>(k)) {
    throw ValidationError("GaussianMixture: field sizes disagree");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-10 || weights.minCoeff() < 0.0) {
    throw ValidationError("GaussianMixture: weights are not a simplex vector");
  }
  const Eigen::Index q = dim();
  for (int j = 0; j < k; ++j) {
    if (means[static_cast<std::size_t>(j)].size() != q ||
        covariances[static_cast<std::size_t>(j)].rows() != q ||
        covariances[static_cast<std::size_t>(j)].cols() != q) {
      throw ValidationError("GaussianMixture: inconsistent dimensions");
    }
    prepare_component(covariances[static_cast<std::size_t>(j)],
                      means[static_cast<std::size_t>(j)], weights[j]);  // SPD check
  }
}

GaussianMixture fit_gmm(const Eigen::MatrixXd& X, int k, Rng& rng,
                        const GmmConfig& config, GmmFitInfo* info) {
  const Eigen::Index n = X.rows();
  if (k < 1) throw ValidationError("fit_gmm: need k >= 1");
  if (n < k) throw ValidationError("fit_gmm: need n >= k");
  if (X.cols() < 1) throw ValidationError("fit_gmm: need q >= 1");
  if (!X.allFinite()) throw ValidationError("fit_gmm: non-finite input");

  const Eigen::MatrixXd Xt = transposed_rows(X);
  const int restarts = std::max(1, config.restarts);
  std::vector<Eigen::Index> firsts(static_cast<std::size_t>(restarts));
  for (int r = 0; r < restarts; ++r) {
    firsts[static_cast<std::size_t>(r)] =
        static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
  }

  std::vector<EmRun> runs(static_cast<std::size_t>(restarts));
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < restarts; ++r) {
    try {
      runs[static_cast<std::size_t>(r)] =
          run_em(X, Xt, k, firsts[static_cast<std::size_t>(r)], config);
    } catch (const std::exception&) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw NumericError("fit_gmm: EM failed (degenerate covariance)");

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].final_ll > runs[best].final_ll) best = r;
  }
  if (info) {
    info->log_likelihood = runs[best].trace;
    info->converged = runs[best].converged;
  }
  return std::move(runs[best].model);
}

double log_density(const GaussianMixture& g, const Eigen::VectorXd& x) {
  if (x.size() != g.dim()) throw ValidationError("log_density: length mismatch");
  const auto comps = prepare_mixture(g);
  Eigen::MatrixXd Xt(x.size(), 1);
  Xt.col(0) = x;
  return mixture_log_density_rows(comps, Xt, nullptr)[0];
}

Eigen::VectorXd log_density_batch(const GaussianMixture& g, const Eigen::MatrixXd& X) {
  if (X.cols() != g.dim()) throw ValidationError("log_density_batch: width mismatch");
  const auto comps = prepare_mixture(g);
  return mixture_log_density_rows(comps, transposed_rows(X), nullptr);
}

GaussianMixture marginalize(const GaussianMixture& g, const std::vector<int>& coords) {
  const Eigen::Index q = g.dim();
  if (coords.empty()) throw ValidationError("marginalize: empty coordinate set");
  std::vector<bool> seen(static_cast<std::size_t>(q), false);
  for (int c : coords) {
    if (c < 0 || c >= q) throw ValidationError("marginalize: index out of range");
    if (seen[static_cast<std::size_t>(c)]) {
      throw ValidationError("marginalize: duplicate index");
    }
    seen[static_cast<std::size_t>(c)] = true;
  }

  GaussianMixture out;
  out.weights = g.weights;
  const Eigen::Index m = static_cast<Eigen::Index>(coords.size());
  for (int j = 0; j < g.components(); ++j) {
    Eigen::VectorXd mu(m);
    Eigen::MatrixXd cov(m, m);
    const auto& gm = g.means[static_cast<std::size_t>(j)];
    const auto& gc = g.covariances[static_cast<std::size_t>(j)];
    for (Eigen::Index a = 0; a < m; ++a) {
      mu[a] = gm[coords[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < m; ++b) {
        cov(a, b) = gc(coords[static_cast<std::size_t>(a)], coords[static_cast<std::size_t>(b)]);
      }
    }
    out.means.push_back(std::move(mu));
    out.covariances.push_back(std::move(cov));
  }
  return out;
}

GaussianMixture select_components(const Eigen::MatrixXd& X, Rng& rng,
                                  const ComponentSelectConfig& config, int* chosen_k) {
  const Eigen::Index n = X.rows();
  if (n < 30) throw ValidationError("select_components: need n >= 30");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  const Eigen::Index n_train = n / 2;

  Eigen::MatrixXd Xtrain(n_train, X.cols()), Xhold(n - n_train, X.cols());
  for (Eigen::Index i = 0; i < n_train; ++i) Xtrain.row(i) = X.row(idx[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = n_train; i < n; ++i) {
    Xhold.row(i - n_train) = X.row(idx[static_cast<std::size_t>(i)]);
  }

  const int kmax = static_cast<int>(
      std::min<Eigen::Index>(config.max_components, n_train));
  std::vector<double> score(static_cast<std::size_t>(kmax),
                            -std::numeric_limits<double>::infinity());
  std::vector<Eigen::VectorXd> row_ll(static_cast<std::size_t>(kmax));
#pragma omp parallel for schedule(dynamic)
  for (int k = 1; k <= kmax; ++k) {
    Rng local = rng.child(static_cast<std::uint64_t>(k));
    try {
      const GaussianMixture g = fit_gmm(Xtrain, k, local, config.fit);
      row_ll[static_cast<std::size_t>(k - 1)] = log_density_batch(g, Xhold);
      score[static_cast<std::size_t>(k - 1)] =
          row_ll[static_cast<std::size_t>(k - 1)].mean();
    } catch (const std::exception&) {
      // leave -inf: this k loses the selection
    }
  }

  int arg_max = 1;
  for (int k = 2; k <= kmax; ++k) {
    if (score[static_cast<std::size_t>(k - 1)] > score[static_cast<std::size_t>(arg_max - 1)]) {
      arg_max = k;
    }
  }
  if (!std::isfinite(score[static_cast<std::size_t>(arg_max - 1)])) {
    throw NumericError("select_components: every candidate fit failed");
  }

  // Smallest k statistically tied with the maximum (one standard error of
  // the paired per-row difference); holdout means this close are noise.
  int best_k = arg_max;
  const Eigen::VectorXd& best_rows = row_ll[static_cast<std::size_t>(arg_max - 1)];
  for (int k = 1; k < arg_max; ++k) {
    if (!std::isfinite(score[static_cast<std::size_t>(k - 1)])) continue;
    const Eigen::VectorXd diff = best_rows - row_ll[static_cast<std::size_t>(k - 1)];
    const double mean_diff = diff.mean();
    const double var = (diff.array() - mean_diff).square().sum() /
                       std::max<double>(1.0, static_cast<double>(diff.size() - 1));
    const double se = std::sqrt(var / static_cast<double>(diff.size()));
    if (mean_diff <= se) {
      best_k = k;
      break;
    }
  }

  if (chosen_k) *chosen_k = best_k;
  Rng refit = rng.child(1000u + static_cast<std::uint64_t>(best_k));
  return fit_gmm(X, best_k, refit, config.fit);
}

}  // namespace covshift
