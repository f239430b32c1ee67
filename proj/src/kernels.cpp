#include "covshift/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "covshift/parallel.hpp"

namespace covshift::kernels {
namespace {

inline double block_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

inline double block_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline double combine(const std::vector<double>& partials) {
  double acc = 0.0;
  for (double p : partials) acc += p;
  return acc;
}

inline double log1pexp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

inline double block_logistic_loss(const double* m, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = y[i] > 0.5 ? 1.0 : -1.0;
    acc += log1pexp(-s * m[i]);
  }
  return acc;
}

}  // namespace

namespace serial {

double sum(std::span<const double> x) {
  const std::size_t nb = num_blocks(x.size());
  std::vector<double> partials(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * kReductionBlock;
    partials[b] = block_sum(x.data() + lo, std::min(kReductionBlock, x.size() - lo));
  }
  return combine(partials);
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<double> partials(nb, 0.0);
  for (std::size_t blk = 0; blk < nb; ++blk) {
    const std::size_t lo = blk * kReductionBlock;
    partials[blk] =
        block_dot(a.data() + lo, b.data() + lo, std::min(kReductionBlock, a.size() - lo));
  }
  return combine(partials);
}

void ess_sums(std::span<const double> w, double& s1, double& s2) {
  const std::size_t nb = num_blocks(w.size());
  std::vector<double> p1(nb, 0.0), p2(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, w.size() - lo);
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double v = w[lo + i];
      a1 += v;
      a2 += v * v;
    }
    p1[b] = a1;
    p2[b] = a2;
  }
  s1 = combine(p1);
  s2 = combine(p2);
}

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  const std::size_t nb = num_blocks(x.size());
  std::vector<double> partials(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, x.size() - lo);
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += std::exp(x[lo + i] - m);
    partials[b] = acc;
  }
  return m + std::log(combine(partials));
}

double logistic_loss_sum(std::span<const double> margins, std::span<const double> y) {
  const std::size_t nb = num_blocks(margins.size());
  std::vector<double> partials(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * kReductionBlock;
    partials[b] = block_logistic_loss(margins.data() + lo, y.data() + lo,
                                      std::min(kReductionBlock, margins.size() - lo));
  }
  return combine(partials);
}

}  // namespace serial

double sum(std::span<const double> x) {
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(num_blocks(x.size()));
  std::vector<double> partials(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    partials[b] = block_sum(x.data() + lo, std::min(kReductionBlock, x.size() - lo));
  }
  return combine(partials);
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(num_blocks(a.size()));
  std::vector<double> partials(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    const std::size_t lo = static_cast<std::size_t>(blk) * kReductionBlock;
    partials[blk] =
        block_dot(a.data() + lo, b.data() + lo, std::min(kReductionBlock, a.size() - lo));
  }
  return combine(partials);
}

void ess_sums(std::span<const double> w, double& s1, double& s2) {
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(num_blocks(w.size()));
  std::vector<double> p1(nb, 0.0), p2(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, w.size() - lo);
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double v = w[lo + i];
      a1 += v;
      a2 += v * v;
    }
    p1[b] = a1;
    p2[b] = a2;
  }
  s1 = combine(p1);
  s2 = combine(p2);
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.size()); ++i) {
    m = std::max(m, x[i]);
  }
  if (!std::isfinite(m)) return m;
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(num_blocks(x.size()));
  std::vector<double> partials(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, x.size() - lo);
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += std::exp(x[lo + i] - m);
    partials[b] = acc;
  }
  return m + std::log(combine(partials));
}

double logistic_loss_sum(std::span<const double> margins, std::span<const double> y) {
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(num_blocks(margins.size()));
  std::vector<double> partials(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    partials[b] = block_logistic_loss(margins.data() + lo, y.data() + lo,
                                      std::min(kReductionBlock, margins.size() - lo));
  }
  return combine(partials);
}

}  // namespace covshift::kernels
