#pragma once

#include <cstddef>
#include <span>

namespace covshift::kernels {

// Reference implementations: single-threaded, same blocked accumulation
// order as the parallel versions. The parallel kernels must match these
// bit for bit at any thread count; tests and bench/ compare the two.
namespace serial {

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
// s1 = sum(w), s2 = sum(w^2) in one pass.
void ess_sums(std::span<const double> w, double& s1, double& s2);
// Max-shifted log(sum(exp(x_i))). Ignores -inf entries; returns -inf when
// all entries are -inf.
double log_sum_exp(std::span<const double> x);
// sum_i log(1 + exp(-s_i * m_i)) with s_i = +-1 from binary labels y.
double logistic_loss_sum(std::span<const double> margins, std::span<const double> y);

}  // namespace serial

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
void ess_sums(std::span<const double> w, double& s1, double& s2);
double log_sum_exp(std::span<const double> x);
double logistic_loss_sum(std::span<const double> margins, std::span<const double> y);

}  // namespace covshift::kernels
