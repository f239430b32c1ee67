// Times the OpenMP kernels against their serial references and checks the
// two agree bit for bit. Run manually:  ./kernels_bench [n]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "covshift/kernels.hpp"
#include "covshift/parallel.hpp"
#include "covshift/rng.hpp"

using namespace covshift;
using Clock = std::chrono::steady_clock;

namespace {

double checksum = 0.0;  // defeats dead-code elimination

template <typename F>
double time_ns_per_call(F f, int reps) {
  f();  // warm up
  const auto start = Clock::now();
  for (int r = 0; r < reps; ++r) checksum += f();
  const auto stop = Clock::now();
  return std::chrono::duration<double, std::nano>(stop - start).count() / reps;
}

void report(const char* name, double serial_ns, double parallel_ns, bool exact) {
  std::printf("%-18s %12.0f ns %12.0f ns   %5.2fx   %s\n", name, serial_ns,
              parallel_ns, serial_ns / parallel_ns, exact ? "bit-exact" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4000000;
  const int reps = 20;

  Rng rng(12345);
  std::vector<double> x(n), y(n), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
    labels[i] = i % 2 ? 1.0 : 0.0;
  }
  std::vector<double> w = x;
  for (double& v : w) v = std::abs(v);

  std::printf("n = %zu, threads = %d\n", n, max_threads());
  std::printf("%-18s %15s %15s %8s\n", "kernel", "serial", "parallel", "speedup");

  {
    const double s = time_ns_per_call([&] { return kernels::serial::sum(x); }, reps);
    const double p = time_ns_per_call([&] { return kernels::sum(x); }, reps);
    report("sum", s, p, kernels::serial::sum(x) == kernels::sum(x));
  }
  {
    const double s = time_ns_per_call([&] { return kernels::serial::dot(x, y); }, reps);
    const double p = time_ns_per_call([&] { return kernels::dot(x, y); }, reps);
    report("dot", s, p, kernels::serial::dot(x, y) == kernels::dot(x, y));
  }
  {
    auto serial = [&] {
      double s1 = 0.0, s2 = 0.0;
      kernels::serial::ess_sums(w, s1, s2);
      return s1 + s2;
    };
    auto parallel = [&] {
      double s1 = 0.0, s2 = 0.0;
      kernels::ess_sums(w, s1, s2);
      return s1 + s2;
    };
    report("ess_sums", time_ns_per_call(serial, reps), time_ns_per_call(parallel, reps),
           serial() == parallel());
  }
  {
    const double s =
        time_ns_per_call([&] { return kernels::serial::log_sum_exp(x); }, reps);
    const double p = time_ns_per_call([&] { return kernels::log_sum_exp(x); }, reps);
    report("log_sum_exp", s, p,
           kernels::serial::log_sum_exp(x) == kernels::log_sum_exp(x));
  }
  {
    auto serial = [&] { return kernels::serial::logistic_loss_sum(x, labels); };
    auto parallel = [&] { return kernels::logistic_loss_sum(x, labels); };
    report("logistic_loss", time_ns_per_call(serial, reps),
           time_ns_per_call(parallel, reps), serial() == parallel());
  }

  std::fprintf(stderr, "checksum %g\n", checksum);
  return 0;
}
