// Micro-benchmark: OpenMP kernels against their serial reference
// implementations (wanda_scores and matvec).

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "cassandra/rng.hpp"
#include "cassandra/selection.hpp"
#include "cassandra/tinylm.hpp"

using namespace cassandra;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int iters) {
  fn();  // warm up
  auto t0 = Clock::now();
  for (int i = 0; i < iters; ++i) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

}  // namespace

int main() {
  SplitMix64 rng(42);
  const std::size_t rows = 1024, cols = 1024;
  MatrixF w(rows, cols);
  for (float& v : w.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  CalibrationNorms norms(cols);
  for (float& v : norms) v = static_cast<float>(rng.uniform(0.0, 2.0));
  std::vector<float> x(cols), y(rows);
  for (float& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  const int iters = 20;
  double t_wanda_s = time_ms([&] { wanda_scores_serial(w, norms); }, iters);
  double t_wanda_p = time_ms([&] { wanda_scores(w, norms); }, iters);
  double t_mv_s = time_ms([&] { matvec_serial(w, x, y); }, iters);
  double t_mv_p = time_ms([&] { matvec(w, x, y); }, iters);

  std::printf("kernel          serial_ms   omp_ms   speedup\n");
  std::printf("wanda_scores    %9.3f %8.3f   %6.2fx\n", t_wanda_s, t_wanda_p,
              t_wanda_s / t_wanda_p);
  std::printf("matvec          %9.3f %8.3f   %6.2fx\n", t_mv_s, t_mv_p,
              t_mv_s / t_mv_p);
  return 0;
}
