// Benchmark comparing the serial reference implementations of the two hot
// Monte Carlo kernels against their OpenMP versions.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "volrank/harness.hpp"
#include "volrank/limitlaw.hpp"

using namespace volrank;

namespace {

double seconds(const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
  int max_threads = omp_get_max_threads();
#else
  int max_threads = 1;
#endif
  std::printf("kernel,variant,threads,seconds,speedup\n");

  limitlaw::LimitInput u;
  u.d = 2;
  u.q = 2;
  u.alpha = Matrix::diag({1.0, 0.0});
  u.beta = Matrix::identity(2);
  u.gamma = Tensor3(2, 2, 2);
  u.gamma(0, 0, 0) = 0.4;
  u.a = {1.0, 1.0};
  double fserial = seconds([&] {
    limitlaw::sample_fbar(u, 1, 4000, 512, 7, limitlaw::Exec::serial);
  });
  std::printf("gamma_mc,serial,1,%.3f,1.00\n", fserial);
  double fpar = seconds([&] {
    limitlaw::sample_fbar(u, 1, 4000, 512, 7, limitlaw::Exec::parallel, max_threads);
  });
  std::printf("gamma_mc,openmp,%d,%.3f,%.2f\n", max_threads, fpar, fserial / fpar);

  harness::StudyConfig cfg;
  cfg.scenario.name = "constant_rank";
  cfg.scenario.d = 2;
  cfg.scenario.q = 2;
  cfg.scenario.r = 1;
  cfg.n_obs = 10000;
  cfg.n_paths = 40;
  cfg.hypotheses = {{ranktest::HypothesisKind::equal, 1}};
  cfg.master_seed = 11;
  double sserial = seconds([&] { harness::run_study(cfg, limitlaw::Exec::serial); });
  std::printf("mc_study,serial,1,%.3f,1.00\n", sserial);
  double spar = seconds([&] {
    harness::run_study(cfg, limitlaw::Exec::parallel, max_threads);
  });
  std::printf("mc_study,openmp,%d,%.3f,%.2f\n", max_threads, spar, sserial / spar);
  return 0;
}
