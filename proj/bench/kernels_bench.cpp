// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference kernels against the OpenMP variants and checks
// they agree bit for bit. Run with an optional thread list:
//   kernels_bench [threads...]   (default: 1 2 4)

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "mcm/kernels.hpp"
#include "mcm/rng.hpp"

using namespace mcm;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> randv(Rng& rng, std::int64_t n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> thread_counts = {1, 2, 4};
  if (argc > 1) {
    thread_counts.clear();
    for (int i = 1; i < argc; ++i) thread_counts.push_back(std::atoi(argv[i]));
  }

  Rng rng(1234);
  std::printf("%-22s %10s", "kernel", "serial ms");
  for (int t : thread_counts)
    if (t > 1) std::printf("  omp%-2d ms  speedup", t);
  std::printf("  exact\n");

  for (std::int64_t n : {64, 128, 256, 512}) {
    auto a = randv(rng, n * n);
    auto b = randv(rng, n * n);
    std::vector<double> ref(static_cast<std::size_t>(n * n));
    std::vector<double> par(static_cast<std::size_t>(n * n));
    const int reps = n <= 128 ? 50 : 10;

    const double serial_ms = time_ms(
        [&] { kernels::matmul_nn_serial(a.data(), b.data(), ref.data(), n, n, n, false); }, reps);
    std::printf("matmul %4lldx%-4lld %12.3f", static_cast<long long>(n), static_cast<long long>(n),
                serial_ms);
    bool exact = true;
    for (int t : thread_counts) {
      if (t <= 1) continue;
      kernels::set_threads(t);
      const double omp_ms = time_ms(
          [&] { kernels::matmul_nn_omp(a.data(), b.data(), par.data(), n, n, n, false); }, reps);
      exact = exact && (ref == par);
      std::printf("  %8.3f  %7.2fx", omp_ms, serial_ms / omp_ms);
    }
    kernels::set_threads(1);
    std::printf("  %s\n", exact ? "yes" : "NO");
  }

  for (std::int64_t rows : {512, 4096}) {
    const std::int64_t cols = 64;
    auto x = randv(rng, rows * cols);
    std::vector<double> ref(x.size()), par(x.size());
    std::vector<double> mean(static_cast<std::size_t>(rows)), rstd(static_cast<std::size_t>(rows));
    const int reps = 200;
    const double serial_ms = time_ms(
        [&] { kernels::softmax_rows_serial(x.data(), ref.data(), rows, cols); }, reps);
    std::printf("softmax %4lldx%-4lld %11.3f", static_cast<long long>(rows),
                static_cast<long long>(cols), serial_ms);
    bool exact = true;
    for (int t : thread_counts) {
      if (t <= 1) continue;
      kernels::set_threads(t);
      const double omp_ms =
          time_ms([&] { kernels::softmax_rows_omp(x.data(), par.data(), rows, cols); }, reps);
      exact = exact && (ref == par);
      std::printf("  %8.3f  %7.2fx", omp_ms, serial_ms / omp_ms);
    }
    kernels::set_threads(1);
    std::printf("  %s\n", exact ? "yes" : "NO");

    const double ln_serial_ms = time_ms(
        [&] {
          kernels::layernorm_rows_serial(x.data(), ref.data(), mean.data(), rstd.data(), rows,
                                         cols, 1e-12);
        },
        reps);
    std::printf("layernorm %4lldx%-4lld %9.3f", static_cast<long long>(rows),
                static_cast<long long>(cols), ln_serial_ms);
    exact = true;
    for (int t : thread_counts) {
      if (t <= 1) continue;
      kernels::set_threads(t);
      const double omp_ms = time_ms(
          [&] {
            kernels::layernorm_rows_omp(x.data(), par.data(), mean.data(), rstd.data(), rows,
                                        cols, 1e-12);
          },
          reps);
      exact = exact && (ref == par);
      std::printf("  %8.3f  %7.2fx", omp_ms, ln_serial_ms / omp_ms);
    }
    kernels::set_threads(1);
    std::printf("  %s\n", exact ? "yes" : "NO");
  }
  return 0;
}
