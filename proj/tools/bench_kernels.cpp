// Times the OpenMP kernels against the serial reference implementations at
// production-like shapes and prints a comparison table.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "sdsn/kernels.hpp"
#include "sdsn/matrix.hpp"

using sdsn::Matrix;
namespace kernels = sdsn::kernels;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

double best_of(int repeats, const std::function<void()>& fn) {
  fn();  // warm-up
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, const std::function<void()>& serial,
         const std::function<void()>& parallel) {
  const double s = best_of(3, serial);
  const double p = best_of(3, parallel);
  std::printf("%-28s %10.2f %10.2f %8.2fx\n", name, s, p, s / p);
}

}  // namespace

int main() {
  kernels::init_threads_from_env();
  std::printf("threads: %d\n", kernels::max_threads());
  std::printf("%-28s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

  const std::size_t d = 504, l = 500, n = 500, c = 38;
  const Matrix w = random_matrix(d, l, 1);
  const Matrix x = random_matrix(d, n, 2);
  const Matrix h = random_matrix(l, n, 3);
  const Matrix u = random_matrix(l, c, 4);
  const Matrix residual = random_matrix(c, n, 5);
  const Matrix gram_rhs = random_matrix(l, c, 6);

  Matrix gram = kernels::par::matmul_a_bt(h, h);
  for (std::size_t i = 0; i < l; ++i) gram(i, i) += 0.5;

  row("matmul (U x residual)",
      [&] { kernels::serial::matmul(u, residual); },
      [&] { kernels::par::matmul(u, residual); });
  row("matmul_at_b (W^T X)",
      [&] { kernels::serial::matmul_at_b(w, x); },
      [&] { kernels::par::matmul_at_b(w, x); });
  row("matmul_a_bt (H H^T)",
      [&] { kernels::serial::matmul_a_bt(h, h); },
      [&] { kernels::par::matmul_a_bt(h, h); });
  row("sigmoid map",
      [&] { kernels::serial::sigmoid(h); },
      [&] { kernels::par::sigmoid(h); });
  row("relu grad map",
      [&] { kernels::serial::relu_grad(h); },
      [&] { kernels::par::relu_grad(h); });
  row("group norms (G=4)",
      [&] { kernels::serial::group_norms_per_unit(h, 4); },
      [&] { kernels::par::group_norms_per_unit(h, 4); });
  row("spd_solve (500x500, 38 rhs)",
      [&] {
        Matrix out;
        kernels::serial::spd_solve(gram, gram_rhs, out);
      },
      [&] {
        Matrix out;
        kernels::par::spd_solve(gram, gram_rhs, out);
      });
  return 0;
}
