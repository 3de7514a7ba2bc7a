// OpenMP kernels and the exec-mode dispatch. Parallel loops run over
// output columns with a fixed per-element summation order, so any thread
// count produces the same bits.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"

namespace sdsn::kernels {

namespace {

std::atomic<ExecMode> g_mode{ExecMode::Parallel};

void require_inner(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    raise(ErrorCode::DimMismatch, std::string(what) + ": inner dimensions " +
                                      std::to_string(a) + " vs " + std::to_string(b));
}

void require_groups(const Matrix& hidden, std::size_t group_count) {
  if (group_count == 0 || hidden.rows() % group_count != 0)
    raise(ErrorCode::NonDivisible, "group count " + std::to_string(group_count) +
                                       " does not divide " + std::to_string(hidden.rows()) +
                                       " hidden units");
}

}  // namespace

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }

void init_threads_from_env() {
  const char* env = std::getenv("SDSN_THREADS");
  if (env == nullptr || *env == '\0') return;
  int n = std::atoi(env);
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

namespace par {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.rows(), "matmul");
  const std::size_t m = a.rows(), n = b.cols(), inner = a.cols();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) {
    double* cj = c.col(j);
    const double* bj = b.col(j);
    for (std::size_t k = 0; k < inner; ++k) {
      const double bkj = bj[k];
      const double* ak = a.col(k);
      for (std::size_t i = 0; i < m; ++i) cj[i] += bkj * ak[i];
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  require_inner(a.rows(), b.rows(), "matmul_at_b");
  const std::size_t m = a.cols(), n = b.cols(), inner = a.rows();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) {
    double* cj = c.col(j);
    const double* bj = b.col(j);
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a.col(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += ai[k] * bj[k];
      cj[i] = acc;
    }
  }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.cols(), "matmul_a_bt");
  const std::size_t m = a.rows(), n = b.rows(), inner = a.cols();
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) {
    double* cj = c.col(j);
    for (std::size_t k = 0; k < inner; ++k) {
      const double bjk = b(j, k);
      const double* ak = a.col(k);
      for (std::size_t i = 0; i < m; ++i) cj[i] += bjk * ak[i];
    }
  }
  return c;
}

Matrix sigmoid(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  const std::size_t total = pre.size();
  const double* src = pre.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < total; ++i) dst[i] = 1.0 / (1.0 + std::exp(-src[i]));
  return out;
}

Matrix relu(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  const std::size_t total = pre.size();
  const double* src = pre.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < total; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  return out;
}

Matrix sigmoid_grad(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  const std::size_t total = pre.size();
  const double* src = pre.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < total; ++i) {
    double s = 1.0 / (1.0 + std::exp(-src[i]));
    dst[i] = s * (1.0 - s);
  }
  return out;
}

Matrix relu_grad(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  const std::size_t total = pre.size();
  const double* src = pre.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < total; ++i) dst[i] = src[i] > 0.0 ? 1.0 : 0.0;
  return out;
}

Matrix group_norms_per_unit(const Matrix& hidden, std::size_t group_count) {
  require_groups(hidden, group_count);
  const std::size_t gsize = hidden.rows() / group_count;
  Matrix out(hidden.rows(), hidden.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < hidden.cols(); ++i) {
    const double* h = hidden.col(i);
    double* o = out.col(i);
    for (std::size_t g = 0; g < group_count; ++g) {
      double ss = 0.0;
      for (std::size_t j = g * gsize; j < (g + 1) * gsize; ++j) ss += h[j] * h[j];
      const double norm = std::sqrt(ss);
      for (std::size_t j = g * gsize; j < (g + 1) * gsize; ++j) o[j] = norm;
    }
  }
  return out;
}

Matrix group_norms_per_group(const Matrix& hidden, std::size_t group_count) {
  require_groups(hidden, group_count);
  const std::size_t gsize = hidden.rows() / group_count;
  Matrix out(group_count, hidden.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < hidden.cols(); ++i) {
    const double* h = hidden.col(i);
    double* o = out.col(i);
    for (std::size_t g = 0; g < group_count; ++g) {
      double ss = 0.0;
      for (std::size_t j = g * gsize; j < (g + 1) * gsize; ++j) ss += h[j] * h[j];
      o[g] = std::sqrt(ss);
    }
  }
  return out;
}

bool spd_solve(const Matrix& a, const Matrix& b, Matrix& x) {
  if (a.rows() != a.cols())
    raise(ErrorCode::DimMismatch, "spd_solve: matrix is not square");
  require_inner(a.rows(), b.rows(), "spd_solve");
  const std::size_t n = a.rows();

  Matrix l(n, n);
  bool ok = true;
  for (std::size_t j = 0; j < n && ok; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      ok = false;
      break;
    }
    const double diag = std::sqrt(d);
    l(j, j) = diag;
#pragma omp parallel for schedule(static)
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / diag;
    }
  }
  if (!ok) return false;

  x = Matrix(n, b.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return true;
}

}  // namespace par

Matrix matmul(const Matrix& a, const Matrix& b) {
  return exec_mode() == ExecMode::Serial ? serial::matmul(a, b) : par::matmul(a, b);
}
Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  return exec_mode() == ExecMode::Serial ? serial::matmul_at_b(a, b) : par::matmul_at_b(a, b);
}
Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  return exec_mode() == ExecMode::Serial ? serial::matmul_a_bt(a, b) : par::matmul_a_bt(a, b);
}
Matrix sigmoid(const Matrix& pre) {
  return exec_mode() == ExecMode::Serial ? serial::sigmoid(pre) : par::sigmoid(pre);
}
Matrix relu(const Matrix& pre) {
  return exec_mode() == ExecMode::Serial ? serial::relu(pre) : par::relu(pre);
}
Matrix sigmoid_grad(const Matrix& pre) {
  return exec_mode() == ExecMode::Serial ? serial::sigmoid_grad(pre) : par::sigmoid_grad(pre);
}
Matrix relu_grad(const Matrix& pre) {
  return exec_mode() == ExecMode::Serial ? serial::relu_grad(pre) : par::relu_grad(pre);
}
Matrix group_norms_per_unit(const Matrix& hidden, std::size_t group_count) {
  return exec_mode() == ExecMode::Serial ? serial::group_norms_per_unit(hidden, group_count)
                                         : par::group_norms_per_unit(hidden, group_count);
}
Matrix group_norms_per_group(const Matrix& hidden, std::size_t group_count) {
  return exec_mode() == ExecMode::Serial ? serial::group_norms_per_group(hidden, group_count)
                                         : par::group_norms_per_group(hidden, group_count);
}
bool spd_solve(const Matrix& a, const Matrix& b, Matrix& x) {
  return exec_mode() == ExecMode::Serial ? serial::spd_solve(a, b, x) : par::spd_solve(a, b, x);
}

double sum(const Matrix& m) {
  double acc = 0.0;
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) acc += p[i];
  return acc;
}

double sum_abs(const Matrix& m) {
  double acc = 0.0;
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) acc += std::abs(p[i]);
  return acc;
}

double frobenius_sq(const Matrix& m) {
  double acc = 0.0;
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) acc += p[i] * p[i];
  return acc;
}

double frobenius(const Matrix& m) { return std::sqrt(frobenius_sq(m)); }

void add_scaled(Matrix& target, const Matrix& delta, double scale) {
  if (target.rows() != delta.rows() || target.cols() != delta.cols())
    raise(ErrorCode::DimMismatch, "add_scaled: shapes differ");
  double* t = target.data();
  const double* d = delta.data();
  for (std::size_t i = 0; i < target.size(); ++i) t[i] += scale * d[i];
}

}  // namespace sdsn::kernels
