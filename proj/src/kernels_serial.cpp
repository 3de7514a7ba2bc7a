// Naive reference kernels. Textbook loops, no parallelism, no tricks;
// the test suite checks the OpenMP kernels against these.

#include <cmath>
#include <cstddef>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"

namespace sdsn::kernels {

namespace {

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

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  require_inner(a.rows(), b.rows(), "matmul_at_b");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.cols(), "matmul_a_bt");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

Matrix sigmoid(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t j = 0; j < pre.cols(); ++j)
    for (std::size_t i = 0; i < pre.rows(); ++i)
      out(i, j) = 1.0 / (1.0 + std::exp(-pre(i, j)));
  return out;
}

Matrix relu(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t j = 0; j < pre.cols(); ++j)
    for (std::size_t i = 0; i < pre.rows(); ++i)
      out(i, j) = pre(i, j) > 0.0 ? pre(i, j) : 0.0;
  return out;
}

Matrix sigmoid_grad(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t j = 0; j < pre.cols(); ++j)
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      double s = 1.0 / (1.0 + std::exp(-pre(i, j)));
      out(i, j) = s * (1.0 - s);
    }
  return out;
}

Matrix relu_grad(const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t j = 0; j < pre.cols(); ++j)
    for (std::size_t i = 0; i < pre.rows(); ++i)
      out(i, j) = pre(i, j) > 0.0 ? 1.0 : 0.0;
  return out;
}

Matrix group_norms_per_unit(const Matrix& hidden, std::size_t group_count) {
  require_groups(hidden, group_count);
  const std::size_t gsize = hidden.rows() / group_count;
  Matrix out(hidden.rows(), hidden.cols());
  for (std::size_t i = 0; i < hidden.cols(); ++i)
    for (std::size_t g = 0; g < group_count; ++g) {
      double ss = 0.0;
      for (std::size_t j = g * gsize; j < (g + 1) * gsize; ++j)
        ss += hidden(j, i) * hidden(j, i);
      double norm = std::sqrt(ss);
      for (std::size_t j = g * gsize; j < (g + 1) * gsize; ++j) out(j, i) = norm;
    }
  return out;
}

Matrix group_norms_per_group(const Matrix& hidden, std::size_t group_count) {
  require_groups(hidden, group_count);
  const std::size_t gsize = hidden.rows() / group_count;
  Matrix out(group_count, hidden.cols());
  for (std::size_t i = 0; i < hidden.cols(); ++i)
    for (std::size_t g = 0; g < group_count; ++g) {
      double ss = 0.0;
      for (std::size_t j = g * gsize; j < (g + 1) * gsize; ++j)
        ss += hidden(j, i) * hidden(j, i);
      out(g, i) = std::sqrt(ss);
    }
  return out;
}

bool spd_solve(const Matrix& a, const Matrix& b, Matrix& x) {
  if (a.rows() != a.cols())
    raise(ErrorCode::DimMismatch, "spd_solve: matrix is not square");
  require_inner(a.rows(), b.rows(), "spd_solve");
  const std::size_t n = a.rows();

  // Lower Cholesky factor.
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }

  x = Matrix(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    // forward: L y = b
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    // backward: L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return true;
}

}  // namespace serial
}  // namespace sdsn::kernels
