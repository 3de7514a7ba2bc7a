#include "sdsn/matrix.hpp"

#include <cmath>

#include "sdsn/errors.hpp"

namespace sdsn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) t(c, r) = m(r, c);
  return t;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols())
    raise(ErrorCode::DimMismatch, "vstack: column counts differ (" +
                                      std::to_string(top.cols()) + " vs " +
                                      std::to_string(bottom.cols()) + ")");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  for (std::size_t c = 0; c < out.cols(); ++c) {
    double* dst = out.col(c);
    const double* t = top.col(c);
    const double* b = bottom.col(c);
    for (std::size_t r = 0; r < top.rows(); ++r) dst[r] = t[r];
    for (std::size_t r = 0; r < bottom.rows(); ++r) dst[top.rows() + r] = b[r];
  }
  return out;
}

}  // namespace sdsn
