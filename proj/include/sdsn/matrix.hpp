#pragma once

#include <cstddef>
#include <vector>

namespace sdsn {

/// Dense f64 matrix, column-major storage. Feature matrices follow the
/// one-example-per-column convention throughout the library.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double* col(std::size_t c) { return data_.data() + c * rows_; }
  const double* col(std::size_t c) const { return data_.data() + c * rows_; }

  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);

/// Stacks the rows of `top` above the rows of `bottom`; column counts must match.
Matrix vstack(const Matrix& top, const Matrix& bottom);

}  // namespace sdsn
