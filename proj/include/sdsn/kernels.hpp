#pragma once

#include <cstddef>

#include "sdsn/matrix.hpp"

namespace sdsn::kernels {

/// Selects the implementation used by the dispatching kernels below.
/// Parallel kernels assign each output element a fixed summation order,
/// so results are identical for any thread count; Serial routes to the
/// naive reference implementations kept for testing and benchmarking.
enum class ExecMode { Serial, Parallel };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);

class ExecModeGuard {
public:
  explicit ExecModeGuard(ExecMode mode) : saved_(exec_mode()) { set_exec_mode(mode); }
  ~ExecModeGuard() { set_exec_mode(saved_); }
  ExecModeGuard(const ExecModeGuard&) = delete;
  ExecModeGuard& operator=(const ExecModeGuard&) = delete;

private:
  ExecMode saved_;
};

/// Applies the SDSN_THREADS environment variable (if set) as the OpenMP
/// thread cap. Call once at process start.
void init_threads_from_env();

int max_threads();

// Naive reference implementations. Plain loops, no OpenMP. These double as
// the independent oracle the parallel kernels are tested against.
namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix sigmoid(const Matrix& pre);
Matrix relu(const Matrix& pre);
Matrix sigmoid_grad(const Matrix& pre);
Matrix relu_grad(const Matrix& pre);
Matrix group_norms_per_unit(const Matrix& hidden, std::size_t group_count);
Matrix group_norms_per_group(const Matrix& hidden, std::size_t group_count);
bool spd_solve(const Matrix& a, const Matrix& b, Matrix& x);
}  // namespace serial

// OpenMP implementations.
namespace par {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix sigmoid(const Matrix& pre);
Matrix relu(const Matrix& pre);
Matrix sigmoid_grad(const Matrix& pre);
Matrix relu_grad(const Matrix& pre);
Matrix group_norms_per_unit(const Matrix& hidden, std::size_t group_count);
Matrix group_norms_per_group(const Matrix& hidden, std::size_t group_count);
bool spd_solve(const Matrix& a, const Matrix& b, Matrix& x);
}  // namespace par

// Dispatching entry points used by the rest of the library.

/// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A^T * B
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
/// C = A * B^T
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix sigmoid(const Matrix& pre);
Matrix relu(const Matrix& pre);
Matrix sigmoid_grad(const Matrix& pre);
Matrix relu_grad(const Matrix& pre);

/// Per-unit group norms: out(j, i) = sqrt(sum over j' in j's group of h(j', i)^2).
/// Groups are the contiguous equal-size blocks of make_group_partition.
Matrix group_norms_per_unit(const Matrix& hidden, std::size_t group_count);
/// Per-group norms, one row per group (G x N).
Matrix group_norms_per_group(const Matrix& hidden, std::size_t group_count);

/// Solves A X = B for symmetric positive-definite A via Cholesky.
/// Returns false if a pivot is not strictly positive.
bool spd_solve(const Matrix& a, const Matrix& b, Matrix& x);

// Cheap O(n) helpers. Serial with a fixed accumulation order so every
// result is reproducible bit-for-bit regardless of thread count.
double sum(const Matrix& m);
double sum_abs(const Matrix& m);
double frobenius_sq(const Matrix& m);
double frobenius(const Matrix& m);

/// target += scale * delta
void add_scaled(Matrix& target, const Matrix& delta, double scale);

}  // namespace sdsn::kernels
