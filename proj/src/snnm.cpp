#include "sdsn/snnm.hpp"

#include <cmath>
#include <string>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"

namespace sdsn {

namespace {

void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) raise(code, message);
}

Matrix gram_with_ridge(const Matrix& hidden, double alpha) {
  Matrix gram = kernels::matmul_a_bt(hidden, hidden);
  if (alpha != 0.0)
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += alpha;
  return gram;
}

// Data-fit term of the lower-weight gradients: 2 X [dphi(A) o (U U^T H - U T)]^T,
// reorganized as U (U^T H - T) so no L x L intermediate is formed.
Matrix residual_grad(const HiddenActivations& h, const Matrix& U, const Matrix& X,
                     const Matrix& T, ActivationKind kind) {
  Matrix residual = kernels::matmul_at_b(U, h.act);  // C x N
  kernels::add_scaled(residual, T, -1.0);
  Matrix back = kernels::matmul(U, residual);  // L x N
  const Matrix dphi = activate_grad(h.pre, kind);
  double* b = back.data();
  const double* d = dphi.data();
  for (std::size_t i = 0; i < back.size(); ++i) b[i] *= d[i];
  Matrix grad = kernels::matmul_a_bt(X, back);  // D x L
  for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] *= 2.0;
  return grad;
}

// Sparsity term: X [dphi(A) o H o/ H~]^T with 0 where a whole group is zero.
Matrix penalty_grad(const HiddenActivations& h, const Matrix& X,
                    const GroupPartition& partition, ActivationKind kind) {
  const Matrix norms = kernels::group_norms_per_unit(h.act, partition.group_count());
  const Matrix dphi = activate_grad(h.pre, kind);
  Matrix scaled(h.act.rows(), h.act.cols());
  const double* a = h.act.data();
  const double* d = dphi.data();
  const double* n = norms.data();
  double* s = scaled.data();
  for (std::size_t i = 0; i < scaled.size(); ++i)
    s[i] = n[i] > 0.0 ? d[i] * a[i] / n[i] : 0.0;
  return kernels::matmul_a_bt(X, scaled);  // D x L
}

}  // namespace

Matrix activate(const Matrix& pre, ActivationKind kind) {
  return kind == ActivationKind::Sigmoid ? kernels::sigmoid(pre) : kernels::relu(pre);
}

Matrix activate_grad(const Matrix& pre, ActivationKind kind) {
  return kind == ActivationKind::Sigmoid ? kernels::sigmoid_grad(pre) : kernels::relu_grad(pre);
}

HiddenActivations hidden_forward(const Matrix& W, const Matrix& X, ActivationKind kind) {
  require(W.rows() == X.rows(), ErrorCode::DimMismatch,
          "hidden_forward: W has " + std::to_string(W.rows()) + " input rows but X has " +
              std::to_string(X.rows()));
  HiddenActivations h;
  h.pre = kernels::matmul_at_b(W, X);
  h.act = activate(h.pre, kind);
  return h;
}

Matrix solve_upper(const Matrix& hidden, const Matrix& targets, double alpha) {
  require(hidden.cols() == targets.cols(), ErrorCode::DimMismatch,
          "solve_upper: hidden has " + std::to_string(hidden.cols()) + " columns but targets has " +
              std::to_string(targets.cols()));
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorCode::InvalidConfig,
          "solve_upper: alpha must be finite and >= 0");

  const Matrix rhs = kernels::matmul_a_bt(hidden, targets);  // L x C
  Matrix gram = gram_with_ridge(hidden, alpha);

  Matrix upper;
  if (kernels::spd_solve(gram, rhs, upper)) return upper;
  if (alpha > 0.0)
    raise(ErrorCode::SingularSystem, "solve_upper: ridge system is not positive definite");

  double trace = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i) trace += gram(i, i);
  const double jitter = 1e-10 * trace / static_cast<double>(gram.rows());
  if (jitter > 0.0) {
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += jitter;
    if (kernels::spd_solve(gram, rhs, upper)) return upper;
  }
  raise(ErrorCode::SingularSystem,
        "solve_upper: Gram matrix is singular at alpha = 0 (jitter retry failed)");
}

Matrix group_norms(const Matrix& hidden, const GroupPartition& partition) {
  require(partition.hidden_units() == hidden.rows(), ErrorCode::DimMismatch,
          "group_norms: partition covers " + std::to_string(partition.hidden_units()) +
              " units but hidden has " + std::to_string(hidden.rows()) + " rows");
  return kernels::group_norms_per_unit(hidden, partition.group_count());
}

double penalty(const Matrix& hidden, const GroupPartition& partition, PenaltyKind kind) {
  if (kind == PenaltyKind::L1) return kernels::sum_abs(hidden);
  require(partition.hidden_units() == hidden.rows(), ErrorCode::DimMismatch,
          "penalty: partition covers " + std::to_string(partition.hidden_units()) +
              " units but hidden has " + std::to_string(hidden.rows()) + " rows");
  return kernels::sum(kernels::group_norms_per_group(hidden, partition.group_count()));
}

Matrix module_output(const Matrix& upper, const Matrix& hidden) {
  require(upper.rows() == hidden.rows(), ErrorCode::DimMismatch,
          "module_output: U has " + std::to_string(upper.rows()) + " rows but hidden has " +
              std::to_string(hidden.rows()));
  return kernels::matmul_at_b(upper, hidden);
}

double objective_full(const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& T,
                      const HyperParams& hp, const GroupPartition& partition) {
  const HiddenActivations h = hidden_forward(W, X, hp.activation);
  Matrix residual = module_output(U, h.act);
  require(residual.rows() == T.rows() && residual.cols() == T.cols(), ErrorCode::DimMismatch,
          "objective_full: output and target shapes differ");
  kernels::add_scaled(residual, T, -1.0);
  return kernels::frobenius_sq(residual) + hp.alpha * kernels::frobenius_sq(U) +
         hp.beta * penalty(h.act, partition, hp.penalty);
}

double objective_f1_given(const HiddenActivations& h, const Matrix& U, const Matrix& T,
                          double beta, const GroupPartition& partition) {
  Matrix residual = module_output(U, h.act);
  require(residual.rows() == T.rows() && residual.cols() == T.cols(), ErrorCode::DimMismatch,
          "objective_f1: output and target shapes differ");
  kernels::add_scaled(residual, T, -1.0);
  return kernels::frobenius_sq(residual) +
         beta * penalty(h.act, partition, PenaltyKind::MixedNorm);
}

double objective_f1(const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& T,
                    double beta, const GroupPartition& partition, ActivationKind kind) {
  return objective_f1_given(hidden_forward(W, X, kind), U, T, beta, partition);
}

Matrix grad_f1_given(const HiddenActivations& h, const Matrix& U, const Matrix& X,
                     const Matrix& T, double beta, const GroupPartition& partition,
                     ActivationKind kind) {
  require(U.cols() == T.rows() && h.act.cols() == T.cols(), ErrorCode::DimMismatch,
          "grad_f1: output and target shapes differ");
  Matrix grad = residual_grad(h, U, X, T, kind);
  if (beta != 0.0) kernels::add_scaled(grad, penalty_grad(h, X, partition, kind), beta);
  return grad;
}

Matrix grad_f1(const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& T,
               double beta, const GroupPartition& partition, ActivationKind kind) {
  return grad_f1_given(hidden_forward(W, X, kind), U, X, T, beta, partition, kind);
}

double objective_f2(const Matrix& W, const Matrix& X, const Matrix& T,
                    double beta, const GroupPartition& partition, ActivationKind kind) {
  const HiddenActivations h = hidden_forward(W, X, kind);
  const Matrix upper = solve_upper(h.act, T, 0.0);
  return objective_f1_given(h, upper, T, beta, partition);
}

Matrix grad_f2_given(const HiddenActivations& h, const Matrix& X, const Matrix& T,
                     double beta, const GroupPartition& partition, ActivationKind kind) {
  // U is at the alpha = 0 optimum for the current W, so the total derivative
  // through U vanishes and the fixed-U gradient is exact here.
  const Matrix upper = solve_upper(h.act, T, 0.0);
  return grad_f1_given(h, upper, X, T, beta, partition, kind);
}

Matrix grad_f2(const Matrix& W, const Matrix& X, const Matrix& T,
               double beta, const GroupPartition& partition, ActivationKind kind) {
  return grad_f2_given(hidden_forward(W, X, kind), X, T, beta, partition, kind);
}

}  // namespace sdsn
