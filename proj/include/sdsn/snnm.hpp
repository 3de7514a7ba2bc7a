#pragma once

#include "sdsn/matrix.hpp"
#include "sdsn/model.hpp"

namespace sdsn {

/// Hidden layer state: preactivations A = W^T X and activations phi(A).
/// A is kept so activation derivatives are evaluated on the preactivations
/// rather than reconstructed from the activations.
struct HiddenActivations {
  Matrix pre;  // L x N
  Matrix act;  // L x N
};

Matrix activate(const Matrix& pre, ActivationKind kind);

/// Elementwise derivative of the activation, evaluated on preactivations.
/// ReLU uses the zero branch at exactly 0.
Matrix activate_grad(const Matrix& pre, ActivationKind kind);

HiddenActivations hidden_forward(const Matrix& W, const Matrix& X, ActivationKind kind);

/// Ridge solution of min_U ||U^T H - T||_F^2 + alpha ||U||_F^2 via an SPD
/// Cholesky solve of (H H^T + alpha I) U = H T^T. For alpha = 0 a plain
/// solve is attempted first, then retried once with a jitter of
/// 1e-10 * trace(Gram) / L before SingularSystem is raised.
Matrix solve_upper(const Matrix& hidden, const Matrix& targets, double alpha);

/// Per-unit group-norm matrix: entry (j, i) is the Euclidean norm of
/// column i restricted to j's group.
Matrix group_norms(const Matrix& hidden, const GroupPartition& partition);

/// MixedNorm: sum over groups and examples of the group's column norm.
/// L1: sum of absolute entries.
double penalty(const Matrix& hidden, const GroupPartition& partition, PenaltyKind kind);

/// Y = U^T H
Matrix module_output(const Matrix& upper, const Matrix& hidden);

/// ||U^T H - T||_F^2 + alpha ||U||_F^2 + beta * penalty(H, hp.penalty)
double objective_full(const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& T,
                      const HyperParams& hp, const GroupPartition& partition);

/// Squared error plus mixed-norm sparsity with U held fixed.
double objective_f1(const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& T,
                    double beta, const GroupPartition& partition, ActivationKind kind);

/// Gradient of objective_f1 in W. The sparsity term divides by the group
/// norms; entries whose group norm is zero contribute 0 (subgradient at 0).
Matrix grad_f1(const Matrix& W, const Matrix& U, const Matrix& X, const Matrix& T,
               double beta, const GroupPartition& partition, ActivationKind kind);

/// Squared error with U substituted by its alpha = 0 closed form, plus the
/// mixed-norm sparsity term.
double objective_f2(const Matrix& W, const Matrix& X, const Matrix& T,
                    double beta, const GroupPartition& partition, ActivationKind kind);

/// Gradient of objective_f2 in W.
Matrix grad_f2(const Matrix& W, const Matrix& X, const Matrix& T,
               double beta, const GroupPartition& partition, ActivationKind kind);

// Variants reusing an already-computed forward pass; the trainer's inner
// loop uses these so each epoch runs a single hidden forward.
double objective_f1_given(const HiddenActivations& h, const Matrix& U, const Matrix& T,
                          double beta, const GroupPartition& partition);
Matrix grad_f1_given(const HiddenActivations& h, const Matrix& U, const Matrix& X,
                     const Matrix& T, double beta, const GroupPartition& partition,
                     ActivationKind kind);
Matrix grad_f2_given(const HiddenActivations& h, const Matrix& X, const Matrix& T,
                     double beta, const GroupPartition& partition, ActivationKind kind);

}  // namespace sdsn
