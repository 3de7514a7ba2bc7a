#pragma once

#include <cstdint>
#include <functional>

#include "sdsn/matrix.hpp"
#include "sdsn/model.hpp"

namespace sdsn {

/// Central finite differences (f(W + h E) - f(W - h E)) / (2h) per entry.
/// Never touches the analytic gradient code.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                        double step);

/// ||A - B||_F / max(||A||_F, ||B||_F, tiny)
double relative_error(const Matrix& a, const Matrix& b);

struct GradCheckConfig {
  std::size_t input_dim = 6;
  std::size_t hidden = 8;
  std::size_t examples = 10;
  std::size_t classes = 3;
  std::size_t groups = 4;
  double beta = 0.01;
  double step = 1e-5;
  GradVariant variant = GradVariant::F1;
  ActivationKind activation = ActivationKind::Sigmoid;
  std::uint64_t seed = 42;
  /// Test-only: perturbs one term of the analytic gradient so the check
  /// must fail (negative control for the CLI exit-code contract).
  bool corrupt = false;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  double frobenius_rel_error = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  double step = 0.0;
  GradVariant variant = GradVariant::F1;
  ActivationKind activation = ActivationKind::Sigmoid;
  std::size_t resamples = 0;
};

/// Builds a random instance, evaluates the analytic gradient against the
/// finite-difference oracle and reports entry-wise and Frobenius errors.
/// ReLU instances are resampled until every |preactivation| exceeds 0.1
/// (at most 100 tries, then KinkAvoidanceFailed).
GradCheckReport run_gradcheck(const GradCheckConfig& config);

/// Pass threshold on max_rel_error: 1e-6 for F1, 1e-4 for F2.
double gradcheck_threshold(GradVariant variant);

}  // namespace sdsn
