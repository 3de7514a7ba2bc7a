#include "sdsn/gradcheck.hpp"

#include <cmath>
#include <random>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"
#include "sdsn/snnm.hpp"

namespace sdsn {

namespace {

constexpr double kTiny = 1e-300;
constexpr std::size_t kMaxResamples = 100;
constexpr double kKinkMargin = 0.1;

struct Instance {
  Matrix X;
  Matrix W;
  Matrix T;
  std::size_t resamples = 0;
};

void fill_gaussian(Matrix& m, double sd, std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, sd);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
}

// ReLU instances are resampled whole until every preactivation clears the
// kink margin; the weight scale keeps that event likely per draw.
Instance build_instance(const GradCheckConfig& cfg) {
  std::mt19937_64 gen(cfg.seed);
  std::uniform_int_distribution<int> label_dist(0, static_cast<int>(cfg.classes) - 1);
  const double weight_sd = (cfg.activation == ActivationKind::Relu ? 5.0 : 1.0) /
                           std::sqrt(static_cast<double>(cfg.input_dim));

  Instance inst;
  inst.T = Matrix(cfg.classes, cfg.examples);
  for (std::size_t i = 0; i < cfg.examples; ++i)
    inst.T(static_cast<std::size_t>(label_dist(gen)), i) = 1.0;

  for (std::size_t attempt = 0; attempt <= kMaxResamples; ++attempt) {
    inst.X = Matrix(cfg.input_dim, cfg.examples);
    inst.W = Matrix(cfg.input_dim, cfg.hidden);
    fill_gaussian(inst.X, 1.0, gen);
    fill_gaussian(inst.W, weight_sd, gen);
    if (cfg.activation != ActivationKind::Relu) return inst;

    const Matrix pre = kernels::matmul_at_b(inst.W, inst.X);
    bool clear = true;
    for (std::size_t i = 0; i < pre.size() && clear; ++i)
      clear = std::abs(pre.data()[i]) > kKinkMargin;
    if (clear) return inst;
    inst.resamples = attempt + 1;
  }
  raise(ErrorCode::KinkAvoidanceFailed,
        "no instance with all |preactivations| > 0.1 after " +
            std::to_string(kMaxResamples) + " resamples");
}

}  // namespace

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                        double step) {
  if (!(step > 0.0)) raise(ErrorCode::InvalidConfig, "finite_diff_grad: step must be > 0");
  Matrix w = at;
  Matrix grad(at.rows(), at.cols());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w.data()[i];
    w.data()[i] = saved + step;
    const double fp = f(w);
    w.data()[i] = saved - step;
    const double fm = f(w);
    w.data()[i] = saved;
    grad.data()[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

double relative_error(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    raise(ErrorCode::DimMismatch, "relative_error: shapes differ");
  double diff_sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    diff_sq += d * d;
  }
  const double denom =
      std::max({kernels::frobenius(a), kernels::frobenius(b), kTiny});
  return std::sqrt(diff_sq) / denom;
}

GradCheckReport run_gradcheck(const GradCheckConfig& cfg) {
  if (cfg.input_dim == 0 || cfg.hidden == 0 || cfg.examples == 0 || cfg.classes == 0)
    raise(ErrorCode::InvalidConfig, "run_gradcheck: dimensions must be >= 1");
  const GroupPartition partition = make_group_partition(cfg.hidden, cfg.groups);

  const Instance inst = build_instance(cfg);

  Matrix analytic;
  std::function<double(const Matrix&)> objective;
  if (cfg.variant == GradVariant::F1) {
    const HiddenActivations h = hidden_forward(inst.W, inst.X, cfg.activation);
    const Matrix upper = solve_upper(h.act, inst.T, 0.5);
    analytic = grad_f1(inst.W, upper, inst.X, inst.T, cfg.beta, partition, cfg.activation);
    objective = [&, upper](const Matrix& w) {
      return objective_f1(w, upper, inst.X, inst.T, cfg.beta, partition, cfg.activation);
    };
  } else {
    analytic = grad_f2(inst.W, inst.X, inst.T, cfg.beta, partition, cfg.activation);
    objective = [&](const Matrix& w) {
      return objective_f2(w, inst.X, inst.T, cfg.beta, partition, cfg.activation);
    };
  }

  if (cfg.corrupt) {
    // Scale one term so the check must trip: the sparsity term when present,
    // otherwise the data term.
    if (cfg.beta > 0.0) {
      const Matrix base = cfg.variant == GradVariant::F1
                              ? grad_f1(inst.W, solve_upper(hidden_forward(inst.W, inst.X,
                                                                           cfg.activation).act,
                                                            inst.T, 0.5),
                                        inst.X, inst.T, 0.0, partition, cfg.activation)
                              : grad_f2(inst.W, inst.X, inst.T, 0.0, partition, cfg.activation);
      Matrix sparsity = analytic;
      kernels::add_scaled(sparsity, base, -1.0);
      kernels::add_scaled(analytic, sparsity, 0.5);
    } else {
      for (std::size_t i = 0; i < analytic.size(); ++i) analytic.data()[i] *= 1.001;
    }
  }

  const Matrix numeric = finite_diff_grad(objective, inst.W, cfg.step);

  GradCheckReport report;
  report.step = cfg.step;
  report.variant = cfg.variant;
  report.activation = cfg.activation;
  report.resamples = inst.resamples;
  report.frobenius_rel_error = relative_error(analytic, numeric);

  // Entry-wise errors against a scale floor, so entries that are tiny
  // relative to the gradient as a whole cannot fake a failure.
  const double floor =
      1e-2 * std::max({kernels::frobenius(analytic), kernels::frobenius(numeric), kTiny});
  double total = 0.0;
  for (std::size_t c = 0; c < analytic.cols(); ++c)
    for (std::size_t r = 0; r < analytic.rows(); ++r) {
      const double a = analytic(r, c);
      const double b = numeric(r, c);
      const double err =
          std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
      total += err;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_row = r;
        report.worst_col = c;
      }
    }
  report.mean_rel_error = total / static_cast<double>(analytic.size());
  return report;
}

double gradcheck_threshold(GradVariant variant) {
  return variant == GradVariant::F1 ? 1e-6 : 1e-4;
}

}  // namespace sdsn
