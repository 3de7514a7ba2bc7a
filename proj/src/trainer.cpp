#include "sdsn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"
#include "sdsn/metrics.hpp"
#include "sdsn/snnm.hpp"

namespace sdsn {

namespace {

constexpr double kDivergenceCap = 1e12;

// Stream separation between stacked layers; layer 1 uses the caller's seed
// unchanged so a one-layer stack reproduces train_module exactly.
constexpr std::uint64_t kLayerSeedStride = 0x9E3779B97F4A7C15ULL;

struct ModuleRun {
  SnnmModule module;
  ModuleReport report;
  Matrix output;  // C x N on the training data
};

double ridge_objective(const HiddenActivations& h, const Matrix& U, const Matrix& T,
                       const HyperParams& hp, const GroupPartition& partition) {
  return objective_f1_given(h, U, T, hp.beta, partition) + hp.alpha * kernels::frobenius_sq(U);
}

ModuleRun train_module_impl(const Matrix& X, const LabelMatrix& T, const HyperParams& hp,
                            std::uint64_t seed) {
  hp.validate();
  if (X.cols() != T.examples())
    raise(ErrorCode::DimMismatch, "train_module: X has " + std::to_string(X.cols()) +
                                      " examples but labels have " +
                                      std::to_string(T.examples()));
  if (X.cols() == 0 || X.rows() == 0)
    raise(ErrorCode::DimMismatch, "train_module: empty feature matrix");
  if (!X.all_finite())
    raise(ErrorCode::NonFinite, "train_module: non-finite feature value");

  const auto t0 = std::chrono::steady_clock::now();
  const GroupPartition partition = make_group_partition(hp.hidden, hp.groups);

  ModuleRun run;
  run.module.activation = hp.activation;
  Matrix W = init_weights(X.rows(), hp.hidden, seed);

  HiddenActivations h = hidden_forward(W, X, hp.activation);
  Matrix U = solve_upper(h.act, T.onehot, hp.alpha);
  run.report.initial_objective = ridge_objective(h, U, T.onehot, hp, partition);
  run.report.epoch_objectives.reserve(hp.epochs);

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const Matrix grad = hp.grad_variant == GradVariant::F1
                            ? grad_f1_given(h, U, X, T.onehot, hp.beta, partition, hp.activation)
                            : grad_f2_given(h, X, T.onehot, hp.beta, partition, hp.activation);
    kernels::add_scaled(W, grad, -hp.epsilon);
    if (!W.all_finite())
      raise(ErrorCode::DivergedTraining,
            "non-finite weights after epoch " + std::to_string(epoch + 1) +
                " (reduce epsilon)");

    h = hidden_forward(W, X, hp.activation);
    // Divergence shows up in the objective the step was descending, with
    // the epoch's U; the ridge refit below would mask it.
    const double descended = ridge_objective(h, U, T.onehot, hp, partition);
    U = solve_upper(h.act, T.onehot, hp.alpha);
    const double objective = ridge_objective(h, U, T.onehot, hp, partition);
    if (!std::isfinite(descended) || descended > kDivergenceCap ||
        !std::isfinite(objective) || objective > kDivergenceCap)
      raise(ErrorCode::DivergedTraining,
            "objective " + std::to_string(std::max(descended, objective)) + " after epoch " +
                std::to_string(epoch + 1) + " (reduce epsilon)");
    run.report.epoch_objectives.push_back(objective);
  }

  run.module.W = std::move(W);
  run.module.U = std::move(U);
  run.output = module_output(run.module.U, h.act);

  std::vector<int> predicted(run.output.cols());
  for (std::size_t i = 0; i < run.output.cols(); ++i) {
    const double* y = run.output.col(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < run.output.rows(); ++c)
      if (y[c] > y[best]) best = c;
    predicted[i] = static_cast<int>(best);
  }
  run.report.train_accuracy = accuracy(predicted, T.labels);
  run.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace

Matrix init_weights(std::size_t input_dim, std::size_t hidden_units, std::uint64_t seed) {
  if (input_dim == 0 || hidden_units == 0)
    raise(ErrorCode::InvalidConfig, "init_weights: dimensions must be >= 1");
  Matrix w(input_dim, hidden_units);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 0.01);
  double* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = dist(gen);
  return w;
}

TrainedModule train_module(const Matrix& X, const LabelMatrix& T, const HyperParams& hp,
                           std::uint64_t seed) {
  ModuleRun run = train_module_impl(X, T, hp, seed);
  return TrainedModule{std::move(run.module), std::move(run.report)};
}

TrainResult train_stack(const Matrix& X, const LabelMatrix& T, const HyperParams& hp,
                        std::uint64_t seed) {
  hp.validate();

  TrainResult result;
  result.model.input_dim = X.rows();
  result.model.class_count = T.class_count;
  result.report.hp = hp;
  result.report.seed = seed;

  Matrix layer_input = X;
  for (std::size_t k = 0; k < hp.layers; ++k) {
    ModuleRun run = train_module_impl(layer_input, T, hp, seed + k * kLayerSeedStride);
    if (k + 1 < hp.layers) layer_input = vstack(X, run.output);
    result.model.modules.push_back(std::move(run.module));
    result.report.layers.push_back(std::move(run.report));
  }

  validate_stack(result.model);
  return result;
}

StackActivations stack_forward(const StackModel& model, const Matrix& X) {
  validate_stack(model);
  if (X.rows() != model.input_dim)
    raise(ErrorCode::DimMismatch, "stack_forward: X has " + std::to_string(X.rows()) +
                                      " rows but the model expects " +
                                      std::to_string(model.input_dim));

  StackActivations acts;
  acts.hidden.reserve(model.modules.size());
  acts.outputs.reserve(model.modules.size());

  Matrix layer_input = X;
  for (std::size_t k = 0; k < model.modules.size(); ++k) {
    const SnnmModule& m = model.modules[k];
    HiddenActivations h = hidden_forward(m.W, layer_input, m.activation);
    Matrix y = module_output(m.U, h.act);
    if (k + 1 < model.modules.size()) layer_input = vstack(X, y);
    acts.hidden.push_back(std::move(h.act));
    acts.outputs.push_back(std::move(y));
  }
  return acts;
}

std::vector<int> predict(const StackModel& model, const Matrix& X) {
  const StackActivations acts = stack_forward(model, X);
  const Matrix& y = acts.outputs.back();
  std::vector<int> labels(y.cols());
  for (std::size_t i = 0; i < y.cols(); ++i) {
    const double* col = y.col(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < y.rows(); ++c)
      if (col[c] > col[best]) best = c;
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace sdsn
