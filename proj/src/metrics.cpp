#include "sdsn/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "sdsn/errors.hpp"
#include "sdsn/kernels.hpp"

namespace sdsn {

double hoyer_sparseness(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 2)
    raise(ErrorCode::LengthMismatch, "hoyer_sparseness needs at least 2 entries, got " +
                                         std::to_string(n));
  double l1 = 0.0, sq = 0.0;
  for (double x : v) {
    l1 += std::abs(x);
    sq += x * x;
  }
  const double l2 = std::sqrt(sq);
  if (l2 == 0.0) return 0.0;  // all-zero vector, by convention
  const double root_n = std::sqrt(static_cast<double>(n));
  const double s = (root_n - l1 / l2) / (root_n - 1.0);
  return std::clamp(s, 0.0, 1.0);
}

double mean_hidden_sparseness(const StackModel& model, const Matrix& X, std::size_t layer) {
  if (layer == 0 || layer > model.layer_count())
    raise(ErrorCode::DimMismatch, "layer " + std::to_string(layer) + " out of range [1, " +
                                      std::to_string(model.layer_count()) + "]");
  const StackActivations acts = stack_forward(model, X);
  const Matrix& hidden = acts.hidden[layer - 1];
  double total = 0.0;
  for (std::size_t i = 0; i < hidden.cols(); ++i)
    total += hoyer_sparseness(std::span<const double>(hidden.col(i), hidden.rows()));
  return total / static_cast<double>(hidden.cols());
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    raise(ErrorCode::LengthMismatch, "accuracy: " + std::to_string(predicted.size()) +
                                         " predictions vs " + std::to_string(truth.size()) +
                                         " labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < class_count; ++i) t += at(i, i);
  return t;
}

Matrix ConfusionMatrix::row_normalized() const {
  Matrix m(class_count, class_count);
  for (std::size_t r = 0; r < class_count; ++r) {
    std::size_t row_total = 0;
    for (std::size_t c = 0; c < class_count; ++c) row_total += at(r, c);
    if (row_total == 0) continue;
    for (std::size_t c = 0; c < class_count; ++c)
      m(r, c) = static_cast<double>(at(r, c)) / static_cast<double>(row_total);
  }
  return m;
}

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth,
                          std::size_t class_count) {
  if (predicted.size() != truth.size() || predicted.empty())
    raise(ErrorCode::LengthMismatch, "confusion: " + std::to_string(predicted.size()) +
                                         " predictions vs " + std::to_string(truth.size()) +
                                         " labels");
  ConfusionMatrix cm;
  cm.class_count = class_count;
  cm.counts.assign(class_count * class_count, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= class_count ||
        static_cast<std::size_t>(t) >= class_count)
      raise(ErrorCode::LabelOutOfRange, "confusion: label outside [0, " +
                                            std::to_string(class_count) + ") at index " +
                                            std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(t) * class_count + static_cast<std::size_t>(p)];
  }
  return cm;
}

double time_inference(const StackModel& model, const Matrix& X, std::size_t repeats,
                      bool parallel) {
  if (repeats < 3)
    raise(ErrorCode::InvalidConfig, "time_inference needs repeats >= 3");
  kernels::ExecModeGuard guard(parallel ? kernels::ExecMode::Parallel
                                        : kernels::ExecMode::Serial);
  stack_forward(model, X);  // warm-up

  std::vector<double> per_example_ms;
  per_example_ms.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    stack_forward(model, X);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    per_example_ms.push_back(ms / static_cast<double>(X.cols()));
  }
  std::sort(per_example_ms.begin(), per_example_ms.end());
  const std::size_t mid = per_example_ms.size() / 2;
  if (per_example_ms.size() % 2 == 1) return per_example_ms[mid];
  return 0.5 * (per_example_ms[mid - 1] + per_example_ms[mid]);
}

}  // namespace sdsn
