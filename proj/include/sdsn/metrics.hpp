#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdsn/matrix.hpp"
#include "sdsn/trainer.hpp"

namespace sdsn {

/// Hoyer sparseness (sqrt(n) - l1/l2) / (sqrt(n) - 1), in [0, 1];
/// 1 for a one-hot vector, 0 for a constant vector. The all-zero vector
/// maps to 0 by convention so dead ReLU columns do not abort evaluation.
double hoyer_sparseness(std::span<const double> v);

/// Mean per-column Hoyer sparseness of layer k's hidden activations
/// (k is 1-based).
double mean_hidden_sparseness(const StackModel& model, const Matrix& X, std::size_t layer);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Counts with true class as row and predicted class as column.
struct ConfusionMatrix {
  std::size_t class_count = 0;
  std::vector<std::size_t> counts;  // row-major C x C

  std::size_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * class_count + pred];
  }
  std::size_t total() const;
  std::size_t trace() const;
  Matrix row_normalized() const;
};

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth,
                          std::size_t class_count);

/// Median over `repeats` of (full-batch forward wall time / N), in ms.
/// Runs the forward pass single-threaded unless `parallel` is set, after
/// one warm-up pass.
double time_inference(const StackModel& model, const Matrix& X, std::size_t repeats,
                      bool parallel = false);

}  // namespace sdsn
