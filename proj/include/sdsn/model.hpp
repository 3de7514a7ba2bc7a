#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdsn/matrix.hpp"

namespace sdsn {

enum class ActivationKind { Sigmoid, Relu };
enum class GradVariant { F1, F2 };
enum class PenaltyKind { MixedNorm, L1 };

const char* to_string(ActivationKind kind);
const char* to_string(GradVariant variant);
const char* to_string(PenaltyKind kind);

ActivationKind activation_from_string(const std::string& name);
GradVariant variant_from_string(const std::string& name);
PenaltyKind penalty_from_string(const std::string& name);

/// One-hot targets (C x N) together with the label vector they encode.
struct LabelMatrix {
  std::size_t class_count = 0;
  Matrix onehot;
  std::vector<int> labels;

  std::size_t examples() const { return labels.size(); }
};

LabelMatrix one_hot_encode(const std::vector<int>& labels, std::size_t class_count);

/// Equal-size contiguous blocks of hidden units; group g covers
/// [g * L/G, (g+1) * L/G).
class GroupPartition {
public:
  GroupPartition() = default;
  GroupPartition(std::size_t hidden_units, std::size_t group_count);

  std::size_t hidden_units() const { return hidden_units_; }
  std::size_t group_count() const { return group_count_; }
  std::size_t group_size() const { return hidden_units_ / group_count_; }
  std::size_t group_of(std::size_t unit) const { return unit / group_size(); }

  std::size_t group_begin(std::size_t g) const { return g * group_size(); }
  std::size_t group_end(std::size_t g) const { return (g + 1) * group_size(); }

private:
  std::size_t hidden_units_ = 1;
  std::size_t group_count_ = 1;
};

GroupPartition make_group_partition(std::size_t hidden_units, std::size_t group_count);

/// One module: nonlinear lower map W (D_k x L) and linear upper map U (L x C).
struct SnnmModule {
  Matrix W;
  Matrix U;
  ActivationKind activation = ActivationKind::Sigmoid;

  std::size_t input_dim() const { return W.rows(); }
  std::size_t hidden_units() const { return W.cols(); }
  std::size_t class_count() const { return U.cols(); }
};

/// Stack wiring: module 1 consumes the raw input (D rows); every later
/// module consumes the raw input stacked above the previous module's
/// output (D + C rows).
struct StackModel {
  std::size_t input_dim = 0;
  std::size_t class_count = 0;
  std::vector<SnnmModule> modules;

  std::size_t layer_count() const { return modules.size(); }
};

/// Throws DimMismatch / InvariantViolation naming the offending module if
/// the stack wiring or finiteness invariants do not hold.
void validate_stack(const StackModel& model);

struct HyperParams {
  double epsilon = 0.1;    // learning rate, > 0
  double alpha = 0.5;      // ridge weight, >= 0
  double beta = 0.001;     // sparsity weight, >= 0
  std::size_t groups = 4;  // must divide hidden
  std::size_t epochs = 5;
  std::size_t layers = 2;
  std::size_t hidden = 500;
  ActivationKind activation = ActivationKind::Sigmoid;
  GradVariant grad_variant = GradVariant::F1;
  PenaltyKind penalty = PenaltyKind::MixedNorm;
  std::uint64_t seed = 42;

  /// Throws InvalidConfig / NonDivisible on out-of-range values.
  void validate() const;
};

}  // namespace sdsn
