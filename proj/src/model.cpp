#include "sdsn/model.hpp"

#include <cmath>

#include "sdsn/errors.hpp"

namespace sdsn {

const char* to_string(ActivationKind kind) {
  return kind == ActivationKind::Sigmoid ? "sigmoid" : "relu";
}

const char* to_string(GradVariant variant) {
  return variant == GradVariant::F1 ? "f1" : "f2";
}

const char* to_string(PenaltyKind kind) {
  return kind == PenaltyKind::MixedNorm ? "mixed" : "l1";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "sigmoid" || name == "sigm") return ActivationKind::Sigmoid;
  if (name == "relu") return ActivationKind::Relu;
  raise(ErrorCode::InvalidConfig, "unknown activation '" + name + "' (expected sigmoid or relu)");
}

GradVariant variant_from_string(const std::string& name) {
  if (name == "f1" || name == "F1") return GradVariant::F1;
  if (name == "f2" || name == "F2") return GradVariant::F2;
  raise(ErrorCode::InvalidConfig, "unknown gradient variant '" + name + "' (expected f1 or f2)");
}

PenaltyKind penalty_from_string(const std::string& name) {
  if (name == "mixed" || name == "l1l2") return PenaltyKind::MixedNorm;
  if (name == "l1") return PenaltyKind::L1;
  raise(ErrorCode::InvalidConfig, "unknown penalty '" + name + "' (expected mixed or l1)");
}

LabelMatrix one_hot_encode(const std::vector<int>& labels, std::size_t class_count) {
  if (class_count == 0) raise(ErrorCode::InvalidConfig, "class count must be >= 1");
  LabelMatrix t;
  t.class_count = class_count;
  t.labels = labels;
  t.onehot = Matrix(class_count, labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= class_count)
      raise(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " at index " +
                                            std::to_string(i) + " is outside [0, " +
                                            std::to_string(class_count) + ")");
    t.onehot(static_cast<std::size_t>(label), i) = 1.0;
  }
  return t;
}

GroupPartition::GroupPartition(std::size_t hidden_units, std::size_t group_count)
    : hidden_units_(hidden_units), group_count_(group_count) {}

GroupPartition make_group_partition(std::size_t hidden_units, std::size_t group_count) {
  if (hidden_units == 0 || group_count == 0)
    raise(ErrorCode::InvalidConfig, "hidden units and group count must be >= 1");
  if (hidden_units % group_count != 0)
    raise(ErrorCode::NonDivisible, "group count " + std::to_string(group_count) +
                                       " does not divide " + std::to_string(hidden_units) +
                                       " hidden units");
  return GroupPartition(hidden_units, group_count);
}

void validate_stack(const StackModel& model) {
  if (model.modules.empty())
    raise(ErrorCode::InvariantViolation, "stack has no modules");
  if (model.input_dim == 0 || model.class_count == 0)
    raise(ErrorCode::InvariantViolation, "stack input_dim and class_count must be >= 1");

  for (std::size_t k = 0; k < model.modules.size(); ++k) {
    const SnnmModule& m = model.modules[k];
    const std::size_t expected_in =
        k == 0 ? model.input_dim : model.input_dim + model.class_count;
    if (m.input_dim() != expected_in)
      raise(ErrorCode::DimMismatch, "layer " + std::to_string(k + 1) + ": expected input dim " +
                                        std::to_string(expected_in) + ", found " +
                                        std::to_string(m.input_dim()));
    if (m.W.cols() != m.U.rows())
      raise(ErrorCode::DimMismatch, "layer " + std::to_string(k + 1) + ": W has " +
                                        std::to_string(m.W.cols()) + " hidden units but U has " +
                                        std::to_string(m.U.rows()) + " rows");
    if (m.class_count() != model.class_count)
      raise(ErrorCode::DimMismatch, "layer " + std::to_string(k + 1) + ": expected " +
                                        std::to_string(model.class_count) + " classes, found " +
                                        std::to_string(m.class_count()));
    if (!m.W.all_finite() || !m.U.all_finite())
      raise(ErrorCode::InvariantViolation,
            "layer " + std::to_string(k + 1) + ": non-finite weight");
  }
}

void HyperParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    raise(ErrorCode::InvalidConfig, "epsilon must be finite and > 0");
  if (alpha < 0.0 || !std::isfinite(alpha))
    raise(ErrorCode::InvalidConfig, "alpha must be finite and >= 0");
  if (beta < 0.0 || !std::isfinite(beta))
    raise(ErrorCode::InvalidConfig, "beta must be finite and >= 0");
  if (groups == 0) raise(ErrorCode::InvalidConfig, "groups must be >= 1");
  if (epochs == 0) raise(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (layers == 0) raise(ErrorCode::InvalidConfig, "layers must be >= 1");
  if (hidden == 0) raise(ErrorCode::InvalidConfig, "hidden must be >= 1");
  if (hidden % groups != 0)
    raise(ErrorCode::NonDivisible, "groups (" + std::to_string(groups) +
                                       ") must divide hidden (" + std::to_string(hidden) + ")");
  if (penalty == PenaltyKind::L1 && beta > 0.0)
    raise(ErrorCode::InvalidConfig,
          "training uses the mixed-norm gradient; penalty=l1 requires beta = 0");
}

}  // namespace sdsn
