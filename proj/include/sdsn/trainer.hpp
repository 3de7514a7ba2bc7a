#pragma once

#include <cstdint>
#include <vector>

#include "sdsn/matrix.hpp"
#include "sdsn/model.hpp"

namespace sdsn {

struct ModuleReport {
  double initial_objective = 0.0;           // before the first update
  std::vector<double> epoch_objectives;     // one entry per epoch, after the update
  double train_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  HyperParams hp;
  std::uint64_t seed = 0;
  std::vector<ModuleReport> layers;
};

struct TrainedModule {
  SnnmModule module;
  ModuleReport report;
};

struct TrainResult {
  StackModel model;
  TrainReport report;
};

/// D x L weights, i.i.d. Normal(0, 0.01^2), filled in column-major order.
/// Deterministic in the seed.
Matrix init_weights(std::size_t input_dim, std::size_t hidden_units, std::uint64_t seed);

/// Full-batch gradient descent on the lower weights for hp.epochs epochs,
/// then a ridge solve for the upper weights. F1 refreshes U from the
/// current hidden activations before every gradient step; F2 substitutes
/// the alpha = 0 closed form inside the gradient and never needs an
/// explicit U until the final solve.
TrainedModule train_module(const Matrix& X, const LabelMatrix& T, const HyperParams& hp,
                           std::uint64_t seed);

/// Trains hp.layers modules, feeding [X; Y^k] to layer k+1.
TrainResult train_stack(const Matrix& X, const LabelMatrix& T, const HyperParams& hp,
                        std::uint64_t seed);

struct StackActivations {
  std::vector<Matrix> hidden;   // per layer, L x N
  std::vector<Matrix> outputs;  // per layer, C x N
};

StackActivations stack_forward(const StackModel& model, const Matrix& X);

/// Argmax over classes of the last layer's output; ties go to the lowest index.
std::vector<int> predict(const StackModel& model, const Matrix& X);

}  // namespace sdsn
