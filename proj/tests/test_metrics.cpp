#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "sdsn/errors.hpp"
#include "sdsn/metrics.hpp"
#include "sdsn/trainer.hpp"

using namespace sdsn;

TEST_CASE("hoyer sparseness of one-hot and constant vectors") {
  for (std::size_t n : {2u, 4u, 9u}) {
    std::vector<double> onehot(n, 0.0);
    onehot[n / 2] = 3.7;
    CHECK(hoyer_sparseness(onehot) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> constant(n, -0.4);
    CHECK(hoyer_sparseness(constant) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("hoyer sparseness hand-computed value") {
  const std::vector<double> v{1.0, 0.0, 0.0, 1.0};
  CHECK(hoyer_sparseness(v) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("hoyer sparseness conventions and preconditions") {
  const std::vector<double> zero(5, 0.0);
  CHECK(hoyer_sparseness(zero) == 0.0);

  const std::vector<double> one_entry{1.0};
  CHECK_THROWS_AS(hoyer_sparseness(one_entry), Error);
}

TEST_CASE("hoyer sparseness is scale invariant and bounded") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> dist;
  std::vector<double> v(24);
  for (double& x : v) x = dist(gen);
  const double base = hoyer_sparseness(v);
  CHECK(base >= 0.0);
  CHECK(base <= 1.0);

  for (double c : {1e-6, 1.0, 1e6, -3.0}) {
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= c;
    CHECK(hoyer_sparseness(scaled) == doctest::Approx(base).epsilon(1e-12));
  }
}

namespace {

// One ReLU layer wired as an identity: X columns pass straight through.
StackModel passthrough_model(std::size_t dim, std::size_t classes) {
  StackModel model;
  model.input_dim = dim;
  model.class_count = classes;
  SnnmModule m;
  m.activation = ActivationKind::Relu;
  m.W = Matrix::identity(dim);
  m.U = Matrix(dim, classes, 0.1);
  model.modules = {m};
  return model;
}

}  // namespace

TEST_CASE("mean hidden sparseness on crafted activations") {
  const StackModel model = passthrough_model(6, 2);

  Matrix onehot_cols(6, 4);
  for (std::size_t i = 0; i < 4; ++i) onehot_cols(i, i) = 2.0;
  CHECK(mean_hidden_sparseness(model, onehot_cols, 1) == doctest::Approx(1.0).epsilon(1e-12));

  // all-negative inputs die at the ReLU: the zero-vector convention applies
  Matrix dead(6, 3, -1.0);
  CHECK(mean_hidden_sparseness(model, dead, 1) == 0.0);

  CHECK_THROWS_AS(mean_hidden_sparseness(model, onehot_cols, 0), Error);
  CHECK_THROWS_AS(mean_hidden_sparseness(model, onehot_cols, 2), Error);
}

TEST_CASE("mean hidden sparseness ignores column order") {
  const StackModel model = passthrough_model(5, 2);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> dist;
  Matrix x(5, 9);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = dist(gen);

  const double base = mean_hidden_sparseness(model, x, 1);

  Matrix shuffled(5, 9);
  std::vector<std::size_t> order{8, 2, 5, 0, 7, 1, 4, 6, 3};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t r = 0; r < 5; ++r) shuffled(r, i) = x(r, order[i]);
  CHECK(mean_hidden_sparseness(model, shuffled, 1) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("accuracy counts exact matches") {
  CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(accuracy({0, 0}, {1, 2}) == 0.0);
  CHECK(accuracy({0, 1, 1, 2}, {0, 1, 2, 2}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), Error);
  CHECK_THROWS_AS(accuracy({}, {}), Error);
}

TEST_CASE("confusion matrix layout and totals") {
  const ConfusionMatrix perfect = confusion({0, 1, 2}, {0, 1, 2}, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(perfect.at(r, c) == (r == c ? 1u : 0u));

  const ConfusionMatrix cm = confusion({1, 1}, {0, 1}, 2);
  CHECK(cm.at(0, 0) == 0);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 0) == 0);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.total() == 2);

  CHECK_THROWS_AS(confusion({5}, {0}, 3), Error);
  CHECK_THROWS_AS(confusion({0}, {-1}, 3), Error);
}

TEST_CASE("confusion trace over N equals accuracy") {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> dist(0, 4);
  std::vector<int> pred(153), truth(153);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = dist(gen);
    truth[i] = dist(gen);
  }
  const ConfusionMatrix cm = confusion(pred, truth, 5);
  CHECK(static_cast<double>(cm.trace()) / static_cast<double>(cm.total()) ==
        doctest::Approx(accuracy(pred, truth)).epsilon(1e-15));

  // row sums are the per-class example counts
  for (std::size_t r = 0; r < 5; ++r) {
    std::size_t row_total = 0;
    for (std::size_t c = 0; c < 5; ++c) row_total += cm.at(r, c);
    const auto expected = static_cast<std::size_t>(
        std::count(truth.begin(), truth.end(), static_cast<int>(r)));
    CHECK(row_total == expected);
  }
}

TEST_CASE("row_normalized rows sum to one where populated") {
  const ConfusionMatrix cm = confusion({0, 1, 1, 0}, {0, 0, 1, 1}, 3);
  const Matrix norm = cm.row_normalized();
  for (std::size_t r = 0; r < 2; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) total += norm(r, c);
    CHECK(total == doctest::Approx(1.0));
  }
  for (std::size_t c = 0; c < 3; ++c) CHECK(norm(2, c) == 0.0);
}

TEST_CASE("time_inference validates repeats and returns a positive time") {
  const StackModel model = passthrough_model(8, 2);
  Matrix x(8, 16, 0.3);
  CHECK_THROWS_AS(time_inference(model, x, 2), Error);
  const double ms = time_inference(model, x, 3);
  CHECK(ms >= 0.0);
  CHECK(std::isfinite(ms));
}

namespace {

StackModel wide_model(std::size_t dim, std::size_t hidden, std::size_t classes) {
  StackModel model;
  model.input_dim = dim;
  model.class_count = classes;
  SnnmModule m;
  m.activation = ActivationKind::Relu;
  m.W = init_weights(dim, hidden, 7);
  m.U = init_weights(hidden, classes, 8);
  model.modules = {m};
  return model;
}

Matrix random_inputs(std::size_t dim, std::size_t n) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> dist;
  Matrix x(dim, n);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = dist(gen);
  return x;
}

}  // namespace

TEST_CASE("per-example time is roughly invariant to the batch size") {
  const StackModel model = wide_model(300, 300, 5);
  const Matrix big = random_inputs(300, 1000);
  const Matrix small(300, 100, 0.1);

  const double per_big = time_inference(model, big, 5);
  const double per_small = time_inference(model, small, 5);
  const double ratio = per_big / per_small;
  CHECK(ratio > 0.8);
  CHECK(ratio < 1.2);
}
