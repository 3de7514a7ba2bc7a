#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sdsn/errors.hpp"
#include "sdsn/gradcheck.hpp"
#include "sdsn/kernels.hpp"
#include "sdsn/snnm.hpp"

using namespace sdsn;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double sd, std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, sd);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

Matrix random_onehot(std::size_t classes, std::size_t n, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dist(0, static_cast<int>(classes) - 1);
  Matrix t(classes, n);
  for (std::size_t i = 0; i < n; ++i) t(static_cast<std::size_t>(dist(gen)), i) = 1.0;
  return t;
}

struct SmallInstance {
  Matrix X, W, T;
  GroupPartition partition;
};

SmallInstance sigmoid_instance(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SmallInstance inst;
  inst.X = gaussian(6, 10, 1.0, gen);
  inst.W = gaussian(6, 8, 1.0 / std::sqrt(6.0), gen);
  inst.T = random_onehot(3, 10, gen);
  inst.partition = make_group_partition(8, 4);
  return inst;
}

// Rejection-sampled so every |preactivation| clears the ReLU kink margin.
SmallInstance relu_instance(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SmallInstance inst;
  inst.T = random_onehot(3, 10, gen);
  inst.partition = make_group_partition(8, 4);
  for (int attempt = 0; attempt < 200; ++attempt) {
    inst.X = gaussian(6, 10, 1.0, gen);
    inst.W = gaussian(6, 8, 5.0 / std::sqrt(6.0), gen);
    const Matrix pre = kernels::matmul_at_b(inst.W, inst.X);
    bool clear = true;
    for (std::size_t i = 0; i < pre.size() && clear; ++i)
      clear = std::abs(pre.data()[i]) > 0.1;
    if (clear) return inst;
  }
  FAIL("could not build a kink-avoided ReLU instance");
  return inst;
}

}  // namespace

TEST_CASE("activate matches closed-form values") {
  Matrix a(1, 3);
  a(0, 0) = 0.0;
  a(0, 1) = std::log(3.0);
  a(0, 2) = -3.0;

  const Matrix sig = activate(a, ActivationKind::Sigmoid);
  CHECK(sig(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sig(0, 1) == doctest::Approx(0.75).epsilon(1e-14));

  const Matrix rel = activate(a, ActivationKind::Relu);
  CHECK(rel(0, 2) == 0.0);
  a(0, 2) = 2.5;
  CHECK(activate(a, ActivationKind::Relu)(0, 2) == 2.5);
}

TEST_CASE("activate_grad covers the kink branch") {
  Matrix a(1, 3);
  a(0, 0) = 0.0;
  a(0, 1) = 1e-9;
  a(0, 2) = -1e-9;

  CHECK(activate_grad(a, ActivationKind::Sigmoid)(0, 0) == doctest::Approx(0.25));
  const Matrix g = activate_grad(a, ActivationKind::Relu);
  CHECK(g(0, 0) == 0.0);  // a = 0 takes the zero branch
  CHECK(g(0, 1) == 1.0);
  CHECK(g(0, 2) == 0.0);
}

TEST_CASE("hidden_forward on degenerate weights") {
  std::mt19937_64 gen(5);
  const Matrix x = gaussian(4, 6, 1.0, gen);

  const HiddenActivations zero = hidden_forward(Matrix(4, 3), x, ActivationKind::Sigmoid);
  for (std::size_t i = 0; i < zero.act.size(); ++i) {
    CHECK(zero.pre.data()[i] == 0.0);
    CHECK(zero.act.data()[i] == 0.5);
  }
  const HiddenActivations zero_relu = hidden_forward(Matrix(4, 3), x, ActivationKind::Relu);
  for (std::size_t i = 0; i < zero_relu.act.size(); ++i) CHECK(zero_relu.act.data()[i] == 0.0);

  const HiddenActivations ident = hidden_forward(Matrix::identity(4), x, ActivationKind::Sigmoid);
  CHECK(relative_error(ident.pre, x) == 0.0);

  CHECK_THROWS_AS(hidden_forward(Matrix(5, 3), x, ActivationKind::Sigmoid), Error);
}

TEST_CASE("sigmoid activations stay inside (0, 1)") {
  std::mt19937_64 gen(6);
  const Matrix w = gaussian(6, 8, 1.0, gen);
  const Matrix x = gaussian(6, 10, 1.0, gen);
  const HiddenActivations h = hidden_forward(w, x, ActivationKind::Sigmoid);
  for (std::size_t i = 0; i < h.act.size(); ++i) {
    CHECK(h.act.data()[i] > 0.0);
    CHECK(h.act.data()[i] < 1.0);
  }
}

TEST_CASE("solve_upper with identity hidden returns the transposed targets") {
  std::mt19937_64 gen(7);
  const Matrix t = gaussian(3, 5, 1.0, gen);
  const Matrix u = solve_upper(Matrix::identity(5), t, 0.0);
  CHECK(relative_error(u, transpose(t)) < 1e-12);
}

TEST_CASE("solve_upper ridge limit sends U to zero") {
  std::mt19937_64 gen(8);
  const Matrix h = gaussian(8, 10, 1.0, gen);
  const Matrix t = random_onehot(3, 10, gen);
  const Matrix u = solve_upper(h, t, 1e12);
  CHECK(kernels::frobenius(u) < 1e-6);
}

TEST_CASE("solve_upper satisfies the stationarity condition") {
  std::mt19937_64 gen(9);
  const Matrix h = gaussian(8, 10, 1.0, gen);
  const Matrix t = random_onehot(3, 10, gen);
  const double alpha = 0.5;
  const Matrix u = solve_upper(h, t, alpha);

  // gradient of the ridge objective: 2 H (H^T U - T^T) + 2 alpha U
  Matrix inner = kernels::matmul_at_b(h, u);  // N x C
  kernels::add_scaled(inner, transpose(t), -1.0);
  Matrix grad = kernels::matmul(h, inner);
  kernels::add_scaled(grad, u, alpha);
  for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] *= 2.0;
  CHECK(kernels::frobenius(grad) < 1e-10);
}

TEST_CASE("solve_upper raises SingularSystem when the Gram matrix is hopeless") {
  const Matrix h(4, 6);  // all zeros, trace-based jitter cannot help
  Matrix t(2, 6);
  t(0, 0) = 1.0;
  try {
    solve_upper(h, t, 0.0);
    FAIL("expected SingularSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSystem);
  }
}

TEST_CASE("solve_upper rejects mismatched example counts and bad alpha") {
  std::mt19937_64 gen(10);
  const Matrix h = gaussian(4, 6, 1.0, gen);
  const Matrix t = random_onehot(2, 5, gen);
  CHECK_THROWS_AS(solve_upper(h, t, 0.5), Error);
  CHECK_THROWS_AS(solve_upper(h, random_onehot(2, 6, gen), -1.0), Error);
}

TEST_CASE("group_norms hand-computed value") {
  Matrix h(2, 1);
  h(0, 0) = 3.0;
  h(1, 0) = 4.0;
  const Matrix norms = group_norms(h, make_group_partition(2, 1));
  CHECK(norms(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(norms(1, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("group_norms of zero activations is zero, singleton groups give |h|") {
  const Matrix zero(6, 4);
  const Matrix zn = group_norms(zero, make_group_partition(6, 3));
  CHECK(kernels::frobenius(zn) == 0.0);

  std::mt19937_64 gen(11);
  const Matrix h = gaussian(6, 4, 1.0, gen);
  const Matrix singleton = group_norms(h, make_group_partition(6, 6));
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(singleton.data()[i] == doctest::Approx(std::abs(h.data()[i])).epsilon(1e-15));

  CHECK_THROWS_AS(group_norms(h, make_group_partition(8, 4)), Error);
}

TEST_CASE("penalty hand values and reductions") {
  Matrix h(2, 1);
  h(0, 0) = 3.0;
  h(1, 0) = 4.0;
  const GroupPartition one_group = make_group_partition(2, 1);
  CHECK(penalty(h, one_group, PenaltyKind::MixedNorm) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(penalty(h, one_group, PenaltyKind::L1) == doctest::Approx(7.0).epsilon(1e-15));

  CHECK(penalty(Matrix(2, 3), one_group, PenaltyKind::MixedNorm) == 0.0);
  CHECK(penalty(Matrix(2, 3), one_group, PenaltyKind::L1) == 0.0);

  // singleton groups reduce the mixed norm to l1 on nonnegative activations
  std::mt19937_64 gen(12);
  Matrix relu_h = gaussian(6, 5, 1.0, gen);
  for (std::size_t i = 0; i < relu_h.size(); ++i)
    relu_h.data()[i] = std::max(relu_h.data()[i], 0.0);
  const GroupPartition singleton = make_group_partition(6, 6);
  CHECK(penalty(relu_h, singleton, PenaltyKind::MixedNorm) ==
        doctest::Approx(penalty(relu_h, singleton, PenaltyKind::L1)).epsilon(1e-13));
}

TEST_CASE("mixed-norm penalty is absolutely homogeneous") {
  std::mt19937_64 gen(13);
  const Matrix h = gaussian(8, 7, 1.0, gen);
  const GroupPartition partition = make_group_partition(8, 4);
  const double base = penalty(h, partition, PenaltyKind::MixedNorm);
  for (double c : {-2.5, 0.5, 3.0}) {
    Matrix scaled = h;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= c;
    CHECK(penalty(scaled, partition, PenaltyKind::MixedNorm) ==
          doctest::Approx(std::abs(c) * base).epsilon(1e-12));
  }
}

TEST_CASE("module_output matches a scalar triple loop") {
  std::mt19937_64 gen(14);
  const Matrix u = gaussian(8, 3, 1.0, gen);
  const Matrix h = gaussian(8, 10, 1.0, gen);

  CHECK(kernels::frobenius(module_output(Matrix(8, 3), h)) == 0.0);
  CHECK(relative_error(module_output(u, Matrix::identity(8)), transpose(u)) < 1e-14);

  const Matrix naive = oracle::matmul_scalar(transpose(u), h);
  CHECK(relative_error(module_output(u, h), naive) < 1e-12);

  CHECK_THROWS_AS(module_output(u, Matrix(9, 10)), Error);
}

TEST_CASE("objective_full matches the scalar-loop oracle") {
  const SmallInstance inst = sigmoid_instance(100);
  std::mt19937_64 gen(15);
  const Matrix u = gaussian(8, 3, 1.0, gen);

  HyperParams hp;
  hp.alpha = 0.5;
  hp.beta = 0.01;
  hp.groups = 4;
  hp.hidden = 8;
  hp.activation = ActivationKind::Sigmoid;

  const double got = objective_full(inst.W, u, inst.X, inst.T, hp, inst.partition);
  const double want = oracle::objective_scalar(inst.W, u, inst.X, inst.T, hp.alpha, hp.beta,
                                               4, ActivationKind::Sigmoid);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  hp.penalty = PenaltyKind::L1;
  const double got_l1 = objective_full(inst.W, u, inst.X, inst.T, hp, inst.partition);
  const double want_l1 = oracle::objective_scalar(inst.W, u, inst.X, inst.T, hp.alpha, hp.beta,
                                                  4, ActivationKind::Sigmoid, true);
  CHECK(got_l1 == doctest::Approx(want_l1).epsilon(1e-12));
}

TEST_CASE("objective_full with beta = 0 is the plain ridge objective") {
  const SmallInstance inst = sigmoid_instance(107);
  std::mt19937_64 gen(23);
  const Matrix u = gaussian(8, 3, 1.0, gen);

  HyperParams hp;
  hp.alpha = 0.5;
  hp.beta = 0.0;
  hp.groups = 4;
  hp.hidden = 8;

  const double got = objective_full(inst.W, u, inst.X, inst.T, hp, inst.partition);
  const double want = oracle::objective_scalar(inst.W, u, inst.X, inst.T, hp.alpha, 0.0, 4,
                                               ActivationKind::Sigmoid);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("objective_full at zero weights is the constant expression") {
  const SmallInstance inst = sigmoid_instance(101);
  HyperParams hp;
  hp.alpha = 0.5;
  hp.beta = 0.01;
  hp.groups = 4;
  hp.hidden = 8;

  const Matrix w0(6, 8), u0(8, 3);
  const double got = objective_full(w0, u0, inst.X, inst.T, hp, inst.partition);
  // ||T||_F^2 plus the penalty of the all-0.5 sigmoid activations
  const Matrix half(8, 10, 0.5);
  const double want =
      kernels::frobenius_sq(inst.T) + hp.beta * penalty(half, inst.partition, hp.penalty);
  CHECK(got == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("objective_f1 relates to objective_full by the ridge term") {
  const SmallInstance inst = sigmoid_instance(102);
  std::mt19937_64 gen(16);
  const Matrix u = gaussian(8, 3, 1.0, gen);

  HyperParams hp;
  hp.alpha = 0.7;
  hp.beta = 0.02;
  hp.groups = 4;
  hp.hidden = 8;

  const double full = objective_full(inst.W, u, inst.X, inst.T, hp, inst.partition);
  const double f1 = objective_f1(inst.W, u, inst.X, inst.T, hp.beta, inst.partition,
                                 ActivationKind::Sigmoid);
  CHECK(full - f1 == doctest::Approx(hp.alpha * kernels::frobenius_sq(u)).epsilon(1e-12));

  // beta = 0 leaves the pure squared error
  const double plain = objective_f1(inst.W, u, inst.X, inst.T, 0.0, inst.partition,
                                    ActivationKind::Sigmoid);
  const double by_oracle = oracle::objective_scalar(inst.W, u, inst.X, inst.T, 0.0, 0.0, 4,
                                                    ActivationKind::Sigmoid);
  CHECK(plain == doctest::Approx(by_oracle).epsilon(1e-12));
}

TEST_CASE("grad_f1 with beta = 0 reproduces the baseline sigmoid gradient") {
  const SmallInstance inst = sigmoid_instance(103);
  std::mt19937_64 gen(17);
  const Matrix u = gaussian(8, 3, 1.0, gen);

  const Matrix got = grad_f1(inst.W, u, inst.X, inst.T, 0.0, inst.partition,
                             ActivationKind::Sigmoid);

  // standalone evaluation of the baseline gradient, scalar loops
  const Matrix h = oracle::hidden_scalar(inst.W, inst.X, ActivationKind::Sigmoid);
  Matrix want(6, 8);
  for (std::size_t d = 0; d < 6; ++d)
    for (std::size_t j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < 10; ++i) {
        double back = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          double y = 0.0;
          for (std::size_t j2 = 0; j2 < 8; ++j2) y += u(j2, c) * h(j2, i);
          back += u(j, c) * (y - inst.T(c, i));
        }
        acc += inst.X(d, i) * h(j, i) * (1.0 - h(j, i)) * back;
      }
      want(d, j) = 2.0 * acc;
    }
  CHECK(relative_error(got, want) < 1e-12);
}

TEST_CASE("grad_f1 vanishes on an exactly fit instance") {
  const SmallInstance inst = sigmoid_instance(104);
  std::mt19937_64 gen(18);
  const Matrix u = gaussian(8, 3, 1.0, gen);
  const HiddenActivations h = hidden_forward(inst.W, inst.X, ActivationKind::Sigmoid);
  const Matrix fit_targets = module_output(u, h.act);

  const Matrix grad = grad_f1(inst.W, u, inst.X, fit_targets, 0.0, inst.partition,
                              ActivationKind::Sigmoid);
  CHECK(kernels::frobenius(grad) == 0.0);
}

TEST_CASE("grad_f1 matches finite differences for sigmoid") {
  for (std::uint64_t seed : {200, 201, 202}) {
    const SmallInstance inst = sigmoid_instance(seed);
    const HiddenActivations h = hidden_forward(inst.W, inst.X, ActivationKind::Sigmoid);
    const Matrix u = solve_upper(h.act, inst.T, 0.5);

    const Matrix analytic = grad_f1(inst.W, u, inst.X, inst.T, 0.01, inst.partition,
                                    ActivationKind::Sigmoid);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& w) {
          return objective_f1(w, u, inst.X, inst.T, 0.01, inst.partition,
                              ActivationKind::Sigmoid);
        },
        inst.W, 1e-5);
    CHECK(relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("grad_f1 matches finite differences for kink-avoided ReLU") {
  for (std::uint64_t seed : {210, 211}) {
    const SmallInstance inst = relu_instance(seed);
    const HiddenActivations h = hidden_forward(inst.W, inst.X, ActivationKind::Relu);
    const Matrix u = solve_upper(h.act, inst.T, 0.5);

    const Matrix analytic =
        grad_f1(inst.W, u, inst.X, inst.T, 0.01, inst.partition, ActivationKind::Relu);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& w) {
          return objective_f1(w, u, inst.X, inst.T, 0.01, inst.partition, ActivationKind::Relu);
        },
        inst.W, 1e-5);
    CHECK(relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("gradients stay finite when whole groups are dead") {
  // X strictly positive and one group of W pushed far negative: that
  // group's activations are exactly zero for every example.
  std::mt19937_64 gen(19);
  Matrix x = gaussian(4, 12, 1.0, gen);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = std::abs(x.data()[i]) + 0.5;
  Matrix w = gaussian(4, 6, 0.5, gen);
  for (std::size_t j = 3; j < 6; ++j)
    for (std::size_t d = 0; d < 4; ++d) w(d, j) = -5.0;
  const GroupPartition partition = make_group_partition(6, 2);

  const HiddenActivations h = hidden_forward(w, x, ActivationKind::Relu);
  for (std::size_t j = 3; j < 6; ++j)
    for (std::size_t i = 0; i < 12; ++i) CHECK(h.act(j, i) == 0.0);

  const Matrix u = solve_upper(h.act, random_onehot(3, 12, gen), 0.5);
  const Matrix grad =
      grad_f1(w, u, x, random_onehot(3, 12, gen), 0.05, partition, ActivationKind::Relu);
  CHECK(grad.all_finite());

  const Matrix g2 = grad_f2(w, x, random_onehot(3, 12, gen), 0.05, partition,
                            ActivationKind::Relu);
  CHECK(g2.all_finite());
}

TEST_CASE("objective_f2 annihilates the residual on square invertible hidden") {
  std::mt19937_64 gen(20);
  // W = identity, X well-conditioned square: H = sigmoid(X) is invertible
  // with overwhelming probability at this size.
  const Matrix x = gaussian(5, 5, 2.0, gen);
  const Matrix w = Matrix::identity(5);
  const Matrix t = random_onehot(3, 5, gen);
  const GroupPartition partition = make_group_partition(5, 1);

  const double value = objective_f2(w, x, t, 0.0, partition, ActivationKind::Sigmoid);
  CHECK(value < 1e-12);

  const Matrix grad = grad_f2(w, x, t, 0.0, partition, ActivationKind::Sigmoid);
  CHECK(kernels::frobenius(grad) < 1e-8);
}

TEST_CASE("objective_f2 composes solve_upper with objective_f1") {
  const SmallInstance inst = sigmoid_instance(105);
  const double direct =
      objective_f2(inst.W, inst.X, inst.T, 0.01, inst.partition, ActivationKind::Sigmoid);
  const HiddenActivations h = hidden_forward(inst.W, inst.X, ActivationKind::Sigmoid);
  const Matrix u0 = solve_upper(h.act, inst.T, 0.0);
  const double composed =
      objective_f1(inst.W, u0, inst.X, inst.T, 0.01, inst.partition, ActivationKind::Sigmoid);
  CHECK(direct == doctest::Approx(composed).epsilon(1e-10));
}

TEST_CASE("grad_f2 matches finite differences on full-rank instances") {
  std::mt19937_64 gen(21);
  for (double beta : {0.0, 0.01}) {
    const Matrix x = gaussian(6, 20, 1.0, gen);
    const Matrix w = gaussian(6, 8, 1.0 / std::sqrt(6.0), gen);
    const Matrix t = random_onehot(3, 20, gen);
    const GroupPartition partition = make_group_partition(8, 4);

    const Matrix analytic = grad_f2(w, x, t, beta, partition, ActivationKind::Sigmoid);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& ww) {
          return objective_f2(ww, x, t, beta, partition, ActivationKind::Sigmoid);
        },
        w, 1e-5);
    CHECK(relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("objective_f2 and grad_f2 report a hopeless Gram matrix") {
  // all-zero W under ReLU kills every hidden unit: the alpha = 0 system has
  // nothing to solve and the trace-scaled jitter cannot rescue it
  std::mt19937_64 gen(22);
  const Matrix x = gaussian(4, 6, 1.0, gen);
  const Matrix w(4, 4);
  const Matrix t = random_onehot(2, 6, gen);
  const GroupPartition partition = make_group_partition(4, 2);

  CHECK_THROWS_AS(objective_f2(w, x, t, 0.0, partition, ActivationKind::Relu), Error);
  CHECK_THROWS_AS(grad_f2(w, x, t, 0.0, partition, ActivationKind::Relu), Error);
}

TEST_CASE("pseudo-inverse products associate") {
  const SmallInstance inst = sigmoid_instance(106);
  const HiddenActivations h = hidden_forward(inst.W, inst.X, ActivationKind::Sigmoid);

  // H^dag = H^T (H H^T)^{-1} via the SPD solve: (H H^T) Z = H, H^dag = Z^T
  const Matrix gram = kernels::matmul_a_bt(h.act, h.act);
  Matrix z;
  REQUIRE(kernels::spd_solve(gram, h.act, z));
  const Matrix h_dag = transpose(z);  // N x L

  const Matrix ht = kernels::matmul_a_bt(h.act, inst.T);  // L x C
  const Matrix t_hdag = kernels::matmul(inst.T, h_dag);   // C x L

  const Matrix left_first = kernels::matmul(kernels::matmul(h_dag, ht), t_hdag);
  const Matrix right_first = kernels::matmul(h_dag, kernels::matmul(ht, t_hdag));
  CHECK(relative_error(left_first, right_first) < 1e-10);
}
