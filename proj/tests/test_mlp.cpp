#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "lqrl/mlp.hpp"
#include "lqrl/numerics.hpp"

using namespace lqrl;

namespace {

Matrix random_batch(int rows, int cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.standard_normal();
  return m;
}

// Backprop vs central finite differences on the flat parameter vector;
// per-entry error relative to max(1, |numeric|).
double max_relative_gradient_error(const Mlp& net, const Matrix& inputs,
                                   const Matrix& targets,
                                   const Vector& weights) {
  const Vector analytic =
      net.gradient_on_batch(inputs, targets, weights).second;
  Mlp probe = net;
  const Vector numeric = finite_difference_gradient(
      [&](const Vector& theta) {
        probe.set_parameters(theta);
        return probe.loss_on_batch(inputs, targets, weights);
      },
      net.parameters(), 1e-5);
  double worst = 0.0;
  for (int i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) /
                                std::max(1.0, std::abs(numeric(i))));
  return worst;
}

}  // namespace

TEST_CASE("softmax head produces a pdf and uniform at zero weights") {
  Mlp net({4, 30, 30, 2}, {Activation::Relu, Activation::Relu,
                           Activation::Softmax},
          LossKind::WeightedCrossEntropy, 3);
  RngStream rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector out = net.forward(Vector(rng.standard_normal_vector(4)));
    CHECK(out.minCoeff() >= 0.0);
    CHECK(std::abs(out.sum() - 1.0) <= 1e-6);
  }

  Mlp zero({3, 5, 3}, {Activation::Relu, Activation::Softmax},
           LossKind::WeightedCrossEntropy, 1);
  zero.set_parameters(Vector::Zero(zero.parameter_count()));
  const Vector probs = zero.forward(Vector{{0.3, -0.2, 0.9}});
  for (int i = 0; i < 3; ++i) CHECK(probs(i) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("linear head with zero hidden weights outputs the bias") {
  Mlp net({2, 4, 3}, {Activation::Relu, Activation::Linear},
          LossKind::MeanSquaredError, 7);
  Vector theta = Vector::Zero(net.parameter_count());
  // final bias is the last 3 flat entries
  theta(net.parameter_count() - 3) = 1.5;
  theta(net.parameter_count() - 2) = -2.0;
  theta(net.parameter_count() - 1) = 0.25;
  net.set_parameters(theta);
  const Vector out = net.forward(Vector{{0.7, -0.1}});
  CHECK(out(0) == Catch::Approx(1.5));
  CHECK(out(1) == Catch::Approx(-2.0));
  CHECK(out(2) == Catch::Approx(0.25));
}

TEST_CASE("single relu layer agrees with hand arithmetic") {
  Mlp net({2, 2}, {Activation::Relu}, LossKind::MeanSquaredError, 0);
  // W = [[1, -1], [2, 0.5]], b = [0.1, -0.2]
  Vector theta(6);
  theta << 1.0, -1.0, 2.0, 0.5, 0.1, -0.2;
  net.set_parameters(theta);
  const Vector out = net.forward(Vector{{1.0, 1.0}});
  // pre = [1*1 + 2*1 + 0.1, -1*1 + 0.5*1 - 0.2] = [3.1, -0.7]
  CHECK(out(0) == Catch::Approx(3.1));
  CHECK(out(1) == 0.0);
}

TEST_CASE("He initialization has the right spread and is seed-deterministic") {
  Mlp a({30, 10}, {Activation::Linear}, LossKind::MeanSquaredError, 77);
  Mlp b({30, 10}, {Activation::Linear}, LossKind::MeanSquaredError, 77);
  CHECK(a.parameters() == b.parameters());

  // pool many draws at fan_in 30
  double sum_sq = 0.0;
  int count = 0;
  for (int seed = 0; seed < 34; ++seed) {
    Mlp net({30, 10}, {Activation::Linear}, LossKind::MeanSquaredError, seed);
    const Vector theta = net.parameters();
    for (int i = 0; i < 300; ++i) {  // weights precede biases in flat order
      sum_sq += theta(i) * theta(i);
      ++count;
    }
  }
  const double std_hat = std::sqrt(sum_sq / count);
  const double he = std::sqrt(2.0 / 30.0);
  CHECK(std_hat > 0.9 * he);
  CHECK(std_hat < 1.1 * he);
}

TEST_CASE("to_categorical golden cases") {
  CHECK(to_categorical(1, 3).isApprox(Vector{{0.0, 1.0, 0.0}}));
  CHECK(to_categorical(0, 1).isApprox(Vector{{1.0}}));
  for (int i = 0; i < 5; ++i) CHECK(to_categorical(i, 5).sum() == 1.0);
  CHECK_THROWS_AS(to_categorical(3, 3), DomainError);
  CHECK_THROWS_AS(to_categorical(-1, 3), DomainError);
}

TEST_CASE("cross-entropy of a uniform pdf is log 2") {
  Mlp net({2, 2}, {Activation::Softmax}, LossKind::WeightedCrossEntropy, 0);
  net.set_parameters(Vector::Zero(net.parameter_count()));
  Matrix input(1, 2);
  input << 0.4, -0.4;
  Matrix target(1, 2);
  target << 1.0, 0.0;
  const double loss = net.loss_on_batch(input, target, Vector::Ones(1));
  CHECK(loss == Catch::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("weighted cross entropy equals the direct formula on one-hot rows") {
  RngStream rng(8);
  Mlp net({3, 6, 4}, {Activation::Relu, Activation::Softmax},
          LossKind::WeightedCrossEntropy, 21);
  const Matrix inputs = random_batch(5, 3, rng);
  Matrix targets = Matrix::Zero(5, 4);
  Vector weights(5);
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) {
    const int label = rng.uniform_int(4);
    labels.push_back(label);
    targets(i, label) = 1.0;
    weights(i) = rng.standard_normal();
  }
  const Matrix probs = net.forward(inputs);
  double direct = 0.0;
  for (int i = 0; i < 5; ++i)
    direct -= weights(i) * std::log(probs(i, labels[i]));
  direct /= 5.0;
  CHECK(net.loss_on_batch(inputs, targets, weights) ==
        Catch::Approx(direct).epsilon(1e-12));
}

TEST_CASE("MSE at the target is zero and leaves parameters unchanged") {
  Mlp net({2, 3}, {Activation::Linear}, LossKind::MeanSquaredError, 4);
  Matrix input(2, 2);
  input << 1.0, 0.5, -0.3, 0.2;
  const Matrix target = net.forward(input);
  const Vector before = net.parameters();
  const double loss = net.train_on_batch(input, target);
  CHECK(loss == 0.0);
  CHECK((net.parameters() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backprop matches finite differences on random small networks") {
  RngStream rng(1234);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const bool cross_entropy = trial % 2 == 0;
    const int depth = 1 + rng.uniform_int(3);  // 1..3 layers
    std::vector<int> sizes{1 + rng.uniform_int(8)};
    std::vector<Activation> acts;
    for (int l = 0; l < depth; ++l) {
      sizes.push_back(1 + rng.uniform_int(8));
      acts.push_back(Activation::Relu);
    }
    if (cross_entropy) {
      sizes.back() = 2 + rng.uniform_int(7);
      acts.back() = Activation::Softmax;
    } else {
      acts.back() = Activation::Linear;
    }
    Mlp net(sizes, acts,
            cross_entropy ? LossKind::WeightedCrossEntropy
                          : LossKind::MeanSquaredError,
            1000 + trial);
    const int batch = 5;
    const Matrix inputs = random_batch(batch, sizes.front(), rng);
    Matrix targets;
    if (cross_entropy) {
      targets = Matrix::Zero(batch, sizes.back());
      for (int i = 0; i < batch; ++i)
        targets(i, rng.uniform_int(sizes.back())) = 1.0;
    } else {
      targets = random_batch(batch, sizes.back(), rng);
    }
    Vector weights(batch);
    for (int i = 0; i < batch; ++i) weights(i) = 0.25 + rng.uniform();

    CHECK(max_relative_gradient_error(net, inputs, targets, weights) <= 1e-4);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("training descends on a separable toy batch") {
  Mlp net({2, 8, 2}, {Activation::Relu, Activation::Softmax},
          LossKind::WeightedCrossEntropy, 6, 1e-2);
  Matrix inputs(4, 2);
  inputs << 1.0, 0.0, 0.8, 0.1, -1.0, 0.0, -0.9, -0.2;
  Matrix targets(4, 2);
  targets << 1, 0, 1, 0, 0, 1, 0, 1;
  double loss = 0.0;
  for (int step = 0; step < 500; ++step)
    loss = net.train_on_batch(inputs, targets);
  CHECK(loss < 0.1);
}

TEST_CASE("softmax belongs at the end only") {
  CHECK_THROWS_AS(Mlp({2, 3, 2}, {Activation::Softmax, Activation::Linear},
                      LossKind::MeanSquaredError, 0),
                  ConfigError);
  CHECK_THROWS_AS(Mlp({2}, {}, LossKind::MeanSquaredError, 0), ConfigError);
}

TEST_CASE("shape errors are reported") {
  Mlp net({2, 2}, {Activation::Linear}, LossKind::MeanSquaredError, 0);
  CHECK_THROWS_AS(net.forward(Matrix(Matrix::Zero(1, 3))), DimensionError);
  CHECK_THROWS_AS(net.train_on_batch(Matrix::Zero(2, 2), Matrix::Zero(3, 2)),
                  DimensionError);
  CHECK_THROWS_AS(
      net.train_on_batch(Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                         Vector::Ones(3)),
      DimensionError);
}

TEST_CASE("checkpoints round-trip through save and load") {
  Mlp net({3, 5, 2}, {Activation::Relu, Activation::Softmax},
          LossKind::WeightedCrossEntropy, 42, 0.005);
  std::stringstream buffer;
  net.save(buffer);
  Mlp restored = Mlp::load(buffer);
  CHECK(restored.parameters() == net.parameters());
  CHECK(restored.loss_kind() == net.loss_kind());
  RngStream rng(3);
  const Vector x = rng.standard_normal_vector(3);
  CHECK(restored.forward(x) == net.forward(x));

  std::stringstream bad("not-a-checkpoint 9");
  CHECK_THROWS_AS(Mlp::load(bad), ConfigError);
}
