#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lqrl/numerics.hpp"

namespace lqrl {

enum class Activation { Relu, Softmax, Linear };
enum class LossKind { WeightedCrossEntropy, MeanSquaredError };

inline Vector to_categorical(int index, int n_categories) {
  if (index < 0 || index >= n_categories)
    throw DomainError("to_categorical: index out of range");
  Vector one_hot = Vector::Zero(n_categories);
  one_hot(index) = 1.0;
  return one_hot;
}

// Dense feed-forward network with hand-written backpropagation and one Adam
// state per parameter tensor. Batches are row-per-sample matrices.
class Mlp {
 public:
  Mlp(const std::vector<int>& layer_sizes,
      const std::vector<Activation>& activations, LossKind loss,
      std::uint64_t seed, double adam_step_size = 1e-3,
      double adam_epsilon = 1e-8)
      : loss_(loss) {
    if (layer_sizes.size() < 2)
      throw ConfigError("Mlp: need at least input and output sizes");
    if (activations.size() != layer_sizes.size() - 1)
      throw ConfigError("Mlp: one activation per layer required");
    for (std::size_t i = 0; i + 1 < activations.size(); ++i)
      if (activations[i] == Activation::Softmax)
        throw ConfigError("Mlp: softmax is only valid as the final activation");
    RngStream rng(seed);
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
      const int fan_in = layer_sizes[i];
      const int fan_out = layer_sizes[i + 1];
      if (fan_in < 1 || fan_out < 1) throw ConfigError("Mlp: bad layer size");
      Layer layer;
      layer.weights.resize(fan_in, fan_out);
      const double he_std = std::sqrt(2.0 / fan_in);
      for (int r = 0; r < fan_in; ++r)
        for (int c = 0; c < fan_out; ++c)
          layer.weights(r, c) = he_std * rng.standard_normal();
      layer.bias = Vector::Zero(fan_out);
      layer.activation = activations[i];
      layers_.push_back(std::move(layer));
      adam_weights_.emplace_back(fan_in, fan_out, adam_step_size, 0.9, 0.999,
                                 adam_epsilon);
      adam_bias_.emplace_back(1, fan_out, adam_step_size, 0.9, 0.999,
                              adam_epsilon);
    }
  }

  int input_size() const { return static_cast<int>(layers_.front().weights.rows()); }
  int output_size() const { return static_cast<int>(layers_.back().weights.cols()); }
  LossKind loss_kind() const { return loss_; }
  std::size_t layer_count() const { return layers_.size(); }

  Matrix forward(const Matrix& inputs) const {
    if (inputs.cols() != input_size())
      throw DimensionError("Mlp: input width mismatch");
    Matrix activation = inputs;
    for (const Layer& layer : layers_) activation = layer.apply(activation);
    return activation;
  }

  Vector forward(const Vector& input) const {
    const Matrix out = forward(Matrix(input.transpose()));
    return out.row(0).transpose();
  }

  double train_on_batch(const Matrix& inputs, const Matrix& targets) {
    return train_on_batch(inputs, targets,
                          Vector::Ones(inputs.rows()));
  }

  // One gradient step on the batch; returns the pre-update loss.
  double train_on_batch(const Matrix& inputs, const Matrix& targets,
                        const Vector& sample_weights) {
    const Tape tape = backprop(inputs, targets, sample_weights);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weights -= adam_step(adam_weights_[l], tape.grad_weights[l]);
      layers_[l].bias -=
          adam_step(adam_bias_[l], Matrix(tape.grad_bias[l].transpose()))
              .row(0)
              .transpose();
    }
    return tape.loss;
  }

  // Loss and flat parameter gradient, no update; the finite-difference
  // oracle checks this against central differences.
  std::pair<double, Vector> gradient_on_batch(
      const Matrix& inputs, const Matrix& targets,
      const Vector& sample_weights) const {
    const Tape tape = backprop(inputs, targets, sample_weights);
    Vector flat(parameter_count());
    int k = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (int r = 0; r < tape.grad_weights[l].rows(); ++r)
        for (int c = 0; c < tape.grad_weights[l].cols(); ++c)
          flat(k++) = tape.grad_weights[l](r, c);
      for (int c = 0; c < tape.grad_bias[l].size(); ++c)
        flat(k++) = tape.grad_bias[l](c);
    }
    return {tape.loss, flat};
  }

  // Loss without any parameter update; the finite-difference tests drive this.
  double loss_on_batch(const Matrix& inputs, const Matrix& targets,
                       const Vector& sample_weights) const {
    check_batch(inputs, targets, sample_weights);
    return loss_value(forward(inputs), targets, sample_weights);
  }

  Vector parameters() const {
    Vector flat(parameter_count());
    int k = 0;
    for (const Layer& layer : layers_) {
      for (int r = 0; r < layer.weights.rows(); ++r)
        for (int c = 0; c < layer.weights.cols(); ++c)
          flat(k++) = layer.weights(r, c);
      for (int c = 0; c < layer.bias.size(); ++c) flat(k++) = layer.bias(c);
    }
    return flat;
  }

  void set_parameters(const Vector& flat) {
    if (flat.size() != parameter_count())
      throw DimensionError("Mlp: flat parameter size mismatch");
    int k = 0;
    for (Layer& layer : layers_) {
      for (int r = 0; r < layer.weights.rows(); ++r)
        for (int c = 0; c < layer.weights.cols(); ++c)
          layer.weights(r, c) = flat(k++);
      for (int c = 0; c < layer.bias.size(); ++c) layer.bias(c) = flat(k++);
    }
  }

  int parameter_count() const {
    int count = 0;
    for (const Layer& layer : layers_)
      count += static_cast<int>(layer.weights.size() + layer.bias.size());
    return count;
  }

  // Text checkpoint: "lqrl-mlp 1", layer sizes, activations, loss kind, then
  // all parameters in flat order with 17 significant digits. Optimizer
  // moments are not saved; a loaded network restarts Adam fresh.
  void save(std::ostream& out) const {
    out << "lqrl-mlp 1\n";
    out << layers_.size() + 1;
    out << ' ' << input_size();
    for (const Layer& layer : layers_) out << ' ' << layer.weights.cols();
    out << '\n';
    for (std::size_t l = 0; l < layers_.size(); ++l)
      out << (l ? " " : "") << activation_name(layers_[l].activation);
    out << '\n' << loss_name(loss_) << '\n';
    out << adam_weights_[0].step_size << ' ' << adam_weights_[0].epsilon << '\n';
    const Vector flat = parameters();
    out.precision(17);
    for (int i = 0; i < flat.size(); ++i)
      out << flat(i) << (i + 1 == flat.size() ? '\n' : ' ');
  }

  static Mlp load(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "lqrl-mlp" || version != 1)
      throw ConfigError("Mlp::load: unrecognized checkpoint header");
    int n_sizes = 0;
    in >> n_sizes;
    if (n_sizes < 2) throw ConfigError("Mlp::load: bad layer count");
    std::vector<int> sizes(n_sizes);
    for (int& s : sizes) in >> s;
    std::vector<Activation> acts(n_sizes - 1);
    for (Activation& a : acts) {
      std::string name;
      in >> name;
      a = activation_from_name(name);
    }
    std::string loss_str;
    in >> loss_str;
    double step_size = 0.0, eps = 0.0;
    in >> step_size >> eps;
    Mlp net(sizes, acts, loss_from_name(loss_str), 0, step_size, eps);
    Vector flat(net.parameter_count());
    for (int i = 0; i < flat.size(); ++i) in >> flat(i);
    if (!in) throw ConfigError("Mlp::load: truncated checkpoint");
    net.set_parameters(flat);
    return net;
  }

 private:
  struct Layer {
    Matrix weights;  // fan_in x fan_out
    Vector bias;
    Activation activation = Activation::Linear;

    Matrix apply(const Matrix& inputs) const {
      return activate((inputs * weights).rowwise() + bias.transpose(),
                      activation);
    }

    static Matrix activate(const Matrix& pre, Activation act) {
      switch (act) {
        case Activation::Relu:
          return pre.cwiseMax(0.0);
        case Activation::Linear:
          return pre;
        case Activation::Softmax: {
          Matrix out(pre.rows(), pre.cols());
          for (int r = 0; r < pre.rows(); ++r) {
            const Vector shifted =
                pre.row(r).transpose().array() - pre.row(r).maxCoeff();
            const Vector expd = shifted.array().exp();
            out.row(r) = (expd / expd.sum()).transpose();
          }
          return out;
        }
      }
      throw ConfigError("Mlp: unknown activation");
    }

    static Matrix activation_backward(const Matrix& grad_post,
                                      const Matrix& pre, const Matrix& post,
                                      Activation act) {
      switch (act) {
        case Activation::Relu:
          return grad_post.cwiseProduct(
              (pre.array() > 0.0).cast<double>().matrix());
        case Activation::Linear:
          return grad_post;
        case Activation::Softmax: {
          // dz = p .* (da - (da . p))
          Matrix grad_pre(pre.rows(), pre.cols());
          for (int r = 0; r < pre.rows(); ++r) {
            const double inner = grad_post.row(r).dot(post.row(r));
            grad_pre.row(r) =
                (post.row(r).array() * (grad_post.row(r).array() - inner))
                    .matrix();
          }
          return grad_pre;
        }
      }
      throw ConfigError("Mlp: unknown activation");
    }
  };

  struct Tape {
    double loss;
    std::vector<Matrix> grad_weights;
    std::vector<Vector> grad_bias;
  };

  // Forward pass with cached activations, then reverse-mode gradients.
  Tape backprop(const Matrix& inputs, const Matrix& targets,
                const Vector& sample_weights) const {
    check_batch(inputs, targets, sample_weights);
    std::vector<Matrix> pre(layers_.size());
    std::vector<Matrix> post(layers_.size() + 1);
    post[0] = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      pre[l] = (post[l] * layers_[l].weights).rowwise() +
               layers_[l].bias.transpose();
      post[l + 1] = Layer::activate(pre[l], layers_[l].activation);
      if (!post[l + 1].allFinite())
        throw NumericError(
            "Mlp: non-finite activations first appeared in layer " +
            std::to_string(l));
    }
    Tape tape;
    tape.loss = loss_value(post.back(), targets, sample_weights);
    if (!std::isfinite(tape.loss))
      throw NumericError("Mlp: non-finite loss at the output layer");
    tape.grad_weights.resize(layers_.size());
    tape.grad_bias.resize(layers_.size());
    Matrix grad_out = loss_gradient(post.back(), targets, sample_weights);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Matrix grad_pre = Layer::activation_backward(
          grad_out, pre[l], post[l + 1], layers_[l].activation);
      tape.grad_weights[l] = post[l].transpose() * grad_pre;
      tape.grad_bias[l] = grad_pre.colwise().sum().transpose();
      if (l > 0) grad_out = grad_pre * layers_[l].weights.transpose();
    }
    return tape;
  }

  void check_batch(const Matrix& inputs, const Matrix& targets,
                   const Vector& sample_weights) const {
    if (inputs.rows() == 0) throw DimensionError("Mlp: empty batch");
    if (inputs.cols() != input_size())
      throw DimensionError("Mlp: input width mismatch");
    if (targets.rows() != inputs.rows() || targets.cols() != output_size())
      throw DimensionError("Mlp: target shape mismatch");
    if (sample_weights.size() != inputs.rows())
      throw DimensionError("Mlp: sample weight length mismatch");
  }

  double loss_value(const Matrix& outputs, const Matrix& targets,
                    const Vector& weights) const {
    const int batch = static_cast<int>(outputs.rows());
    double total = 0.0;
    if (loss_ == LossKind::WeightedCrossEntropy) {
      for (int r = 0; r < batch; ++r) {
        double sample = 0.0;
        for (int c = 0; c < outputs.cols(); ++c)
          if (targets(r, c) != 0.0)
            sample -= targets(r, c) *
                      std::log(std::max(outputs(r, c), kLogFloor));
        total += weights(r) * sample;
      }
    } else {
      for (int r = 0; r < batch; ++r)
        total += weights(r) *
                 (outputs.row(r) - targets.row(r)).squaredNorm() /
                 static_cast<double>(outputs.cols());
    }
    return total / batch;
  }

  Matrix loss_gradient(const Matrix& outputs, const Matrix& targets,
                       const Vector& weights) const {
    const double batch = static_cast<double>(outputs.rows());
    Matrix grad(outputs.rows(), outputs.cols());
    if (loss_ == LossKind::WeightedCrossEntropy) {
      for (int r = 0; r < outputs.rows(); ++r)
        for (int c = 0; c < outputs.cols(); ++c) {
          // flat region of the clamped log carries zero gradient
          if (targets(r, c) != 0.0 && outputs(r, c) > kLogFloor)
            grad(r, c) = -weights(r) * targets(r, c) / (batch * outputs(r, c));
          else
            grad(r, c) = 0.0;
        }
    } else {
      for (int r = 0; r < outputs.rows(); ++r)
        grad.row(r) = weights(r) * 2.0 * (outputs.row(r) - targets.row(r)) /
                      (batch * static_cast<double>(outputs.cols()));
    }
    return grad;
  }

  static std::string activation_name(Activation act) {
    switch (act) {
      case Activation::Relu: return "relu";
      case Activation::Softmax: return "softmax";
      case Activation::Linear: return "linear";
    }
    return "?";
  }

  static Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "softmax") return Activation::Softmax;
    if (name == "linear") return Activation::Linear;
    throw ConfigError("Mlp: unknown activation name '" + name + "'");
  }

  static std::string loss_name(LossKind loss) {
    return loss == LossKind::WeightedCrossEntropy ? "wcec" : "mse";
  }

  static LossKind loss_from_name(const std::string& name) {
    if (name == "wcec") return LossKind::WeightedCrossEntropy;
    if (name == "mse") return LossKind::MeanSquaredError;
    throw ConfigError("Mlp: unknown loss name '" + name + "'");
  }

  static constexpr double kLogFloor = 1e-12;

  std::vector<Layer> layers_;
  std::vector<AdamState> adam_weights_;
  std::vector<AdamState> adam_bias_;
  LossKind loss_;
};

}  // namespace lqrl
