#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

#include "lqrl/envs.hpp"
#include "lqrl/mlp.hpp"
#include "lqrl/numerics.hpp"

namespace lqrl {

// Stochastic policy over a finite action set: the network's softmax output is
// the action pdf.
struct SoftmaxPolicyAgent {
  Mlp network;
  double gamma;
  int n_actions;

  SoftmaxPolicyAgent(Mlp net, double gamma_)
      : network(std::move(net)), gamma(gamma_), n_actions(network.output_size()) {}
};

inline SoftmaxPolicyAgent make_softmax_agent(int n_states, int n_actions,
                                             const std::vector<int>& hidden,
                                             double gamma, std::uint64_t seed,
                                             double learning_rate,
                                             double adam_epsilon = 1e-8) {
  std::vector<int> sizes{n_states};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_actions);
  std::vector<Activation> acts(hidden.size(), Activation::Relu);
  acts.push_back(Activation::Softmax);
  return SoftmaxPolicyAgent(
      Mlp(sizes, acts, LossKind::WeightedCrossEntropy, seed, learning_rate,
          adam_epsilon),
      gamma);
}

inline int sample_action_discrete(const SoftmaxPolicyAgent& agent,
                                  const Vector& state, RngStream& rng) {
  return rng.choice(agent.network.forward(state));
}

// Linear policy with isotropic Gaussian exploration: a = K s + sigma * noise
// when sampling is on, a = K s otherwise.
struct LinearGaussianPolicy {
  Matrix gain;  // m x n
  double sigma = 0.1;
  bool sampling = false;

  Vector mean(const Vector& state) const { return gain * state; }

  Vector act(const Vector& state, RngStream& rng) const {
    Vector a = mean(state);
    if (sampling)
      a += sigma * rng.standard_normal_vector(static_cast<int>(gain.rows()));
    return a;
  }
};

// log N(a; Ks, sigma^2 I) = -(m/2) log(2 pi sigma^2) - |a - Ks|^2 / (2 sigma^2)
inline double gaussian_log_likelihood(const LinearGaussianPolicy& policy,
                                      const Vector& state, const Vector& action) {
  if (policy.sigma <= 0.0)
    throw DomainError("gaussian_log_likelihood: sigma must be positive");
  if (state.size() != policy.gain.cols() || action.size() != policy.gain.rows())
    throw DimensionError("gaussian_log_likelihood: dimension mismatch");
  const double m = static_cast<double>(action.size());
  const double sq = (action - policy.mean(state)).squaredNorm();
  return -0.5 * m * std::log(2.0 * std::numbers::pi * policy.sigma * policy.sigma) -
         sq / (2.0 * policy.sigma * policy.sigma);
}

// Discounted rewards-to-go shifted to zero mean and unit population standard
// deviation. Constant rewards-to-go have zero deviation; that degenerate case
// yields an all-zero weight vector and sets *degenerate when provided.
inline Vector standardized_rewards_to_go(const std::vector<double>& rewards,
                                         double gamma,
                                         bool* degenerate = nullptr) {
  if (rewards.size() < 2)
    throw DomainError("standardized_rewards_to_go: need at least two rewards");
  const std::vector<double> to_go = rewards_to_go(rewards, gamma);
  const double n = static_cast<double>(to_go.size());
  double mean = 0.0;
  for (double v : to_go) mean += v;
  mean /= n;
  double variance = 0.0;
  for (double v : to_go) variance += (v - mean) * (v - mean);
  variance /= n;
  const double std_dev = std::sqrt(variance);
  Vector out(to_go.size());
  if (std_dev == 0.0) {
    if (degenerate) *degenerate = true;
    out.setZero();
    return out;
  }
  if (degenerate) *degenerate = false;
  for (std::size_t i = 0; i < to_go.size(); ++i)
    out(static_cast<int>(i)) = (to_go[i] - mean) / std_dev;
  return out;
}

// REINFORCE update for one episode: one-hot targets for the sampled actions,
// standardized rewards-to-go as sample weights, one cross-entropy batch step.
inline double pg_update_discrete(SoftmaxPolicyAgent& agent,
                                 const std::vector<Vector>& states,
                                 const std::vector<int>& actions,
                                 const std::vector<double>& rewards) {
  if (states.empty() || states.size() != actions.size() ||
      states.size() != rewards.size())
    throw DimensionError("pg_update_discrete: parallel lists required");
  const int batch = static_cast<int>(states.size());
  Matrix inputs(batch, states[0].size());
  Matrix targets(batch, agent.n_actions);
  for (int i = 0; i < batch; ++i) {
    inputs.row(i) = states[i].transpose();
    targets.row(i) = to_categorical(actions[i], agent.n_actions).transpose();
  }
  const Vector weights = standardized_rewards_to_go(rewards, agent.gamma);
  return agent.network.train_on_batch(inputs, targets, weights);
}

// Monte-Carlo policy gradient for the linear-Gaussian policy:
//   (1 / (sigma^2 |D|)) sum_traj (R_traj - baseline) sum_t (a_t - K s_t) s_t'
// where R_traj = -(sum of costs)/T. Accumulation is trajectory-major.
inline Matrix pg_gradient_linear(const std::vector<Trajectory>& batch,
                                 const Matrix& gain, double sigma,
                                 double baseline) {
  if (batch.empty()) throw DomainError("pg_gradient_linear: empty batch");
  if (sigma <= 0.0) throw DomainError("pg_gradient_linear: sigma must be positive");
  Matrix grad = Matrix::Zero(gain.rows(), gain.cols());
  const double scale = 1.0 / (sigma * sigma * static_cast<double>(batch.size()));
  for (const Trajectory& traj : batch) {
    if (traj.size() == 0) throw DomainError("pg_gradient_linear: empty trajectory");
    const double reward =
        -std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0) /
        static_cast<double>(traj.size());
    Matrix inner = Matrix::Zero(gain.rows(), gain.cols());
    for (std::size_t t = 0; t < traj.size(); ++t)
      inner += (traj.actions[t] - gain * traj.states[t]) *
               traj.states[t].transpose();
    grad += scale * (reward - baseline) * inner;
  }
  return grad;
}

inline double trajectory_mean_reward(const std::vector<Trajectory>& batch) {
  double sum = 0.0;
  for (const Trajectory& traj : batch)
    sum += -std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0) /
           static_cast<double>(traj.size());
  return sum / static_cast<double>(batch.size());
}

// Replaces a gain that picked up NaNs with safeguard * ones.
inline Matrix safe_gain(const Matrix& gain, double safeguard) {
  if (gain.hasNaN())
    return Matrix::Constant(gain.rows(), gain.cols(), safeguard);
  return gain;
}

struct PgLqConfig {
  int iterations = 100;
  int batch_size = 8;
  int trajectory_length = 100;
  double explore_mag = 0.1;
  double step_size = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double safeguard = 10.0;

  void validate() const {
    if (iterations < 0 || batch_size < 1 || trajectory_length < 1 ||
        explore_mag <= 0.0 || step_size <= 0.0 || safeguard <= 0.0)
      throw ConfigError("PgLqConfig: all parameters must be positive");
  }
};

using PgIterationHook =
    std::function<void(int iteration, double mean_reward, const Matrix& gain)>;

// Policy-gradient ascent on the LQ problem. The baseline is the previous
// iteration's mean per-trajectory reward, starting from 0.
inline Matrix pg_train_lq(const LinearQuadraticEnv& env, const Matrix& gain0,
                          const PgLqConfig& config, RngStream& rng,
                          const PgIterationHook& hook = nullptr) {
  config.validate();
  if (gain0.rows() != env.action_dim() || gain0.cols() != env.state_dim())
    throw DimensionError("pg_train_lq: gain shape mismatch");
  if (!gain0.allFinite()) throw DomainError("pg_train_lq: gain0 must be finite");
  Matrix gain = gain0;
  double baseline = 0.0;
  AdamState adam(static_cast<int>(gain.rows()), static_cast<int>(gain.cols()),
                 config.step_size, config.beta1, config.beta2, config.epsilon);
  LinearGaussianPolicy policy{gain, config.explore_mag, true};
  for (int k = 0; k < config.iterations; ++k) {
    policy.gain = gain;
    std::vector<Trajectory> batch;
    batch.reserve(config.batch_size);
    for (int j = 0; j < config.batch_size; ++j)
      batch.push_back(rollout(
          env, [&](const Vector& s) { return policy.act(s, rng); },
          config.trajectory_length, rng));
    const Matrix grad = pg_gradient_linear(batch, gain, config.explore_mag,
                                           baseline);
    baseline = trajectory_mean_reward(batch);
    gain += adam_step(adam, grad);
    if (hook) hook(k, baseline, gain);
  }
  return safe_gain(gain, config.safeguard);
}

}  // namespace lqrl
