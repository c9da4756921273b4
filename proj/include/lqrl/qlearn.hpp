#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "lqrl/envs.hpp"
#include "lqrl/mlp.hpp"
#include "lqrl/numerics.hpp"

namespace lqrl {

// Q-network agent for finite action sets; one output per action.
struct DiscreteQAgent {
  Mlp network;
  double epsilon;
  double gamma;

  DiscreteQAgent(Mlp net, double epsilon_, double gamma_)
      : network(std::move(net)), epsilon(epsilon_), gamma(gamma_) {
    if (epsilon < 0.0 || epsilon > 1.0)
      throw DomainError("DiscreteQAgent: epsilon outside [0,1]");
  }

  int n_actions() const { return network.output_size(); }
};

inline DiscreteQAgent make_discrete_q_agent(int n_states, int n_actions,
                                            const std::vector<int>& hidden,
                                            double epsilon, double gamma,
                                            std::uint64_t seed,
                                            double learning_rate,
                                            double adam_epsilon = 1e-8) {
  std::vector<int> sizes{n_states};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_actions);
  std::vector<Activation> acts(hidden.size(), Activation::Relu);
  acts.push_back(Activation::Linear);
  return DiscreteQAgent(Mlp(sizes, acts, LossKind::MeanSquaredError, seed,
                            learning_rate, adam_epsilon),
                        epsilon, gamma);
}

inline int greedy_action(const DiscreteQAgent& agent, const Vector& state) {
  const Vector q = agent.network.forward(state);
  int best = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q(i) > q(best)) best = i;  // ties keep the lowest index
  return best;
}

inline int epsilon_greedy_action(const DiscreteQAgent& agent,
                                 const Vector& state, RngStream& rng) {
  if (rng.uniform() < agent.epsilon) return rng.uniform_int(agent.n_actions());
  return greedy_action(agent, state);
}

// One TD step: targets equal current outputs except at the taken actions,
// which become r (terminal) or r + gamma * max_a Q(s', a).
inline double td_update_discrete(DiscreteQAgent& agent,
                                 const std::vector<Vector>& states,
                                 const std::vector<int>& actions,
                                 const std::vector<double>& rewards,
                                 const std::vector<Vector>& next_states,
                                 const std::vector<bool>& dones) {
  const std::size_t n = states.size();
  if (n == 0 || actions.size() != n || rewards.size() != n ||
      next_states.size() != n || dones.size() != n)
    throw DimensionError("td_update_discrete: parallel lists required");
  Matrix inputs(n, states[0].size());
  Matrix next_inputs(n, states[0].size());
  for (std::size_t i = 0; i < n; ++i) {
    inputs.row(static_cast<int>(i)) = states[i].transpose();
    next_inputs.row(static_cast<int>(i)) = next_states[i].transpose();
  }
  Matrix targets = agent.network.forward(inputs);
  const Matrix next_q = agent.network.forward(next_inputs);
  for (std::size_t i = 0; i < n; ++i) {
    const int row = static_cast<int>(i);
    if (actions[i] < 0 || actions[i] >= agent.n_actions())
      throw DomainError("td_update_discrete: action index out of range");
    targets(row, actions[i]) =
        dones[i] ? rewards[i]
                 : rewards[i] + agent.gamma * next_q.row(row).maxCoeff();
  }
  return agent.network.train_on_batch(inputs, targets);
}

struct Transition {
  Vector state;
  int action;
  double reward;
  Vector next_state;
  bool done;
};

struct ReplayBatch {
  std::vector<Vector> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<Vector> next_states;
  std::vector<bool> dones;
};

// FIFO transition memory with uniform without-replacement sampling.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 100000) : capacity_(capacity) {
    if (capacity_ == 0) throw DomainError("ReplayMemory: zero capacity");
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

  void remember(const Vector& s, int a, double r, const Vector& s2, bool done) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back({s, a, r, s2, done});
  }

  // Draws min(size, batch_size) distinct entries uniformly.
  ReplayBatch sample(std::size_t batch_size, RngStream& rng) const {
    if (entries_.empty())
      throw DomainError("ReplayMemory: sampling empty memory");
    const std::size_t k = std::min(entries_.size(), batch_size);
    std::vector<std::size_t> picked;
    picked.reserve(k);
    if (k == entries_.size()) {
      for (std::size_t i = 0; i < k; ++i) picked.push_back(i);
    } else {
      // rejection sampling; the batch is much smaller than the memory here
      while (picked.size() < k) {
        const auto candidate = static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(entries_.size())));
        if (std::find(picked.begin(), picked.end(), candidate) == picked.end())
          picked.push_back(candidate);
      }
    }
    ReplayBatch batch;
    for (std::size_t i : picked) {
      const Transition& t = entries_[i];
      batch.states.push_back(t.state);
      batch.actions.push_back(t.action);
      batch.rewards.push_back(t.reward);
      batch.next_states.push_back(t.next_state);
      batch.dones.push_back(t.done);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  std::deque<Transition> entries_;
};

inline void decay_epsilon(DiscreteQAgent& agent, double decay = 0.995,
                          double floor = 0.01) {
  agent.epsilon = std::max(floor, agent.epsilon * decay);
}

// Quadratic Q(s,a) = z' G z with z = [s; a] and symmetric G.
class QuadraticQ {
 public:
  QuadraticQ(Matrix g, int state_dim, int action_dim)
      : g_(std::move(g)), n_(state_dim), m_(action_dim) {
    if (g_.rows() != n_ + m_ || g_.cols() != n_ + m_)
      throw DimensionError("QuadraticQ: kernel dimension mismatch");
    if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw DomainError("QuadraticQ: kernel must be symmetric");
    g_ = 0.5 * (g_ + g_.transpose());
  }

  const Matrix& kernel() const { return g_; }
  int state_dim() const { return n_; }
  int action_dim() const { return m_; }
  Matrix g_ss() const { return g_.topLeftCorner(n_, n_); }
  Matrix g_sa() const { return g_.topRightCorner(n_, m_); }
  Matrix g_aa() const { return g_.bottomRightCorner(m_, m_); }

 private:
  Matrix g_;
  int n_, m_;
};

inline double quadratic_q_value(const QuadraticQ& q, const Vector& s,
                                const Vector& a) {
  if (s.size() != q.state_dim() || a.size() != q.action_dim())
    throw DimensionError("quadratic_q_value: dimension mismatch");
  Vector z(s.size() + a.size());
  z << s, a;
  return z.dot(q.kernel() * z);
}

// Analytic argmin of the quadratic Q over actions: K = -g_aa^-1 g_sa'.
inline Matrix policy_improve(const QuadraticQ& q) {
  Eigen::FullPivLU<Matrix> lu(q.g_aa());
  const double condition =
      1.0 / std::max(lu.rcond(), std::numeric_limits<double>::min());
  if (!lu.isInvertible() || !(condition < 1e12))
    throw SingularityError("policy_improve: g_aa is not invertible", condition);
  return -lu.solve(q.g_sa().transpose());
}

// Value kernel of the policy a = K s under this Q:
// P = g_ss + g_sa K + K' g_sa' + K' g_aa K.
inline Matrix g_to_p(const QuadraticQ& q, const Matrix& gain) {
  if (gain.rows() != q.action_dim() || gain.cols() != q.state_dim())
    throw DimensionError("g_to_p: gain shape mismatch");
  const Matrix cross = q.g_sa() * gain;
  Matrix p = q.g_ss() + cross + cross.transpose() +
             gain.transpose() * q.g_aa() * gain;
  return 0.5 * (p + p.transpose());
}

inline Vector gaussian_exploration_action(const Matrix& gain, const Vector& s,
                                          double stddev, RngStream& rng) {
  if (stddev < 0.0)
    throw DomainError("gaussian_exploration_action: negative stddev");
  return gain * s +
         stddev * rng.standard_normal_vector(static_cast<int>(gain.rows()));
}

// LSTD evaluation of the quadratic Q for the policy a = K s from one
// exploratory trajectory. Features are Psi_t = vecv([s_t; a_t]) and
// Psi'_t = vecv([s'_t; K s'_t]); the regression solves
//   (Psi_t - gamma Psi'_t)' vecs(G) = target_t
// with instruments Psi_t. In average-cost mode (gamma == 1) the target is
// c_t - lambda; in discounted mode (gamma < 1) it is c_t and lambda is unused.
inline QuadraticQ lstd_evaluate(const Trajectory& traj, const Matrix& gain,
                                double lambda, double gamma) {
  if (traj.size() == 0) throw DomainError("lstd_evaluate: empty trajectory");
  if (gamma <= 0.0 || gamma > 1.0)
    throw DomainError("lstd_evaluate: gamma must lie in (0,1]");
  const int n = static_cast<int>(traj.states[0].size());
  const int m = static_cast<int>(traj.actions[0].size());
  if (gain.rows() != m || gain.cols() != n)
    throw DimensionError("lstd_evaluate: gain shape mismatch");
  const int dim = sym_vec_length(n + m);
  const int t_len = static_cast<int>(traj.size());
  if (t_len < 3 * dim)
    throw DomainError(
        "lstd_evaluate: trajectory shorter than 3 x feature dimension; "
        "collect more data");
  Matrix x(t_len, dim);
  Matrix instruments(t_len, dim);
  Vector y(t_len);
  Vector z(n + m);
  Vector z_next(n + m);
  for (int t = 0; t < t_len; ++t) {
    z << traj.states[t], traj.actions[t];
    z_next << traj.next_states[t], gain * traj.next_states[t];
    const Vector psi = vecv(z).data;
    const Vector psi_next = vecv(z_next).data;
    x.row(t) = (psi - gamma * psi_next).transpose();
    instruments.row(t) = psi.transpose();
    y(t) = gamma == 1.0 ? traj.rewards[t] - lambda : traj.rewards[t];
  }
  SymVec estimate;
  estimate.n = n + m;
  estimate.data = instrumental_variable_regression(x, y, instruments);
  return QuadraticQ(mat_from_vecs(estimate, n + m), n, m);
}

struct LqQlConfig {
  int iterations = 10;
  int trajectory_length = 2000;
  double explore_mag = 1.0;

  void validate() const {
    if (iterations < 0 || trajectory_length < 1 || explore_mag <= 0.0)
      throw ConfigError("LqQlConfig: all parameters must be positive");
  }
};

struct LqQlResult {
  Matrix value;  // P
  Matrix gain;   // K
};

using LqQlIterationHook =
    std::function<void(int iteration, double average_cost, const Matrix& gain)>;

// LSTD Q-learning policy iteration for the LQ problem. Each iteration gates
// on closed-loop stability, estimates the average cost from an
// exploration-free rollout, evaluates Q by LSTD on an exploratory rollout,
// and improves the policy. An unstable gain aborts with zero matrices.
inline LqQlResult q_learning_lq(const LinearQuadraticEnv& env,
                                const Matrix& gain0, const LqQlConfig& config,
                                RngStream& rng,
                                const LqQlIterationHook& hook = nullptr) {
  config.validate();
  const int n = env.state_dim();
  const int m = env.action_dim();
  if (gain0.rows() != m || gain0.cols() != n)
    throw DimensionError("q_learning_lq: gain shape mismatch");
  LqQlResult result{Matrix::Zero(n, n), gain0};
  for (int k = 0; k < config.iterations; ++k) {
    if (!is_stable(env, result.gain))
      return {Matrix::Zero(n, n), Matrix::Zero(m, n)};
    const Matrix gain = result.gain;
    const Trajectory plain = rollout(
        env, [&](const Vector& s) { return Vector(gain * s); },
        config.trajectory_length, rng);
    const double lambda = average_cost(plain.rewards);
    const Trajectory exploratory = rollout(
        env,
        [&](const Vector& s) {
          return gaussian_exploration_action(gain, s, config.explore_mag, rng);
        },
        config.trajectory_length, rng);
    const QuadraticQ q = lstd_evaluate(exploratory, gain, lambda, 1.0);
    result.gain = policy_improve(q);
    result.value = g_to_p(q, result.gain);
    if (hook) hook(k, lambda, result.gain);
  }
  return result;
}

}  // namespace lqrl
