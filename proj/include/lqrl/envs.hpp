#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "lqrl/numerics.hpp"

namespace lqrl {

// One possible outcome of taking an action in a tabular MDP state.
struct RewardOutcome {
  double probability;
  double reward;
  int next_state;
};

using RewardTable = std::vector<std::vector<std::vector<RewardOutcome>>>;

class TabularMDP {
 public:
  TabularMDP(std::vector<Matrix> transition, RewardTable rewards, double gamma)
      : transition_(std::move(transition)),
        rewards_(std::move(rewards)),
        gamma_(gamma) {
    if (transition_.empty()) throw DimensionError("TabularMDP: no actions");
    n_states_ = static_cast<int>(transition_[0].rows());
    n_actions_ = static_cast<int>(transition_.size());
    if (gamma_ < 0.0 || gamma_ > 1.0)
      throw DomainError("TabularMDP: gamma outside [0,1]");
    for (const Matrix& p : transition_) {
      if (p.rows() != n_states_ || p.cols() != n_states_)
        throw DimensionError("TabularMDP: transition matrix shape mismatch");
      for (int s = 0; s < n_states_; ++s) {
        if (p.row(s).minCoeff() < -1e-12)
          throw DomainError("TabularMDP: negative transition probability");
        if (std::abs(p.row(s).sum() - 1.0) > 1e-9)
          throw DomainError("TabularMDP: transition row does not sum to 1");
      }
    }
    if (rewards_.size() != static_cast<std::size_t>(n_states_))
      throw DimensionError("TabularMDP: reward table state count mismatch");
    for (int s = 0; s < n_states_; ++s) {
      if (rewards_[s].size() != static_cast<std::size_t>(n_actions_))
        throw DimensionError("TabularMDP: reward table action count mismatch");
      for (int a = 0; a < n_actions_; ++a) {
        Vector marginal = Vector::Zero(n_states_);
        double total = 0.0;
        for (const RewardOutcome& o : rewards_[s][a]) {
          if (o.probability < 0.0 || o.next_state < 0 ||
              o.next_state >= n_states_)
            throw DomainError("TabularMDP: invalid reward outcome");
          total += o.probability;
          marginal(o.next_state) += o.probability;
        }
        if (std::abs(total - 1.0) > 1e-9)
          throw DomainError("TabularMDP: outcome probabilities do not sum to 1");
        if ((marginal - transition_[a].row(s).transpose()).cwiseAbs().maxCoeff() >
            1e-9)
          throw DomainError(
              "TabularMDP: outcome next-state marginal disagrees with the "
              "transition row");
      }
    }
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  const Matrix& transition(int action) const { return transition_.at(action); }
  const std::vector<RewardOutcome>& outcomes(int s, int a) const {
    check_indices(s, a);
    return rewards_[s][a];
  }

  void check_indices(int s, int a) const {
    if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_)
      throw DomainError("TabularMDP: state or action index out of range");
  }

 private:
  std::vector<Matrix> transition_;
  RewardTable rewards_;
  double gamma_;
  int n_states_ = 0;
  int n_actions_ = 0;
};

inline std::pair<int, double> mdp_step(const TabularMDP& mdp, int s, int a,
                                       RngStream& rng) {
  const auto& outcomes = mdp.outcomes(s, a);
  Vector probs(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    probs(static_cast<int>(i)) = outcomes[i].probability;
  const auto& chosen = outcomes[rng.choice(probs)];
  return {chosen.next_state, chosen.reward};
}

inline double mdp_expected_reward(const TabularMDP& mdp, int s, int a) {
  double expected = 0.0;
  for (const RewardOutcome& o : mdp.outcomes(s, a))
    expected += o.probability * o.reward;
  return expected;
}

// Three-state, two-action demo MDP with one stochastic reward entry whose
// expectation is 4.4; used by the mdp-demo experiment and golden tests.
inline TabularMDP three_state_demo_mdp(double gamma = 0.9) {
  Matrix p0(3, 3);
  p0 << 0.5, 0.0, 0.5,
        0.7, 0.1, 0.2,
        0.4, 0.0, 0.6;
  Matrix p1(3, 3);
  p1 << 0.0, 0.0,  1.0,
        0.0, 0.95, 0.05,
        0.3, 0.3,  0.4;
  RewardTable rewards(3, std::vector<std::vector<RewardOutcome>>(2));
  auto from_row = [](const Matrix& p, int s) {
    std::vector<RewardOutcome> outcomes;
    for (int s2 = 0; s2 < p.cols(); ++s2)
      if (p(s, s2) > 0.0) outcomes.push_back({p(s, s2), 0.0, s2});
    return outcomes;
  };
  for (int s = 0; s < 3; ++s) {
    rewards[s][0] = from_row(p0, s);
    rewards[s][1] = from_row(p1, s);
  }
  rewards[1][0] = {{0.1, -1.0, 1}, {0.7, 5.0, 0}, {0.2, 5.0, 2}};
  return TabularMDP({p0, p1}, rewards, gamma);
}

// Cart with an inverted pole on a frictionless track, two actions pushing
// with +/- force_mag. State is (x, xdot, theta, thetadot).
struct CartPoleEnv {
  double gravity = 9.8;           // m/s^2
  double cart_mass = 1.0;         // kg
  double pole_mass = 0.1;         // kg
  double pole_half_length = 0.5;  // m
  double force_mag = 10.0;        // N
  double time_step = 0.02;        // s
  double x_threshold = 2.4;
  double theta_threshold = 12.0 * std::numbers::pi / 180.0;
  int max_episode_steps = 200;

  double total_mass() const { return cart_mass + pole_mass; }
  bool upright(const Vector& state) const {
    return std::abs(state(0)) < x_threshold &&
           std::abs(state(2)) < theta_threshold;
  }
};

struct CartPoleStep {
  Vector state;
  double reward;
  bool done;
};

// One explicit-Euler step of the standard cartpole dynamics. steps_taken is
// the number of steps already elapsed in the episode; the episode ends when
// it reaches max_episode_steps or a threshold is crossed. Reward is 1 iff the
// post-step state is upright.
inline CartPoleStep cartpole_step(const CartPoleEnv& env, const Vector& state,
                                  int action, int steps_taken = 0) {
  if (action != 0 && action != 1)
    throw DomainError("cartpole_step: action must be 0 or 1");
  if (state.size() != 4)
    throw DimensionError("cartpole_step: state must have 4 components");
  const double force = action == 1 ? env.force_mag : -env.force_mag;
  const double x = state(0), x_dot = state(1);
  const double theta = state(2), theta_dot = state(3);
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double pole_ml = env.pole_mass * env.pole_half_length;
  const double temp =
      (force + pole_ml * theta_dot * theta_dot * sin_t) / env.total_mass();
  const double theta_acc =
      (env.gravity * sin_t - cos_t * temp) /
      (env.pole_half_length *
       (4.0 / 3.0 - env.pole_mass * cos_t * cos_t / env.total_mass()));
  const double x_acc = temp - pole_ml * theta_acc * cos_t / env.total_mass();
  Vector next(4);
  next << x + env.time_step * x_dot, x_dot + env.time_step * x_acc,
      theta + env.time_step * theta_dot, theta_dot + env.time_step * theta_acc;
  CartPoleStep out;
  out.state = next;
  const bool upright = env.upright(next);
  out.reward = upright ? 1.0 : 0.0;
  out.done = !upright || steps_taken + 1 >= env.max_episode_steps;
  return out;
}

inline Vector cartpole_reset(const CartPoleEnv&, RngStream& rng) {
  Vector state(4);
  for (int i = 0; i < 4; ++i) state(i) = rng.uniform() * 0.1 - 0.05;
  return state;
}

// s' = A s + B a + w with w ~ N(0, W); running cost s'Qs + a'Ra.
class LinearQuadraticEnv {
 public:
  LinearQuadraticEnv(Matrix a, Matrix b, Matrix state_weight,
                     Matrix control_weight, Matrix noise_covariance)
      : a_(std::move(a)),
        b_(std::move(b)),
        q_(std::move(state_weight)),
        r_(std::move(control_weight)),
        w_(std::move(noise_covariance)) {
    n_ = static_cast<int>(a_.rows());
    m_ = static_cast<int>(b_.cols());
    if (a_.cols() != n_ || b_.rows() != n_ || q_.rows() != n_ ||
        q_.cols() != n_ || r_.rows() != m_ || r_.cols() != m_ ||
        w_.rows() != n_ || w_.cols() != n_)
      throw DimensionError("LinearQuadraticEnv: inconsistent dimensions");
    if ((w_ - w_.transpose()).cwiseAbs().maxCoeff() > 1e-9 ||
        (q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-9 ||
        (r_ - r_.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw DomainError("LinearQuadraticEnv: Q, R, W must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(w_);
    if (es.eigenvalues().minCoeff() < -1e-9)
      throw DomainError("LinearQuadraticEnv: noise covariance not PSD");
    if (Eigen::LLT<Matrix>(r_).info() != Eigen::Success)
      throw DomainError("LinearQuadraticEnv: control weight not PD");
    noise_sqrt_ = es.eigenvectors() *
                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose();
  }

  int state_dim() const { return n_; }
  int action_dim() const { return m_; }
  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& state_weight() const { return q_; }
  const Matrix& control_weight() const { return r_; }
  const Matrix& noise_covariance() const { return w_; }
  const Matrix& noise_sqrt() const { return noise_sqrt_; }

 private:
  Matrix a_, b_, q_, r_, w_, noise_sqrt_;
  int n_ = 0, m_ = 0;
};

inline std::pair<Vector, double> lq_step(const LinearQuadraticEnv& env,
                                         const Vector& s, const Vector& a,
                                         RngStream& rng) {
  if (s.size() != env.state_dim() || a.size() != env.action_dim())
    throw DimensionError("lq_step: state or action dimension mismatch");
  const Vector noise =
      env.noise_sqrt() * rng.standard_normal_vector(env.state_dim());
  const Vector next = env.a() * s + env.b() * a + noise;
  const double cost = s.dot(env.state_weight() * s) +
                      a.dot(env.control_weight() * a);
  return {next, cost};
}

inline bool is_stable(const LinearQuadraticEnv& env, const Matrix& k) {
  if (k.rows() != env.action_dim() || k.cols() != env.state_dim())
    throw DimensionError("is_stable: gain shape mismatch");
  return spectral_radius(env.a() + env.b() * k) < 1.0 - 1e-9;
}

// Scalar system used throughout the tests: a=0.9, b=0.5, q=r=1, w=0.01.
inline LinearQuadraticEnv scalar_lq_benchmark() {
  Matrix one(1, 1);
  one << 1.0;
  Matrix a(1, 1), b(1, 1), w(1, 1);
  a << 0.9;
  b << 0.5;
  w << 0.01;
  return LinearQuadraticEnv(a, b, one, one, w);
}

// Marginally stable 2-state single-input system (a scaled double integrator).
inline LinearQuadraticEnv double_integrator_lq_benchmark() {
  Matrix a(2, 2), b(2, 1), q(2, 2), r(1, 1), w(2, 2);
  a << 0.99, 0.099, 0.0, 0.99;
  b << 0.0, 0.1;
  q = Matrix::Identity(2, 2);
  r << 1.0;
  w = 0.01 * Matrix::Identity(2, 2);
  return LinearQuadraticEnv(a, b, q, r, w);
}

// One rollout. For cartpole the rewards are 0/1 step rewards; for the LQ
// environment the rewards field stores running costs.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::vector<double> rewards;
  std::vector<Vector> next_states;
  std::vector<bool> dones;

  std::size_t size() const { return states.size(); }
};

inline bool trajectory_is_consistent(const Trajectory& t) {
  const std::size_t n = t.states.size();
  if (t.actions.size() != n || t.rewards.size() != n ||
      t.next_states.size() != n || t.dones.size() != n)
    return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (t.dones[i] && i + 1 != n) return false;
    if (i + 1 < n && !t.dones[i] &&
        (t.next_states[i] - t.states[i + 1]).cwiseAbs().maxCoeff() != 0.0)
      return false;
  }
  return true;
}

using DiscretePolicy = std::function<int(const Vector&)>;
using ContinuousPolicy = std::function<Vector(const Vector&)>;

inline Trajectory rollout(const CartPoleEnv& env, const DiscretePolicy& policy,
                          int max_steps, RngStream& rng) {
  if (max_steps < 1) throw DomainError("rollout: max_steps must be >= 1");
  Trajectory traj;
  Vector state = cartpole_reset(env, rng);
  for (int t = 0; t < max_steps; ++t) {
    const int action = policy(state);
    const CartPoleStep step = cartpole_step(env, state, action, t);
    traj.states.push_back(state);
    traj.actions.push_back(Vector::Constant(1, static_cast<double>(action)));
    traj.rewards.push_back(step.reward);
    traj.next_states.push_back(step.state);
    traj.dones.push_back(step.done);
    state = step.state;
    if (step.done) break;
  }
  return traj;
}

// LQ rollouts run for exactly `steps` steps from the zero initial state; the
// process noise supplies the excitation.
inline Trajectory rollout(const LinearQuadraticEnv& env,
                          const ContinuousPolicy& policy, int steps,
                          RngStream& rng) {
  if (steps < 1) throw DomainError("rollout: steps must be >= 1");
  Trajectory traj;
  Vector state = Vector::Zero(env.state_dim());
  for (int t = 0; t < steps; ++t) {
    const Vector action = policy(state);
    auto [next, cost] = lq_step(env, state, action, rng);
    traj.states.push_back(state);
    traj.actions.push_back(action);
    traj.rewards.push_back(cost);
    traj.next_states.push_back(next);
    traj.dones.push_back(false);
    state = next;
  }
  return traj;
}

// Total reward per the discounted sum whose exponent starts at gamma^1.
inline double total_reward(const std::vector<double>& rewards, double gamma) {
  if (rewards.empty()) throw DomainError("total_reward: empty reward list");
  if (gamma < 0.0 || gamma > 1.0)
    throw DomainError("total_reward: gamma outside [0,1]");
  double total = 0.0;
  double weight = gamma;
  for (double r : rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

inline double average_cost(const std::vector<double>& costs) {
  if (costs.empty()) throw DomainError("average_cost: empty cost list");
  double sum = 0.0;
  for (double c : costs) sum += c;
  return sum / static_cast<double>(costs.size());
}

// Suffix sums computed by the reverse recursion sum = r + gamma * sum, so the
// current step carries weight gamma^0.
inline std::vector<double> rewards_to_go(const std::vector<double>& rewards,
                                         double gamma) {
  if (rewards.empty()) throw DomainError("rewards_to_go: empty reward list");
  if (gamma < 0.0 || gamma > 1.0)
    throw DomainError("rewards_to_go: gamma outside [0,1]");
  std::vector<double> to_go(rewards.size());
  double sum = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    sum = rewards[i] + gamma * sum;
    to_go[i] = sum;
  }
  return to_go;
}

}  // namespace lqrl
