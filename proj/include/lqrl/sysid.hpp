#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "lqrl/envs.hpp"
#include "lqrl/numerics.hpp"

namespace lqrl {

// ARX model y(t) + a1 y(t-1) + ... + an y(t-n) = b1 u(t-1) + ... + bm u(t-m),
// parameterized as theta = [a1..an, b1..bm].
struct ArxModel {
  int output_lags = 0;  // n
  int input_lags = 0;   // m
  Vector theta;
};

// phi(t) = [-y(t-1),...,-y(t-n), u(t-1),...,u(t-m)], 0-based sample indices.
inline Vector arx_regressor(const std::vector<double>& y_history,
                            const std::vector<double>& u_history, int t, int n,
                            int m) {
  if (n < 0 || m < 0 || n + m == 0)
    throw DomainError("arx_regressor: need at least one lag");
  if (t < std::max(n, m) || t > static_cast<int>(y_history.size()) ||
      t > static_cast<int>(u_history.size()))
    throw DomainError("arx_regressor: insufficient history at time " +
                      std::to_string(t));
  Vector phi(n + m);
  for (int i = 0; i < n; ++i) phi(i) = -y_history[t - 1 - i];
  for (int i = 0; i < m; ++i) phi(n + i) = u_history[t - 1 - i];
  return phi;
}

inline double arx_predict(const ArxModel& model, const Vector& phi) {
  if (phi.size() != model.theta.size())
    throw DimensionError("arx_predict: regressor width mismatch");
  return phi.dot(model.theta);
}

// Batch least-squares fit of the ARX parameters over all usable samples.
inline ArxModel arx_fit_batch(const std::vector<double>& y_series,
                              const std::vector<double>& u_series, int n,
                              int m) {
  if (n < 0 || m < 0 || n + m == 0)
    throw DomainError("arx_fit_batch: need at least one lag");
  const int start = std::max(n, m);
  const int samples =
      static_cast<int>(std::min(y_series.size(), u_series.size()));
  const int rows = samples - start;
  if (rows < n + m + 1)
    throw DomainError("arx_fit_batch: series too short for the lag orders");
  Matrix design(rows, n + m);
  Vector target(rows);
  for (int t = start; t < samples; ++t) {
    design.row(t - start) =
        arx_regressor(y_series, u_series, t, n, m).transpose();
    target(t - start) = y_series[t];
  }
  ArxModel model;
  model.output_lags = n;
  model.input_lags = m;
  model.theta = least_squares(design, target);
  return model;
}

// Recursive least squares in information form.
struct RlsState {
  Vector theta;
  Matrix information;  // D
};

inline RlsState rls_init(int dim, double delta = 1e-6) {
  if (dim < 1) throw DimensionError("rls_init: dimension must be positive");
  if (delta <= 0.0) throw DomainError("rls_init: delta must be positive");
  return {Vector::Zero(dim), delta * Matrix::Identity(dim, dim)};
}

// theta(t) = theta(t-1) + D_t^-1 [y(t) - phi' theta(t-1)] phi,
// D_t = D_{t-1} + phi phi'. The innovation drives the update.
inline RlsState rls_update(const RlsState& state, double y_t,
                           const Vector& phi) {
  if (phi.size() != state.theta.size())
    throw DimensionError("rls_update: regressor width mismatch");
  RlsState next;
  next.information = state.information + phi * phi.transpose();
  const double innovation = y_t - phi.dot(state.theta);
  next.theta = state.theta + next.information.ldlt().solve(phi) * innovation;
  return next;
}

// dyhat/dtheta for the ARX predictor; identical to the regressor, which is
// what lets RLS read as a gradient step on the prediction error.
inline Vector prediction_error_gradient(const ArxModel& model,
                                        const Vector& phi) {
  if (phi.size() != model.theta.size())
    throw DimensionError("prediction_error_gradient: width mismatch");
  return phi;
}

struct LinearSsEstimate {
  Matrix a_hat;
  Matrix b_hat;
};

// Least squares on s' = [A B] [s; a] over all recorded transitions.
inline LinearSsEstimate identify_linear_ss(const Trajectory& traj) {
  if (traj.size() == 0)
    throw DomainError("identify_linear_ss: empty trajectory");
  const int n = static_cast<int>(traj.states[0].size());
  const int m = static_cast<int>(traj.actions[0].size());
  const int rows = static_cast<int>(traj.size());
  if (rows < 2 * (n + m))
    throw DomainError("identify_linear_ss: need at least 2(n+m) samples");
  Matrix design(rows, n + m);
  Matrix target(rows, n);
  for (int t = 0; t < rows; ++t) {
    design.row(t).head(n) = traj.states[t].transpose();
    design.row(t).tail(m) = traj.actions[t].transpose();
    target.row(t) = traj.next_states[t].transpose();
  }
  const Matrix coeffs = least_squares(design, target);  // (n+m) x n
  LinearSsEstimate est;
  est.a_hat = coeffs.topRows(n).transpose();
  est.b_hat = coeffs.bottomRows(m).transpose();
  return est;
}

struct AdaptiveLqResult {
  Trajectory trajectory;
  std::vector<Matrix> gains;  // initial gain, then one entry per replan
  int failed_replans = 0;
};

// Certainty-equivalence adaptive control: act with the current gain plus
// Gaussian excitation, periodically re-identify (A, B) from all data so far
// and recompute the gain from the Riccati solution for the estimates. The
// first 10(n+m) steps use pure excitation. Identification failures keep the
// previous gain.
inline AdaptiveLqResult adaptive_lq_control(const LinearQuadraticEnv& env,
                                            int horizon, double excitation_std,
                                            int replan_every, RngStream& rng) {
  if (horizon < 1 || replan_every < 1)
    throw DomainError(
        "adaptive_lq_control: horizon and replan_every must be positive");
  if (excitation_std < 0.0)
    throw DomainError("adaptive_lq_control: negative excitation");
  const int n = env.state_dim();
  const int m = env.action_dim();
  const int excitation_window = 10 * (n + m);
  AdaptiveLqResult result;
  Matrix gain = Matrix::Zero(m, n);
  result.gains.push_back(gain);
  Vector state = Vector::Zero(n);
  for (int t = 0; t < horizon; ++t) {
    Vector action = excitation_std * rng.standard_normal_vector(m);
    if (t >= excitation_window) action += gain * state;
    auto [next, cost] = lq_step(env, state, action, rng);
    result.trajectory.states.push_back(state);
    result.trajectory.actions.push_back(action);
    result.trajectory.rewards.push_back(cost);
    result.trajectory.next_states.push_back(next);
    result.trajectory.dones.push_back(false);
    state = next;
    if ((t + 1) % replan_every == 0) {
      try {
        const LinearSsEstimate est = identify_linear_ss(result.trajectory);
        gain = solve_dare(est.a_hat, est.b_hat, env.state_weight(),
                          env.control_weight())
                   .gain;
        result.gains.push_back(gain);
      } catch (const SingularityError&) {
        ++result.failed_replans;
      } catch (const DomainError&) {
        ++result.failed_replans;
      }
    }
  }
  return result;
}

}  // namespace lqrl
