#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lqrl/envs.hpp"
#include "lqrl/mlp.hpp"
#include "lqrl/numerics.hpp"
#include "lqrl/pg.hpp"
#include "lqrl/qlearn.hpp"
#include "lqrl/sysid.hpp"

namespace lqrl {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "pg-cartpole", "q-cartpole", "replay-q-cartpole", "pg-lq",
      "q-lq",        "sysid-lq",   "adaptive-lq",       "mdp-demo"};
  return names;
}

struct ExperimentConfig {
  std::string experiment = "mdp-demo";
  std::uint64_t seed = 0;
  std::string out_dir;        // empty: nothing is written
  int budget = -1;            // episodes/iterations/steps; -1 picks the default
  json hyperparameters = json::object();
  json environment = json::object();

  bool operator==(const ExperimentConfig& other) const {
    return experiment == other.experiment && seed == other.seed &&
           out_dir == other.out_dir && budget == other.budget &&
           hyperparameters == other.hyperparameters &&
           environment == other.environment;
  }
};

inline void to_json(json& j, const ExperimentConfig& config) {
  j = json{{"experiment", config.experiment},
           {"seed", config.seed},
           {"out", config.out_dir},
           {"budget", config.budget},
           {"hyperparameters", config.hyperparameters},
           {"environment", config.environment}};
}

inline void from_json(const json& j, ExperimentConfig& config) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::array<const char*, 6> known = {
      "experiment", "seed", "out", "budget", "hyperparameters", "environment"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("config: unknown field '" + key + "'");
  config = ExperimentConfig{};
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string())
      throw ConfigError("config: field 'experiment' must be a string");
    config.experiment = j["experiment"].get<std::string>();
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), config.experiment) == names.end())
    throw ConfigError("config: unknown experiment '" + config.experiment + "'");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ConfigError("config: field 'seed' must be an integer");
    config.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string())
      throw ConfigError("config: field 'out' must be a string");
    config.out_dir = j["out"].get<std::string>();
  }
  if (j.contains("budget")) {
    if (!j["budget"].is_number_integer())
      throw ConfigError("config: field 'budget' must be an integer");
    config.budget = j["budget"].get<int>();
    if (config.budget < -1 )
      throw ConfigError("config: field 'budget' must be >= 0");
  }
  if (j.contains("hyperparameters")) {
    if (!j["hyperparameters"].is_object())
      throw ConfigError("config: field 'hyperparameters' must be an object");
    config.hyperparameters = j["hyperparameters"];
  }
  if (j.contains("environment")) {
    if (!j["environment"].is_object())
      throw ConfigError("config: field 'environment' must be an object");
    config.environment = j["environment"];
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("load_config: " + std::string(e.what()));
  }
  return j.get<ExperimentConfig>();
}

struct RunRecord {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json final_metrics = json::object();
  std::string network_checkpoint;  // serialized Mlp, empty if none
  double duration_seconds = 0.0;
  std::uint64_t seed = 0;
  ExperimentConfig config;
};

struct SolveStatus {
  bool solved = false;
  int first_solved_index = -1;  // end index of the first qualifying window
};

// Solved when some window of 100 consecutive returns has mean >= 195.0
// (inclusive at exactly 195).
inline SolveStatus check_solved(const std::vector<double>& episode_returns) {
  constexpr int kWindow = 100;
  constexpr double kThreshold = 195.0;
  SolveStatus status;
  if (episode_returns.size() < kWindow) return status;
  double window_sum = 0.0;
  for (std::size_t i = 0; i < episode_returns.size(); ++i) {
    window_sum += episode_returns[i];
    if (i >= kWindow) window_sum -= episode_returns[i - kWindow];
    if (i + 1 >= kWindow && window_sum / kWindow >= kThreshold) {
      status.solved = true;
      status.first_solved_index = static_cast<int>(i);
      return status;
    }
  }
  return status;
}

inline double gain_gap(const Matrix& gain, const Matrix& optimal_gain) {
  if (gain.rows() != optimal_gain.rows() || gain.cols() != optimal_gain.cols())
    throw DimensionError("gain_gap: shape mismatch");
  return (gain - optimal_gain).norm();
}

namespace detail {

inline std::string format_value(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty())
    throw ConfigError("config: field '" + field + "' must be a matrix");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0)
    throw ConfigError("config: field '" + field + "' must be a matrix");
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError("config: field '" + field + "' is not rectangular");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ConfigError("config: field '" + field + "' has a non-number");
      m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

// Overlays user values onto defaults, rejecting keys the experiment does not
// define.
inline json resolve_params(const json& defaults, const json& overrides,
                           const std::string& what) {
  json resolved = defaults;
  for (const auto& [key, value] : overrides.items()) {
    if (!defaults.contains(key))
      throw ConfigError("config: unknown " + what + " field '" + key + "'");
    resolved[key] = value;
  }
  return resolved;
}

inline CartPoleEnv cartpole_from_json(const json& overrides) {
  const json defaults = {
      {"gravity", 9.8},          {"cart_mass", 1.0},
      {"pole_mass", 0.1},        {"pole_half_length", 0.5},
      {"force_mag", 10.0},       {"time_step", 0.02},
      {"x_threshold", 2.4},      {"theta_threshold_deg", 12.0},
      {"max_episode_steps", 200}};
  const json p = resolve_params(defaults, overrides, "environment");
  CartPoleEnv env;
  env.gravity = p["gravity"];
  env.cart_mass = p["cart_mass"];
  env.pole_mass = p["pole_mass"];
  env.pole_half_length = p["pole_half_length"];
  env.force_mag = p["force_mag"];
  env.time_step = p["time_step"];
  env.x_threshold = p["x_threshold"];
  env.theta_threshold = p["theta_threshold_deg"].get<double>() *
                        std::numbers::pi / 180.0;
  env.max_episode_steps = p["max_episode_steps"];
  return env;
}

inline LinearQuadraticEnv lq_from_json(const json& overrides,
                                       const LinearQuadraticEnv& fallback) {
  json defaults = {{"A", matrix_to_json(fallback.a())},
                   {"B", matrix_to_json(fallback.b())},
                   {"Q", matrix_to_json(fallback.state_weight())},
                   {"R", matrix_to_json(fallback.control_weight())},
                   {"W", matrix_to_json(fallback.noise_covariance())}};
  const json p = resolve_params(defaults, overrides, "environment");
  return LinearQuadraticEnv(
      matrix_from_json(p["A"], "A"), matrix_from_json(p["B"], "B"),
      matrix_from_json(p["Q"], "Q"), matrix_from_json(p["R"], "R"),
      matrix_from_json(p["W"], "W"));
}

inline double greedy_episode_return(const CartPoleEnv& env, const Mlp& network,
                                    RngStream& rng) {
  Vector state = cartpole_reset(env, rng);
  double total = 0.0;
  for (int t = 0; t < env.max_episode_steps; ++t) {
    const Vector out = network.forward(state);
    int action = 0;
    for (int i = 1; i < out.size(); ++i)
      if (out(i) > out(action)) action = i;
    const CartPoleStep step = cartpole_step(env, state, action, t);
    total += step.reward;
    state = step.state;
    if (step.done) break;
  }
  return total;
}

inline std::string checkpoint_text(const Mlp& network) {
  std::ostringstream out;
  network.save(out);
  return out.str();
}

}  // namespace detail

inline RunRecord run_pg_cartpole(const ExperimentConfig& config) {
  const json params = detail::resolve_params(
      {{"hidden_size", 30},
       {"hidden_layers", 2},
       {"learning_rate", 0.01},
       {"adam_epsilon", 1e-8},
       {"gamma", 0.99},
       {"stop_when_solved", true}},
      config.hyperparameters, "hyperparameter");
  const CartPoleEnv env = detail::cartpole_from_json(config.environment);
  const int episodes = config.budget >= 0 ? config.budget : 2000;
  RngStream rng(config.seed);
  RngStream env_rng = rng.fork();
  RngStream policy_rng = rng.fork();
  RngStream eval_rng = rng.fork();
  SoftmaxPolicyAgent agent = make_softmax_agent(
      4, 2, std::vector<int>(params["hidden_layers"].get<int>(),
                             params["hidden_size"].get<int>()),
      params["gamma"], rng.next_u64(), params["learning_rate"],
      params["adam_epsilon"]);

  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"episode", "train_return", "eval_return", "loss"};
  std::vector<double> eval_returns;
  SolveStatus status;
  for (int episode = 0; episode < episodes; ++episode) {
    const Trajectory traj = rollout(
        env,
        [&](const Vector& s) {
          return sample_action_discrete(agent, s, policy_rng);
        },
        env.max_episode_steps, env_rng);
    std::vector<Vector> states = traj.states;
    std::vector<int> actions(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i)
      actions[i] = static_cast<int>(traj.actions[i](0));
    double loss = 0.0;
    if (traj.size() >= 2)
      loss = pg_update_discrete(agent, states, actions, traj.rewards);
    double train_return = 0.0;
    for (double r : traj.rewards) train_return += r;
    const double eval_return =
        detail::greedy_episode_return(env, agent.network, eval_rng);
    eval_returns.push_back(eval_return);
    record.rows.push_back({static_cast<double>(episode), train_return,
                           eval_return, loss});
    status = check_solved(eval_returns);
    if (status.solved && params["stop_when_solved"].get<bool>()) break;
  }
  record.final_metrics = {
      {"solved", status.solved},
      {"first_solved_index", status.first_solved_index},
      {"episodes_run", record.rows.size()}};
  record.network_checkpoint = detail::checkpoint_text(agent.network);
  return record;
}

namespace detail {

// Shared by q-cartpole (update from the episode just collected) and
// replay-q-cartpole (update from memory samples each step).
inline RunRecord run_q_cartpole_family(const ExperimentConfig& config,
                                       bool with_replay) {
  json defaults = {{"hidden_size", 30},    {"hidden_layers", 3},
                   {"learning_rate", 1e-3}, {"adam_epsilon", 1e-8},
                   {"gamma", 0.99},         {"epsilon", with_replay ? 1.0 : 0.1},
                   {"stop_when_solved", true}};
  if (with_replay) {
    defaults["epsilon_decay"] = 0.995;
    defaults["epsilon_floor"] = 0.01;
    defaults["memory_capacity"] = 100000;
    defaults["batch_size"] = 64;
  }
  const json params =
      resolve_params(defaults, config.hyperparameters, "hyperparameter");
  const CartPoleEnv env = cartpole_from_json(config.environment);
  const int episodes = config.budget >= 0 ? config.budget : 1000;
  RngStream rng(config.seed);
  RngStream env_rng = rng.fork();
  RngStream policy_rng = rng.fork();
  RngStream eval_rng = rng.fork();
  RngStream replay_rng = rng.fork();
  DiscreteQAgent agent = make_discrete_q_agent(
      4, 2, std::vector<int>(params["hidden_layers"].get<int>(),
                             params["hidden_size"].get<int>()),
      params["epsilon"], params["gamma"], rng.next_u64(),
      params["learning_rate"], params["adam_epsilon"]);
  ReplayMemory memory(with_replay ? params["memory_capacity"].get<std::size_t>()
                                  : 1);

  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"episode", "train_return", "eval_return", "loss",
                    "epsilon"};
  std::vector<double> eval_returns;
  SolveStatus status;
  for (int episode = 0; episode < episodes; ++episode) {
    Vector state = cartpole_reset(env, env_rng);
    std::vector<Vector> states, next_states;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<bool> dones;
    double train_return = 0.0;
    double loss_sum = 0.0;
    int loss_count = 0;
    for (int t = 0; t < env.max_episode_steps; ++t) {
      const int action = epsilon_greedy_action(agent, state, policy_rng);
      const CartPoleStep step = cartpole_step(env, state, action, t);
      if (with_replay) {
        memory.remember(state, action, step.reward, step.state, step.done);
        const ReplayBatch batch =
            memory.sample(params["batch_size"].get<std::size_t>(), replay_rng);
        loss_sum += td_update_discrete(agent, batch.states, batch.actions,
                                       batch.rewards, batch.next_states,
                                       batch.dones);
        ++loss_count;
        decay_epsilon(agent, params["epsilon_decay"], params["epsilon_floor"]);
      } else {
        states.push_back(state);
        actions.push_back(action);
        rewards.push_back(step.reward);
        next_states.push_back(step.state);
        dones.push_back(step.done);
      }
      train_return += step.reward;
      state = step.state;
      if (step.done) break;
    }
    if (!with_replay && !states.empty()) {
      loss_sum += td_update_discrete(agent, states, actions, rewards,
                                     next_states, dones);
      ++loss_count;
    }
    const double eval_return =
        greedy_episode_return(env, agent.network, eval_rng);
    eval_returns.push_back(eval_return);
    record.rows.push_back({static_cast<double>(episode), train_return,
                           eval_return,
                           loss_count ? loss_sum / loss_count : 0.0,
                           agent.epsilon});
    status = check_solved(eval_returns);
    if (status.solved && params["stop_when_solved"].get<bool>()) break;
  }
  record.final_metrics = {
      {"solved", status.solved},
      {"first_solved_index", status.first_solved_index},
      {"episodes_run", record.rows.size()},
      {"final_epsilon", agent.epsilon}};
  record.network_checkpoint = checkpoint_text(agent.network);
  return record;
}

}  // namespace detail

inline RunRecord run_q_cartpole(const ExperimentConfig& config) {
  return detail::run_q_cartpole_family(config, false);
}

inline RunRecord run_replay_q_cartpole(const ExperimentConfig& config) {
  return detail::run_q_cartpole_family(config, true);
}

inline RunRecord run_pg_lq(const ExperimentConfig& config) {
  const json params = detail::resolve_params(
      {{"batch_size", 8},
       {"trajectory_length", 100},
       {"explore_mag", 0.1},
       {"step_size", 0.1},
       {"safeguard", 10.0}},
      config.hyperparameters, "hyperparameter");
  const LinearQuadraticEnv env =
      detail::lq_from_json(config.environment, scalar_lq_benchmark());
  PgLqConfig pg_config;
  pg_config.iterations = config.budget >= 0 ? config.budget : 100;
  pg_config.batch_size = params["batch_size"];
  pg_config.trajectory_length = params["trajectory_length"];
  pg_config.explore_mag = params["explore_mag"];
  pg_config.step_size = params["step_size"];
  pg_config.safeguard = params["safeguard"];

  const Matrix optimal =
      solve_dare(env.a(), env.b(), env.state_weight(), env.control_weight())
          .gain;
  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"iteration", "mean_return", "gain_gap"};
  RngStream rng(config.seed);
  const Matrix gain0 = Matrix::Zero(env.action_dim(), env.state_dim());
  const Matrix learned = pg_train_lq(
      env, gain0, pg_config, rng,
      [&](int iteration, double mean_reward, const Matrix& gain) {
        record.rows.push_back({static_cast<double>(iteration), mean_reward,
                               gain_gap(gain, optimal)});
      });
  record.final_metrics = {
      {"gain", detail::matrix_to_json(learned)},
      {"optimal_gain", detail::matrix_to_json(optimal)},
      {"initial_gain_gap", gain_gap(gain0, optimal)},
      {"final_gain_gap", gain_gap(learned, optimal)}};
  return record;
}

inline RunRecord run_q_lq(const ExperimentConfig& config) {
  const json params = detail::resolve_params(
      {{"trajectory_length", 2000}, {"explore_mag", 1.0}},
      config.hyperparameters, "hyperparameter");
  const LinearQuadraticEnv env =
      detail::lq_from_json(config.environment, double_integrator_lq_benchmark());
  LqQlConfig ql_config;
  ql_config.iterations = config.budget >= 0 ? config.budget : 10;
  ql_config.trajectory_length = params["trajectory_length"];
  ql_config.explore_mag = params["explore_mag"];

  const Matrix optimal =
      solve_dare(env.a(), env.b(), env.state_weight(), env.control_weight())
          .gain;
  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"iteration", "average_cost", "gain_gap"};
  RngStream rng(config.seed);
  const Matrix gain0 = Matrix::Zero(env.action_dim(), env.state_dim());
  const LqQlResult result = q_learning_lq(
      env, gain0, ql_config, rng,
      [&](int iteration, double lambda, const Matrix& gain) {
        record.rows.push_back({static_cast<double>(iteration), lambda,
                               gain_gap(gain, optimal)});
      });
  record.final_metrics = {
      {"gain", detail::matrix_to_json(result.gain)},
      {"value", detail::matrix_to_json(result.value)},
      {"optimal_gain", detail::matrix_to_json(optimal)},
      {"final_gain_gap", gain_gap(result.gain, optimal)}};
  return record;
}

inline RunRecord run_sysid_lq(const ExperimentConfig& config) {
  const json params = detail::resolve_params(
      {{"excitation_std", 1.0}, {"fit_every", 50}},
      config.hyperparameters, "hyperparameter");
  const LinearQuadraticEnv env =
      detail::lq_from_json(config.environment, double_integrator_lq_benchmark());
  const int samples = config.budget >= 0 ? config.budget : 500;
  const double excitation = params["excitation_std"];
  const int fit_every = params["fit_every"];
  RngStream rng(config.seed);
  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"samples", "a_error", "b_error"};
  if (samples > 0) {
    const Trajectory traj = rollout(
        env,
        [&](const Vector&) {
          return Vector(excitation *
                        rng.standard_normal_vector(env.action_dim()));
        },
        samples, rng);
    LinearSsEstimate final_estimate;
    bool have_estimate = false;
    for (int count = fit_every; count <= samples; count += fit_every) {
      Trajectory prefix;
      prefix.states.assign(traj.states.begin(), traj.states.begin() + count);
      prefix.actions.assign(traj.actions.begin(), traj.actions.begin() + count);
      prefix.rewards.assign(traj.rewards.begin(), traj.rewards.begin() + count);
      prefix.next_states.assign(traj.next_states.begin(),
                                traj.next_states.begin() + count);
      prefix.dones.assign(traj.dones.begin(), traj.dones.begin() + count);
      const LinearSsEstimate est = identify_linear_ss(prefix);
      record.rows.push_back({static_cast<double>(count),
                             (est.a_hat - env.a()).norm(),
                             (est.b_hat - env.b()).norm()});
      final_estimate = est;
      have_estimate = true;
    }
    if (have_estimate)
      record.final_metrics = {
          {"a_hat", detail::matrix_to_json(final_estimate.a_hat)},
          {"b_hat", detail::matrix_to_json(final_estimate.b_hat)},
          {"a_error", (final_estimate.a_hat - env.a()).norm()},
          {"b_error", (final_estimate.b_hat - env.b()).norm()}};
  }
  return record;
}

inline RunRecord run_adaptive_lq(const ExperimentConfig& config) {
  const json params = detail::resolve_params(
      {{"excitation_std", 1.0}, {"replan_every", 100}},
      config.hyperparameters, "hyperparameter");
  const LinearQuadraticEnv env =
      detail::lq_from_json(config.environment, double_integrator_lq_benchmark());
  const int horizon = config.budget >= 0 ? config.budget : 2000;
  const Matrix optimal =
      solve_dare(env.a(), env.b(), env.state_weight(), env.control_weight())
          .gain;
  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"replan", "step", "gain_gap"};
  if (horizon > 0) {
    RngStream rng(config.seed);
    const int replan_every = params["replan_every"];
    const AdaptiveLqResult result = adaptive_lq_control(
        env, horizon, params["excitation_std"], replan_every, rng);
    for (std::size_t i = 0; i < result.gains.size(); ++i)
      record.rows.push_back({static_cast<double>(i),
                             static_cast<double>(i) * replan_every,
                             gain_gap(result.gains[i], optimal)});
    record.final_metrics = {
        {"gain", detail::matrix_to_json(result.gains.back())},
        {"optimal_gain", detail::matrix_to_json(optimal)},
        {"final_gain_gap", gain_gap(result.gains.back(), optimal)},
        {"replans", result.gains.size() - 1},
        {"failed_replans", result.failed_replans}};
  }
  return record;
}

inline RunRecord run_mdp_demo(const ExperimentConfig& config) {
  const json params = detail::resolve_params({{"gamma", 0.9}},
                                             config.hyperparameters,
                                             "hyperparameter");
  (void)detail::resolve_params(json::object(), config.environment,
                               "environment");
  const TabularMDP mdp = three_state_demo_mdp(params["gamma"]);
  RunRecord record;
  record.seed = config.seed;
  record.config = config;
  record.columns = {"state", "action", "expected_reward"};
  const int budget = config.budget >= 0 ? config.budget
                                        : mdp.n_states() * mdp.n_actions();
  int emitted = 0;
  for (int s = 0; s < mdp.n_states() && emitted < budget; ++s)
    for (int a = 0; a < mdp.n_actions() && emitted < budget; ++a) {
      record.rows.push_back({static_cast<double>(s), static_cast<double>(a),
                             mdp_expected_reward(mdp, s, a)});
      ++emitted;
    }
  double max_row_sum_error = 0.0;
  for (int a = 0; a < mdp.n_actions(); ++a)
    for (int s = 0; s < mdp.n_states(); ++s)
      max_row_sum_error = std::max(
          max_row_sum_error, std::abs(mdp.transition(a).row(s).sum() - 1.0));
  record.final_metrics = {
      {"expected_reward_s1_a0", mdp_expected_reward(mdp, 1, 0)},
      {"max_row_sum_error", max_row_sum_error}};
  return record;
}

inline RunRecord run_experiment(const ExperimentConfig& config) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), config.experiment) == names.end())
    throw ConfigError("run_experiment: unknown experiment '" +
                      config.experiment + "'");
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  if (config.experiment == "pg-cartpole")
    record = run_pg_cartpole(config);
  else if (config.experiment == "q-cartpole")
    record = run_q_cartpole(config);
  else if (config.experiment == "replay-q-cartpole")
    record = run_replay_q_cartpole(config);
  else if (config.experiment == "pg-lq")
    record = run_pg_lq(config);
  else if (config.experiment == "q-lq")
    record = run_q_lq(config);
  else if (config.experiment == "sysid-lq")
    record = run_sysid_lq(config);
  else if (config.experiment == "adaptive-lq")
    record = run_adaptive_lq(config);
  else
    record = run_mdp_demo(config);
  record.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

inline std::string metrics_csv(const RunRecord& record) {
  std::string out;
  for (std::size_t c = 0; c < record.columns.size(); ++c)
    out += (c ? "," : "") + record.columns[c];
  out += '\n';
  for (const auto& row : record.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out += (c ? "," : "") + detail::format_value(row[c]);
    out += '\n';
  }
  return out;
}

// Writes metrics.csv, summary.json, and checkpoint.txt (when a network was
// trained) into the directory; returns the written paths.
inline std::vector<std::string> write_results(const RunRecord& record,
                                              const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  std::vector<std::string> written;

  const fs::path csv_path = fs::path(directory) / "metrics.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw ConfigError("write_results: cannot write " + csv_path.string());
  csv << metrics_csv(record);
  written.push_back(csv_path.string());

  json summary = {{"experiment", record.config.experiment},
                  {"seed", record.seed},
                  {"duration_seconds", record.duration_seconds},
                  {"rows", record.rows.size()},
                  {"config", record.config},
                  {"final", record.final_metrics}};
  const fs::path summary_path = fs::path(directory) / "summary.json";
  std::ofstream summary_file(summary_path);
  summary_file << summary.dump(2) << '\n';
  written.push_back(summary_path.string());

  if (!record.network_checkpoint.empty()) {
    const fs::path checkpoint_path = fs::path(directory) / "checkpoint.txt";
    std::ofstream checkpoint(checkpoint_path);
    checkpoint << record.network_checkpoint;
    written.push_back(checkpoint_path.string());
  }
  return written;
}

}  // namespace lqrl
