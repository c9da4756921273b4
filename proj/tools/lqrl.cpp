// Command-line front end: runs configured experiments, prints the tabular-MDP
// demo, and fits ARX models to CSV data.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lqrl/lqrl.hpp"

namespace {

void print_record_tail(const lqrl::RunRecord& record) {
  std::cout << "experiment: " << record.config.experiment
            << "  seed: " << record.seed << "  rows: " << record.rows.size()
            << '\n';
  std::cout << "final: " << record.final_metrics.dump() << '\n';
}

int run_command(const std::string& config_path, bool has_seed,
                std::uint64_t seed, const std::string& experiment,
                const std::string& out_dir) {
  lqrl::ExperimentConfig config;
  if (!config_path.empty()) config = lqrl::load_config(config_path);
  if (has_seed) config.seed = seed;
  if (!experiment.empty()) {
    config.experiment = experiment;
    // revalidate the name through the JSON path
    lqrl::json echo;
    lqrl::to_json(echo, config);
    config = echo.get<lqrl::ExperimentConfig>();
  }
  if (!out_dir.empty()) config.out_dir = out_dir;
  const lqrl::RunRecord record = lqrl::run_experiment(config);
  if (!config.out_dir.empty()) {
    for (const std::string& path : lqrl::write_results(record, config.out_dir))
      std::cout << "wrote " << path << '\n';
  }
  print_record_tail(record);
  return 0;
}

int demo_mdp_command() {
  lqrl::ExperimentConfig config;
  config.experiment = "mdp-demo";
  const lqrl::RunRecord record = lqrl::run_experiment(config);
  std::cout << "three-state MDP demo\n";
  std::cout << "state  action  expected_reward\n";
  for (const auto& row : record.rows)
    std::printf("%5d  %6d  %15.6g\n", static_cast<int>(row[0]),
                static_cast<int>(row[1]), row[2]);
  std::cout << "max transition row-sum error: "
            << record.final_metrics["max_row_sum_error"].get<double>() << '\n';
  std::cout << "E[r(s1,a0)] = "
            << record.final_metrics["expected_reward_s1_a0"].get<double>()
            << '\n';
  return 0;
}

// Two-column CSV (y, u), one sample per line, optional "y,u" header.
std::pair<std::vector<double>, std::vector<double>> read_series(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lqrl::ConfigError("arx: cannot open '" + path + "'");
  std::vector<double> y, u;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string y_field, u_field;
    if (!std::getline(fields, y_field, ',') ||
        !std::getline(fields, u_field, ','))
      throw lqrl::ConfigError("arx: expected two comma-separated columns");
    try {
      y.push_back(std::stod(y_field));
      u.push_back(std::stod(u_field));
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw lqrl::ConfigError("arx: non-numeric value in '" + line + "'");
    }
    first = false;
  }
  return {y, u};
}

int arx_command(const std::string& data_path, int output_lags, int input_lags) {
  const auto [y, u] = read_series(data_path);
  const lqrl::ArxModel model =
      lqrl::arx_fit_batch(y, u, output_lags, input_lags);
  std::cout << "samples: " << y.size() << "\n";
  for (int i = 0; i < output_lags; ++i)
    std::printf("a%d = %.12g\n", i + 1, model.theta(i));
  for (int i = 0; i < input_lags; ++i)
    std::printf("b%d = %.12g\n", i + 1, model.theta(output_lags + i));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL and adaptive-control toolkit for tabular MDPs, cartpole, "
               "and linear-quadratic systems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string config_path;
  std::string experiment;
  std::string out_dir;
  std::uint64_t seed = 0;
  run->add_option("config", config_path, "path to config.json");
  auto* seed_opt = run->add_option("--seed", seed, "override the seed");
  run->add_option("--experiment", experiment, "override the experiment name");
  run->add_option("--out", out_dir, "override the output directory");

  auto* demo = app.add_subcommand("demo", "built-in demonstrations");
  demo->require_subcommand(1);
  auto* demo_mdp = demo->add_subcommand("mdp", "expected-reward table of the "
                                               "three-state demo MDP");

  auto* arx = app.add_subcommand("arx", "fit an ARX model to a two-column "
                                        "(y,u) CSV file");
  std::string data_path;
  int output_lags = 1;
  int input_lags = 1;
  arx->add_option("data", data_path, "path to the CSV data")->required();
  arx->add_option("-n,--output-lags", output_lags, "number of output lags");
  arx->add_option("-m,--input-lags", input_lags, "number of input lags");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return run_command(config_path, seed_opt->count() > 0, seed, experiment,
                         out_dir);
    if (demo_mdp->parsed()) return demo_mdp_command();
    if (arx->parsed()) return arx_command(data_path, output_lags, input_lags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
