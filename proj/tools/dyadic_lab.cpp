#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dyadic/experiment.hpp"
#include "dyadic/io.hpp"

int main(int argc, char** argv) {
  using namespace dyadic;
  CLI::App app{"dyadic_lab: identity suites, inequality sweeps and A2 scaling studies"};

  std::string cmd, family, budget_file, out, format, config_file;
  int dim = 0, depth = 0, resolution = 0, trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> params;

  auto* o_cmd = app.add_option("--cmd", cmd, "identity-check | wilson-check | inequality-sweep | scaling-study");
  auto* o_dim = app.add_option("--dim", dim, "dimension d");
  auto* o_depth = app.add_option("--depth", depth, "coefficient depth M");
  auto* o_res = app.add_option("--resolution", resolution, "step-function resolution R (default M+2)");
  auto* o_family = app.add_option("--family", family, "recursive | random | power | mixed");
  auto* o_params = app.add_option("--params", params, "comma-separated family parameters")->delimiter(',');
  auto* o_trials = app.add_option("--trials", trials, "random trials per point");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_budget = app.add_option("--budget-file", budget_file, "JSON file of constant budgets");
  auto* o_out = app.add_option("--out", out, "output path (default stdout)");
  auto* o_format = app.add_option("--format", format, "csv | json");
  app.add_option("--config", config_file, "JSON config; flags override its fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  lab::ExperimentConfig config;
  try {
    lab::json j = config_file.empty() ? lab::json::object() : io::read_file(config_file);
    if (o_cmd->count()) j["command"] = cmd;
    if (!j.contains("command")) throw std::invalid_argument("--cmd is required");
    config = lab::config_from_json(j);
    if (o_dim->count() && dim < 1) throw std::invalid_argument("--dim must be >= 1");
    if (o_depth->count() && depth < 1) throw std::invalid_argument("--depth must be >= 1");
    if (o_trials->count() && trials < 1) throw std::invalid_argument("--trials must be >= 1");
    if (o_dim->count()) config.d = dim;
    if (o_depth->count()) {
      config.M = depth;
      config.depths.clear();
    }
    if (o_res->count()) config.R = resolution;
    if (o_family->count()) config.family = family;
    if (o_params->count()) config.params = params;
    if (o_trials->count()) config.trials = trials;
    if (o_seed->count()) config.seed = seed;
    if (o_budget->count()) config.budgets = lab::budgets_from_json(io::read_file(budget_file));
    if (o_out->count()) config.out = out;
    if (o_format->count()) config.format = format;
    config = config.resolved();
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto result = lab::run(config);
    lab::emit(result.table, config.format, config.out);
    if (result.exit_code != 0) std::cerr << result.message << '\n';
    return result.exit_code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
