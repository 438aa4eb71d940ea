#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dyadic::lab {

using json = nlohmann::json;

enum class Command { identity_check, wilson_check, inequality_sweep, scaling_study };

Command parse_command(const std::string& name);
std::string command_name(Command c);

/// Constants standing in for the unspecified implicit constants.
struct Budgets {
  double carleson = 8.0;        // Carleson-type testing suprema, times [w]^e
  double embedding = 8.0;       // embedding sum over testing constant
  double square_function = 8.0; // ||S||, ||S_pi|| over [w]
  double petermichl = 16.0;     // d=1 shifted sums over [w]
  double wilson_per_dim = 16.0; // Wilson sums over 2^d [w]
  double op = 32.0;             // target norm over [w]
  double half_power = 8.0;      // B1, A11 form norms over [w]^{1/2}
  double slope = 1.1;
  double identity_tolerance = 1e-9;

  void validate() const;
};

Budgets budgets_from_json(const json& j);
json to_json(const Budgets& b);

struct ExperimentConfig {
  // Zero d, M and trials select the command defaults (see resolved()).
  Command command = Command::identity_check;
  int d = 0;
  int M = 0;
  int R = 0;                // 0: M+2 for every depth
  std::vector<int> depths;  // empty: {M}
  std::string family = "mixed";
  std::vector<double> params;  // empty: the family default
  int trials = 0;
  std::uint64_t seed = 1;
  Budgets budgets;
  std::string out;  // empty: stdout
  std::string format = "csv";

  /// Copy with the command defaults filled in: identity-check d=1, M=5,
  /// 100 trials; wilson-check d=2, M=3, 50 trials; inequality-sweep depths
  /// {4,6,8} (d=1) or {2,3,4}; scaling-study M=8 (d=1) or 4.
  ExperimentConfig resolved() const;

  /// Throws std::invalid_argument on a violated precondition.
  void validate() const;
  std::vector<int> depth_list() const;
  int resolution_for(int depth) const;
};

ExperimentConfig config_from_json(const json& j);

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

/// Rows in a fixed column order plus a summary object; `summary.timestamp` is
/// the only non-reproducible field besides a `runtime` column.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  json summary = json::object();
};

struct RunResult {
  Table table;
  int exit_code = 0;
  std::string message;
};

RunResult run(const ExperimentConfig& config);

std::string render(const Table& table, const std::string& format);
void emit(const Table& table, const std::string& format, const std::string& path);

/// Ordinary least-squares slope of log(y) on log(x) over the points with
/// x >= x_min; nullopt with fewer than two such points.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double x_min = 2.0);

struct ScalingRow {
  double param = 0.0;
  double a2 = 1.0;
  std::optional<double> norm_shift;
  double norm_mult = 0.0;
  std::array<double, 12> terms{};  // form norms over [w]
  double runtime = 0.0;
};

ScalingRow scaling_point(const ExperimentConfig& config, const std::string& family, double param, int depth);
Table scaling_table(const std::vector<ScalingRow>& rows);

std::vector<double> default_params(const std::string& family, Command c);

/// Worker count: hardware concurrency capped by DYADIC_LAB_THREADS.
int thread_count();

}  // namespace dyadic::lab
