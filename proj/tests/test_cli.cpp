#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dyadic/experiment.hpp"
#include "dyadic/io.hpp"

using namespace dyadic;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "dyadic_lab_cli";
  fs::create_directories(dir);
  return dir / name;
}

Run invoke(const std::string& args) {
  static int counter = 0;
  const auto out = scratch("out" + std::to_string(counter) + ".txt");
  const auto err = scratch("err" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(DYADIC_LAB_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string data_section(const std::string& csv) { return csv.substr(0, csv.find("\n# ") + 1); }

int column_count(const std::string& csv) {
  const std::string header = csv.substr(0, csv.find('\n'));
  return 1 + static_cast<int>(std::count(header.begin(), header.end(), ','));
}

}  // namespace

TEST(exit_codes, resolution_equal_to_depth) {
  const auto r = invoke("--cmd identity-check --depth 4 --resolution 4");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("R must be >= M+1"), std::string::npos);
}

TEST(exit_codes, invalid_inputs) {
  EXPECT_EQ(invoke("--cmd nonsense").code, 2);
  EXPECT_EQ(invoke("--depth 3").code, 2);
  EXPECT_EQ(invoke("--cmd identity-check --dim 0").code, 2);
  EXPECT_EQ(invoke("--cmd identity-check --trials 0").code, 2);
  EXPECT_EQ(invoke("--cmd identity-check --dim 2").code, 2);
  EXPECT_EQ(invoke("--cmd inequality-sweep --family power --params -1.5").code, 2);
  EXPECT_EQ(invoke("--cmd identity-check --format xml").code, 2);
  EXPECT_EQ(invoke("--cmd identity-check --trials 2 --out /nonexistent/dir/x.csv").code, 2);
  EXPECT_EQ(invoke("--cmd identity-check --config /nonexistent/config.json").code, 2);
}

TEST(exit_codes, budget_failure_reports_row) {
  const auto budgets = scratch("tight.json");
  io::write_file(budgets.string(), {{"petermichl", 1e-6}});
  const auto r = invoke("--cmd inequality-sweep --dim 1 --depth 4 --family recursive --params 0.5 --budget-file " +
                     budgets.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("petermichl"), std::string::npos);
  EXPECT_NE(r.out.find(",false,"), std::string::npos);
}

TEST(identity_check, default_suite_passes) {
  const auto r = invoke("--cmd identity-check");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto footer = lab::json::parse(r.out.substr(r.out.find("\n# ") + 3));
  EXPECT_LE(footer.at("max_residual").get<double>(), 1e-9);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 100 + 1);
}

TEST(wilson_check, small_suite_passes) {
  const auto r = invoke("--cmd wilson-check --trials 4 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = lab::json::parse(r.out);
  EXPECT_EQ(doc.at("rows").size(), 4u);
  EXPECT_TRUE(doc.at("summary").at("pass").get<bool>());
}

TEST(scaling_study, schema_and_slope_fields) {
  const auto r = invoke("--cmd scaling-study --depth 4 --family recursive --params 0.5,0.7");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(column_count(r.out), 17);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "param,a2,norm_shift,norm_mult,A1,B1,C1,A2,B2,C2,A11,A12,A21,A22,C21,C22,runtime");
  const auto footer = lab::json::parse(r.out.substr(r.out.find("\n# ") + 3));
  EXPECT_TRUE(footer.contains("slope_shift"));
  EXPECT_TRUE(footer.contains("slope_mult"));
}

TEST(config, file_with_flag_override) {
  const auto cfg = scratch("config.json");
  io::write_file(cfg.string(), {{"command", "identity-check"}, {"depth", 3}, {"trials", 2}, {"seed", 5}});
  const auto from_file = invoke("--config " + cfg.string());
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(std::count(from_file.out.begin(), from_file.out.end(), '\n'), 1 + 2 + 1);
  const auto overridden = invoke("--config " + cfg.string() + " --trials 5");
  EXPECT_EQ(std::count(overridden.out.begin(), overridden.out.end(), '\n'), 1 + 5 + 1);
  EXPECT_EQ(data_section(overridden.out).substr(0, data_section(from_file.out).size()), data_section(from_file.out));
}

TEST(config, output_file_written) {
  const auto path = scratch("written.csv");
  fs::remove(path);
  const auto r = invoke("--cmd identity-check --trials 2 --out " + path.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(path).substr(0, 6), "trial,");
}

TEST(determinism, same_seed_same_data) {
  for (const std::string args : {"--cmd identity-check --trials 6 --seed 9", "--cmd wilson-check --trials 3 --seed 9",
                                 "--cmd inequality-sweep --dim 2 --depth 2 --params 0.4,-0.4 --seed 9"}) {
    const auto a = invoke(args), b = invoke(args);
    EXPECT_EQ(a.code, b.code);
    EXPECT_EQ(data_section(a.out), data_section(b.out)) << args;
  }
  EXPECT_NE(data_section(invoke("--cmd identity-check --trials 3 --seed 1").out),
            data_section(invoke("--cmd identity-check --trials 3 --seed 2").out));
}

TEST(emit, empty_table_is_header_only) {
  lab::Table t;
  t.columns = {"param", "a2"};
  EXPECT_EQ(lab::render(t, "csv"), "param,a2\n");
  const auto doc = lab::json::parse(lab::render(t, "json"));
  EXPECT_TRUE(doc.at("rows").empty());
}

TEST(emit, json_roundtrip_is_exact) {
  lab::Table t;
  t.columns = {"x", "n", "s", "missing"};
  const double x = 0.1 + 0.2;
  t.rows.push_back({x, std::int64_t{42}, std::string("power"), std::monostate{}});
  const auto doc = lab::json::parse(lab::render(t, "json"));
  EXPECT_EQ(doc.at("rows")[0].at("x").get<double>(), x);
  EXPECT_EQ(doc.at("rows")[0].at("n").get<int>(), 42);
  EXPECT_TRUE(doc.at("rows")[0].at("missing").is_null());
  const auto csv = lab::render(t, "csv");
  const auto line = csv.substr(csv.find('\n') + 1);
  EXPECT_EQ(std::stod(line.substr(0, line.find(','))), x);
  EXPECT_EQ(line, "0.30000000000000004,42,power,\n");
}

TEST(emit, unwritable_path) {
  EXPECT_THROW(lab::emit(lab::Table{}, "csv", "/nonexistent/dir/out.csv"), std::runtime_error);
}

TEST(scaling_table, seventeen_columns) {
  lab::ScalingRow row;
  row.param = 0.5;
  row.a2 = 3.0;
  const auto t = lab::scaling_table({row});
  EXPECT_EQ(t.columns.size(), 17u);
  EXPECT_EQ(t.rows[0].size(), 17u);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(t.rows[0][2]));
}

TEST(loglog_slope, power_law) {
  const std::vector<double> x{1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 0.7));
  EXPECT_NEAR(*lab::loglog_slope(x, y), 0.7, 1e-12);
  EXPECT_FALSE(lab::loglog_slope({1.0, 3.0}, {1.0, 2.0}).has_value());
}

TEST(config, budgets_and_defaults) {
  const auto b = lab::budgets_from_json(io::read_file(DYADIC_LAB_BUDGETS));
  EXPECT_EQ(b.op, 32.0);
  EXPECT_EQ(b.petermichl, 16.0);
  EXPECT_EQ(lab::budgets_from_json(lab::to_json(b)).half_power, b.half_power);
  EXPECT_THROW(lab::budgets_from_json({{"carleson", -1.0}}), std::invalid_argument);

  auto c = lab::config_from_json({{"command", "scaling-study"}}).resolved();
  EXPECT_EQ(c.d, 1);
  EXPECT_EQ(c.M, 8);
  EXPECT_EQ(c.resolution_for(8), 10);
  c = lab::config_from_json({{"command", "inequality-sweep"}, {"dim", 2}}).resolved();
  EXPECT_EQ(c.depth_list(), (std::vector<int>{2, 3, 4}));
  EXPECT_THROW(lab::parse_command("sweep"), std::invalid_argument);
  EXPECT_EQ(lab::command_name(lab::Command::wilson_check), "wilson-check");
}
