#include "dyadic/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dyadic/embed.hpp"
#include "dyadic/io.hpp"
#include "dyadic/shiftops.hpp"
#include "dyadic/weight.hpp"
#include "dyadic/wilson.hpp"

namespace dyadic::lab {

namespace {

constexpr std::array<const char*, 4> kCommandNames = {"identity-check", "wilson-check", "inequality-sweep",
                                                      "scaling-study"};

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(thread_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_lock;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_lock);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

/// Standard normal cell values at resolution M, refined to R and scaled to
/// unit norm in L2(w).
StepFunctiond random_function(int d, int M, int R, std::mt19937_64& rng, const Weightd* w = nullptr) {
  std::normal_distribution<double> normal;
  StepFunctiond coarse(d, M);
  for (auto& x : coarse.values) x = normal(rng);
  auto f = refine(coarse, R);
  const double n = w ? norm_w(f, w->values()) : norm(f);
  return (1.0 / n) * f;
}

Weightd make_weight(const std::string& family, double param, int d, int M, int R, std::uint64_t seed) {
  if (family == "recursive") return gen_recursive_weight(GridSpec{d, M, R}, param);
  if (family == "random") return gen_recursive_weight(GridSpec{d, M, R}, seed, param);
  if (family == "power") return gen_power_weight(param, d, R);
  throw std::invalid_argument("unknown weight family: " + family);
}

std::vector<std::string> families_of(const ExperimentConfig& c) {
  if (c.family == "mixed") {
    if (c.command == Command::inequality_sweep || c.command == Command::scaling_study)
      return {"recursive", "power"};
    return {"random", "power"};
  }
  return {c.family};
}

std::vector<double> params_of(const ExperimentConfig& c, const std::string& family) {
  if (!c.params.empty() && c.family != "mixed") return c.params;
  return default_params(family, c.command);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iso_timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

double rel(double a, double b, double scale) {
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------

struct IdentityTrial {
  std::string family;
  double param = 0.0;
  double residual = 0.0;
  double split = 0.0;
  double coefficient = 0.0;
  double prop = 0.0;
  double product = 0.0;
};

/// Picks the family and parameter of trial t round-robin.
std::pair<std::string, double> trial_weight(const ExperimentConfig& c, int t) {
  const auto fams = families_of(c);
  const auto& fam = fams[t % fams.size()];
  const auto ps = params_of(c, fam);
  return {fam, ps[(t / fams.size()) % ps.size()]};
}

IdentityTrial shift_identity_trial(const ExperimentConfig& c, int t) {
  const int M = c.M, R = c.resolution_for(M);
  auto rng = stream(c.seed, 1, t);
  const auto [fam, param] = trial_weight(c, t);
  const Weightd w = make_weight(fam, param, 1, M, R, rng());
  const auto phi = random_function(1, M, R, rng);
  const auto g = random_function(1, M, R, rng, &w);

  IdentityTrial out{fam, param};
  const auto terms = six_terms(w, phi, g, M);
  out.residual = terms.residual();
  out.split = terms.split_residual();

  // The composed coefficients against the Haar coefficients of P^{(1,0)} phi.
  const auto composed = composed_coeffs(w, phi, M);
  const auto direct = haar1d::analyze(paraproduct(1, 0, haar_symbol(w.inv_sqrt(), M), phi), M);
  const double scale = std::max(composed.values.cwiseAbs().maxCoeff(), direct.values.cwiseAbs().maxCoeff());
  out.coefficient = scale == 0.0 ? 0.0 : (composed.values - direct.values).cwiseAbs().maxCoeff() / scale;
  return out;
}

IdentityTrial wilson_identity_trial(const ExperimentConfig& c, int t) {
  const int d = c.d, M = c.M, R = c.resolution_for(M);
  auto rng = stream(c.seed, 2, t);
  const auto [fam, param] = trial_weight(c, t);
  const Weightd w = make_weight(fam, param, d, M, R, rng());
  const auto sigma = wilson::random_signs(d, M, rng());
  const auto phi = random_function(d, M, R, rng);
  const auto g = random_function(d, M, R, rng, &w);

  IdentityTrial out{fam, param};
  const auto terms = wilson::six_terms_multiplier(w, sigma, phi, g);
  out.residual = terms.residual();
  out.split = terms.split_residual();

  const auto& pw = w.averages();
  const Pyramid<double> pgw(g * w.values()), pf(phi), pg(g), pfg(phi * g);
  for (std::int64_t i = 0; i < index_count(d, M); ++i) {
    const WilsonIndex idx = unflatten(d, i);
    const auto p = wilson::make_pair(idx);
    const auto cd = wilson::disbalanced_d(pw, p);
    const double lhs = wilson::coeff(pgw, p);
    const double a = cd.C * wilson::weighted_pairing(pw, pgw, p), b = cd.D * wilson::region_average(pgw, p.E());
    out.prop = std::max(out.prop, rel(lhs, a + b, std::max({std::abs(lhs), std::abs(a), std::abs(b)})));

    const double direct = wilson::coeff(pfg, p);
    const double rhs = wilson::product_formula_rhs(phi, g, idx.cell, idx.alpha, M);
    out.product = std::max(out.product, rel(direct, rhs, std::max(std::abs(direct), std::abs(rhs))));
  }
  return out;
}

RunResult run_identity(const ExperimentConfig& c) {
  const bool wilson_suite = c.command == Command::wilson_check;
  std::vector<IdentityTrial> trials(c.trials);
  parallel_for(trials.size(), [&](std::size_t t) {
    trials[t] = wilson_suite ? wilson_identity_trial(c, static_cast<int>(t)) : shift_identity_trial(c, static_cast<int>(t));
  });

  RunResult r;
  auto& tab = r.table;
  if (wilson_suite)
    tab.columns = {"trial", "family", "param", "residual", "split_residual", "prop_residual", "product_residual"};
  else
    tab.columns = {"trial", "family", "param", "residual", "split_residual", "coefficient_residual"};
  double worst = 0.0;
  std::int64_t worst_trial = -1;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& x = trials[t];
    std::vector<Cell> row = {static_cast<std::int64_t>(t), x.family, x.param, x.residual, x.split};
    if (wilson_suite) {
      row.push_back(x.prop);
      row.push_back(x.product);
    } else {
      row.push_back(x.coefficient);
    }
    const double m = std::max({x.residual, x.split, x.coefficient, x.prop, x.product});
    if (m > worst || worst_trial < 0) {
      worst = m;
      worst_trial = static_cast<std::int64_t>(t);
    }
    tab.rows.push_back(std::move(row));
  }
  const bool pass = worst <= c.budgets.identity_tolerance;
  tab.summary = {{"max_residual", worst},
                 {"worst_trial", worst_trial},
                 {"tolerance", c.budgets.identity_tolerance},
                 {"pass", pass}};
  if (!pass) {
    r.exit_code = 1;
    r.message = "identity residual " + format_double(worst) + " exceeds tolerance in trial " + std::to_string(worst_trial);
  }
  return r;
}

// ---------------------------------------------------------------------------

struct SweepRow {
  std::string family;
  double param;
  int depth;
  double a2;
  std::string report;
  double sup;
  double budget;
  std::string argmax;
};

std::string argmax_string(const WilsonIndex& w) {
  std::ostringstream s;
  s << w.cell.level << ':';
  const auto k = w.cell.coords();
  for (int i = 0; i < w.cell.d; ++i) s << (i ? "," : "") << k[i];
  s << ':' << w.alpha;
  return s.str();
}

std::vector<SweepRow> sweep_point(const ExperimentConfig& c, const std::string& fam, double param, int M,
                                  std::uint64_t point) {
  const int d = c.d, R = c.resolution_for(M);
  const auto& b = c.budgets;
  auto rng = stream(c.seed, 3, point);
  const Weightd w = make_weight(fam, param, d, M, R, rng());
  const Weightd nu = w.reciprocal();
  const double a2 = a2_characteristic(w).value;
  std::vector<SweepRow> rows;
  auto add = [&](const std::string& name, const CarlesonReport& r, double budget) {
    rows.push_back({fam, param, M, a2, name, r.sup_value, budget, argmax_string(r.argmax)});
  };
  auto add_value = [&](const std::string& name, double v, double budget) {
    rows.push_back({fam, param, M, a2, name, v, budget, ""});
  };

  // Shifted (d=1) or Wilson-indexed products of weight coefficients.
  Coefficients<double> alpha(d, M);
  if (d == 1) {
    const auto t = petermichl_sums(w, M);
    add("petermichl_weighted", t.weighted, b.petermichl * a2);
    add("petermichl_inverse", t.inverse, b.petermichl * a2);
    add("petermichl_plain", t.unweighted, b.petermichl * a2);
    for (std::int64_t i = 0; i < alpha.size(); ++i) {
      const CellIndex I = unflatten(1, i).cell;
      alpha.values[i] = std::abs(haar1d::haar_coeff(w.inverse_averages(), I) * haar1d::haar_coeff(w.averages(), I.child(0)));
    }
  } else {
    const double budget = b.wilson_per_dim * std::ldexp(1.0, d) * a2;
    const auto t = wilson_sums(w, M);
    add("wilson_weighted", t.weighted, budget);
    add("wilson_inverse", t.inverse, budget);
    add("wilson_plain", t.unweighted, budget);
    for (std::int64_t i = 0; i < alpha.size(); ++i) {
      const auto p = wilson::make_pair(unflatten(d, i));
      alpha.values[i] = std::abs(wilson::coeff(w.averages(), p) * wilson::coeff(w.inverse_averages(), p));
    }
  }
  alpha.values /= a2;

  // Square functions and the testing consequence of their weighted bound.
  add("square_testing", square_function_testing(w, M), b.square_function * b.square_function * a2 * a2);
  add_value("square_norm", square_function_norm(w, M).value, b.square_function * a2);
  add_value("modified_square_norm", square_function_norm(w, M, true).value, b.square_function * a2);

  // Weighted Carleson embedding with alpha_I = |I| / <w>_I.
  Coefficients<double> carleson(d, M);
  for (std::int64_t i = 0; i < carleson.size(); ++i) {
    const auto E = wilson::make_pair(unflatten(d, i)).E();
    carleson.values[i] = E.measure() / wilson::region_average(w.averages(), E);
  }
  const auto wc = weighted_carleson_constant(w, carleson);
  // The sum telescopes to one per level of the pair tree: d (M - level(J)).
  add("weighted_carleson", wc, d * M * (1.0 + b.identity_tolerance));
  double embed_ratio = 0.0;
  for (int t = 0; t < c.trials; ++t) {
    const auto g = random_function(d, M, R, rng, &w);
    embed_ratio = std::max(embed_ratio, weighted_embedding_sum(w, carleson, g) / wc.sup_value);
  }
  add_value("weighted_embedding", embed_ratio, b.embedding);

  // Bilinear embedding with nu = w^{-1} and the normalized coefficient products.
  const auto bt = bilinear_test(w, nu, alpha);
  add("bilinear_nu", bt.nu_test, b.carleson * a2);
  add("bilinear_omega", bt.omega_test, b.carleson * a2);
  add("bilinear_plain", bt.plain_test, b.carleson * a2);
  const double c_eff = std::max(bt.max_sup(), joint_characteristic(w, nu));
  double bil_ratio = 0.0;
  for (int t = 0; t < c.trials; ++t) {
    const auto f = random_function(d, M, R, rng, &w);
    const auto g = random_function(d, M, R, rng, &nu);
    bil_ratio = std::max(bil_ratio, std::abs(bilinear_embedding_sum(w, nu, alpha, f, g)) / c_eff);
  }
  add_value("bilinear_embedding", bil_ratio, b.embedding);
  return rows;
}

RunResult run_sweep(const ExperimentConfig& c) {
  struct Point {
    std::string family;
    double param;
    int depth;
  };
  std::vector<Point> points;
  for (const auto& fam : families_of(c))
    for (double p : params_of(c, fam))
      for (int M : c.depth_list()) points.push_back({fam, p, M});
  std::vector<std::vector<SweepRow>> results(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    results[i] = sweep_point(c, points[i].family, points[i].param, points[i].depth, i);
  });

  RunResult r;
  auto& tab = r.table;
  tab.columns = {"family", "param", "depth", "a2", "report", "sup", "budget", "pass", "argmax"};
  std::int64_t failures = 0;
  for (const auto& rows : results)
    for (const auto& x : rows) {
      const bool pass = x.sup <= x.budget;
      if (!pass && failures++ == 0)
        r.message = "budget failure: " + x.family + " param=" + format_double(x.param) + " depth=" +
                    std::to_string(x.depth) + " " + x.report + " sup=" + format_double(x.sup) +
                    " budget=" + format_double(x.budget);
      tab.rows.push_back({x.family, x.param, static_cast<std::int64_t>(x.depth), x.a2, x.report, x.sup, x.budget,
                          std::string(pass ? "true" : "false"), x.argmax});
    }
  tab.summary = {{"points", points.size()}, {"failures", failures}, {"pass", failures == 0}};
  if (failures) r.exit_code = 1;
  return r;
}

// ---------------------------------------------------------------------------

RunResult run_scaling(const ExperimentConfig& c) {
  struct Point {
    std::string family;
    double param;
  };
  std::vector<Point> points;
  for (const auto& fam : families_of(c))
    for (double p : params_of(c, fam)) points.push_back({fam, p});
  std::vector<ScalingRow> rows(points.size());
  parallel_for(points.size(), [&](std::size_t i) { rows[i] = scaling_point(c, points[i].family, points[i].param, c.M); });

  RunResult r;
  r.table = scaling_table(rows);
  const auto& b = c.budgets;
  std::vector<double> a2, shift, mult;
  std::vector<std::string> failures;
  for (const auto& row : rows) {
    a2.push_back(row.a2);
    mult.push_back(row.norm_mult);
    if (row.norm_shift) shift.push_back(*row.norm_shift);
    const std::string tag = "param=" + format_double(row.param) + " a2=" + format_double(row.a2);
    if (row.norm_shift && *row.norm_shift > b.op * row.a2) failures.push_back(tag + " norm_shift over budget");
    if (row.norm_mult > b.op * row.a2) failures.push_back(tag + " norm_mult over budget");
    // B1 and A11 grow like [w]^{1/2}; the columns hold norm / [w].
    for (int k : {1, 6})
      if (row.terms[k] * row.a2 > b.half_power * std::sqrt(row.a2))
        failures.push_back(tag + " term " + std::string(TermBreakdown<double>::kNames[k]) + " over half-power budget");
  }
  auto slope_json = [&](const std::vector<double>& y) -> json {
    if (y.size() != a2.size()) return nullptr;
    const auto s = loglog_slope(a2, y);
    if (!s) return nullptr;
    return *s;
  };
  const json ss = slope_json(shift), sm = slope_json(mult);
  for (const auto& [name, s] : {std::pair{"slope_shift", ss}, std::pair{"slope_mult", sm}})
    if (s.is_number() && s.get<double>() > b.slope) failures.push_back(std::string(name) + " exceeds " + format_double(b.slope));
  std::int64_t used = 0;
  for (double x : a2) used += x >= 2.0;
  r.table.summary = {{"slope_shift", ss},     {"slope_mult", sm},
                     {"slope_points", used},  {"slope_budget", b.slope},
                     {"operator_budget", b.op}, {"pass", failures.empty()}};
  if (!failures.empty()) {
    r.exit_code = 1;
    r.message = "budget failure: " + failures.front();
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

Command parse_command(const std::string& name) {
  for (std::size_t i = 0; i < kCommandNames.size(); ++i)
    if (name == kCommandNames[i]) return static_cast<Command>(i);
  throw std::invalid_argument("unknown command: " + name);
}

std::string command_name(Command c) { return kCommandNames[static_cast<std::size_t>(c)]; }

void Budgets::validate() const {
  for (double v : {carleson, embedding, square_function, petermichl, wilson_per_dim, op, half_power, slope,
                   identity_tolerance})
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("budgets must be positive and finite");
}

Budgets budgets_from_json(const json& j) {
  Budgets b;
  b.carleson = j.value("carleson", b.carleson);
  b.embedding = j.value("embedding", b.embedding);
  b.square_function = j.value("square_function", b.square_function);
  b.petermichl = j.value("petermichl", b.petermichl);
  b.wilson_per_dim = j.value("wilson_per_dim", b.wilson_per_dim);
  b.op = j.value("operator", b.op);
  b.half_power = j.value("half_power", b.half_power);
  b.slope = j.value("slope", b.slope);
  b.identity_tolerance = j.value("identity_tolerance", b.identity_tolerance);
  b.validate();
  return b;
}

json to_json(const Budgets& b) {
  return {{"carleson", b.carleson},   {"embedding", b.embedding},     {"square_function", b.square_function},
          {"petermichl", b.petermichl}, {"wilson_per_dim", b.wilson_per_dim}, {"operator", b.op},
          {"half_power", b.half_power}, {"slope", b.slope},             {"identity_tolerance", b.identity_tolerance}};
}

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  if (c.d == 0) c.d = c.command == Command::wilson_check ? 2 : 1;
  if (c.command == Command::inequality_sweep && c.depths.empty() && c.M == 0)
    c.depths = c.d == 1 ? std::vector<int>{4, 6, 8} : std::vector<int>{2, 3, 4};
  if (c.M == 0) {
    switch (c.command) {
      case Command::identity_check: c.M = 5; break;
      case Command::wilson_check: c.M = 3; break;
      case Command::inequality_sweep: c.M = *std::max_element(c.depths.begin(), c.depths.end()); break;
      case Command::scaling_study: c.M = c.d == 1 ? 8 : 4; break;
    }
  }
  if (c.trials == 0) c.trials = c.command == Command::wilson_check ? 50 : 100;
  return c;
}

std::vector<int> ExperimentConfig::depth_list() const { return depths.empty() ? std::vector<int>{M} : depths; }

int ExperimentConfig::resolution_for(int depth) const { return R > 0 ? R : depth + 2; }

void ExperimentConfig::validate() const {
  if (d == 0 || M == 0 || trials == 0) return resolved().validate();
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension must lie in 1.." + std::to_string(kMaxDim));
  if (trials < 1) throw std::invalid_argument("trial count must be >= 1");
  if (M < 1) throw std::invalid_argument("depth must be >= 1");
  if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
  if (family != "mixed" && family != "recursive" && family != "random" && family != "power")
    throw std::invalid_argument("family must be recursive, random, power or mixed");
  if (command == Command::identity_check && d != 1) throw std::invalid_argument("identity-check is one-dimensional");
  budgets.validate();
  std::vector<int> all = depth_list();
  all.push_back(M);
  for (int depth : all) {
    GridSpec{d, depth, resolution_for(depth)}.validate();
  }
  for (const auto& fam : families_of(*this))
    for (double p : params_of(*this, fam)) {
      if ((fam == "recursive" || fam == "random") && !(std::abs(p) < 1.0))
        throw std::invalid_argument("recursive weights need |delta| < 1");
      if (fam == "random" && p < 0.0) throw std::invalid_argument("random recursive weights need delta_max >= 0");
      if (fam == "power" && d == 1 && !(p > -1.0)) throw std::invalid_argument("power weights in d=1 need a > -1");
      if (fam == "power" && !(p > -d)) throw std::invalid_argument("power weights need a > -d");
    }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("command")) c.command = parse_command(j.at("command").get<std::string>());
  c.d = j.value("dim", c.d);
  c.M = j.value("depth", c.M);
  c.R = j.value("resolution", c.R);
  if (j.contains("depths")) c.depths = j.at("depths").get<std::vector<int>>();
  c.family = j.value("family", c.family);
  if (j.contains("params")) c.params = j.at("params").get<std::vector<double>>();
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  if (j.contains("budget_file")) c.budgets = budgets_from_json(io::read_file(j.at("budget_file").get<std::string>()));
  if (j.contains("budgets")) c.budgets = budgets_from_json(j.at("budgets"));
  c.out = j.value("out", c.out);
  c.format = j.value("format", c.format);
  return c;
}

std::vector<double> default_params(const std::string& family, Command c) {
  if (family == "power") return {-0.9, -0.7, -0.5, -0.3, 0.3, 0.5, 0.7, 0.9};
  if (family == "random" || c == Command::identity_check || c == Command::wilson_check)
    return {0.2, 0.4, 0.6, 0.8};
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
}

int thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("DYADIC_LAB_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) n = std::min(n, c);
  }
  return n;
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double x_min) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] >= x_min && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nullopt;
  const Eigen::Map<const Eigen::VectorXd> X(lx.data(), lx.size()), Y(ly.data(), ly.size());
  const Eigen::VectorXd xc = X.array() - X.mean();
  const double sxx = xc.squaredNorm();
  if (sxx == 0.0) return std::nullopt;
  return xc.dot(Y.array().matrix() - Eigen::VectorXd::Constant(Y.size(), Y.mean())) / sxx;
}

ScalingRow scaling_point(const ExperimentConfig& c, const std::string& family, double param, int M) {
  const auto start = std::chrono::steady_clock::now();
  const int d = c.d, R = c.resolution_for(M);
  auto rng = stream(c.seed, 4, static_cast<std::uint64_t>(std::llround(param * 1e6)) ^ (family == "power" ? 1u : 0u));
  const Weightd w = make_weight(family, param, d, M, R, rng());
  const auto sigma = wilson::random_signs(d, M, rng());
  const Weightd unit = Weightd::unit(d, R);

  ScalingRow row;
  row.param = param;
  row.a2 = a2_characteristic(w).value;
  if (d == 1)
    row.norm_shift = operator_norm([&](const StepFunctiond& x) { return shift_paraproduct(w, x, M); }, unit, w, M).value;
  row.norm_mult =
      operator_norm([&](const StepFunctiond& x) { return wilson::multiplier_paraproduct(w, sigma, x); }, unit, w, M).value;
  for (int k = 0; k < 12; ++k) {
    const auto forms = d == 1 ? shift_term_forms(w, M, k) : wilson::multiplier_term_forms(w, sigma, k);
    row.terms[k] = form_norm(forms[k], w, M).value / row.a2;
  }
  row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

Table scaling_table(const std::vector<ScalingRow>& rows) {
  Table t;
  t.columns = {"param", "a2", "norm_shift", "norm_mult"};
  for (auto name : TermBreakdown<double>::kNames) t.columns.emplace_back(name);
  t.columns.push_back("runtime");
  for (const auto& r : rows) {
    std::vector<Cell> cells = {r.param, r.a2};
    cells.push_back(r.norm_shift ? Cell(*r.norm_shift) : Cell(std::monostate{}));
    cells.push_back(r.norm_mult);
    for (double v : r.terms) cells.push_back(v);
    cells.push_back(r.runtime);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

RunResult run(const ExperimentConfig& requested) {
  const ExperimentConfig config = requested.resolved();
  config.validate();
  RunResult r;
  switch (config.command) {
    case Command::identity_check:
    case Command::wilson_check:
      r = run_identity(config);
      break;
    case Command::inequality_sweep:
      r = run_sweep(config);
      break;
    case Command::scaling_study:
      r = run_scaling(config);
      break;
  }
  r.table.summary["command"] = command_name(config.command);
  r.table.summary["seed"] = config.seed;
  r.table.summary["timestamp"] = iso_timestamp();
  return r;
}

namespace {

json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return nullptr;
        else
          return v;
      },
      c);
}

std::string cell_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return "";
        else if constexpr (std::is_same_v<T, double>)
          return format_double(v);
        else if constexpr (std::is_same_v<T, std::int64_t>)
          return std::to_string(v);
        else
          return v;
      },
      c);
}

}  // namespace

std::string render(const Table& table, const std::string& format) {
  std::ostringstream out;
  if (format == "json") {
    json rows = json::array();
    for (const auto& row : table.rows) {
      json o = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) o[table.columns[i]] = cell_json(row[i]);
      rows.push_back(std::move(o));
    }
    json doc = {{"columns", table.columns}, {"rows", rows}};
    if (!table.summary.empty()) doc["summary"] = table.summary;
    out << doc.dump(2) << '\n';
    return out.str();
  }
  if (format != "csv") throw std::invalid_argument("format must be csv or json");
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_csv(row[i]);
    out << '\n';
  }
  if (!table.summary.empty()) out << "# " << table.summary.dump() << '\n';
  return out.str();
}

void emit(const Table& table, const std::string& format, const std::string& path) {
  const std::string text = render(table, format);
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace dyadic::lab
