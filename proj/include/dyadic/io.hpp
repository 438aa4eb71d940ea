#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dyadic/coefficients.hpp"
#include "dyadic/embed.hpp"
#include "dyadic/grid.hpp"
#include "dyadic/shiftops.hpp"
#include "dyadic/weight.hpp"

namespace dyadic::io {

using json = nlohmann::json;

inline json cell_json(const CellIndex& c) {
  json pos = json::array();
  const auto k = c.coords();
  for (int i = 0; i < c.d; ++i) pos.push_back(k[i]);
  return {{"level", c.level}, {"pos", pos}};
}

inline json index_json(const WilsonIndex& w) {
  json j = cell_json(w.cell);
  j["alpha"] = w.alpha;
  return j;
}

// ---------------------------------------------------------------------------
// Step functions and weights

inline json to_json(const StepFunctiond& f) {
  return {{"d", f.d}, {"R", f.R}, {"values", std::vector<double>(f.values.data(), f.values.data() + f.size())}};
}

inline StepFunctiond step_function_from_json(const json& j) {
  const int d = j.at("d").get<int>(), R = j.at("R").get<int>();
  if (d < 1 || d > kMaxDim || R < 0 || d * R > 24) throw std::invalid_argument("step function: bad (d, R)");
  const auto v = j.at("values").get<std::vector<double>>();
  return {d, R, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))};
}

inline json to_json(const Weightd& w) {
  json j = to_json(w.values());
  j["kind"] = "weight";
  return j;
}

/// Throws std::domain_error on non-positive values.
inline Weightd weight_from_json(const json& j) {
  if (j.contains("kind") && j.at("kind") != "weight") throw std::invalid_argument("not a weight document");
  return Weightd(step_function_from_json(j));
}

/// {"family": "recursive"|"power", "delta"|"a", "seed", "M", "R", "d"}.  A
/// recursive config with a seed draws per-node deltas in [-delta, delta].
inline Weightd weight_from_generator_json(const json& j) {
  const GridSpec g{j.value("d", 1), j.at("M").get<int>(), j.at("R").get<int>()};
  g.validate();
  const auto family = j.at("family").get<std::string>();
  if (family == "recursive") {
    const double delta = j.at("delta").get<double>();
    if (j.contains("seed")) return gen_recursive_weight(g, j.at("seed").get<std::uint64_t>(), delta);
    return gen_recursive_weight(g, delta);
  }
  if (family == "power") return gen_power_weight(j.at("a").get<double>(), g.d, g.R);
  throw std::invalid_argument("unknown weight family: " + family);
}

// ---------------------------------------------------------------------------
// Coefficient maps (d=1): {"M", "coeffs": [[level, position, value]], "avg"}

inline json coefficient_map_json(const Coefficients<double>& c) {
  if (c.d != 1) throw std::invalid_argument("coefficient map documents are one-dimensional");
  json coeffs = json::array();
  for (std::int64_t i = 0; i < c.size(); ++i) {
    const CellIndex I = unflatten(1, i).cell;
    coeffs.push_back({I.level, I.linear, c.values[i]});
  }
  return {{"M", c.M}, {"coeffs", coeffs}, {"avg", c.mean}};
}

/// Entries missing from the document are zero.
inline Coefficients<double> coefficient_map_from_json(const json& j) {
  Coefficients<double> c(1, j.at("M").get<int>());
  c.mean = j.value("avg", 0.0);
  for (const auto& e : j.at("coeffs")) {
    const int level = e.at(0).get<int>();
    const auto pos = e.at(1).get<std::int64_t>();
    if (level < 0 || level >= c.M || pos < 0 || pos >= (std::int64_t{1} << level))
      throw std::out_of_range("coefficient index outside the depth-M grid");
    c.at(CellIndex{1, level, pos}) = e.at(2).get<double>();
  }
  return c;
}

// ---------------------------------------------------------------------------
// Wilson symbols and sign patterns: {"d", "M", "entries": [[level, pos..., alpha, value]]}

template <typename Get>
json entries_json(int d, int M, Get&& get) {
  json entries = json::array();
  for (std::int64_t i = 0; i < index_count(d, M); ++i) {
    const WilsonIndex w = unflatten(d, i);
    json e = json::array({w.cell.level});
    const auto k = w.cell.coords();
    for (int a = 0; a < d; ++a) e.push_back(k[a]);
    e.push_back(w.alpha);
    e.push_back(get(i));
    entries.push_back(std::move(e));
  }
  return {{"d", d}, {"M", M}, {"entries", entries}};
}

template <typename Set>
void entries_from_json(const json& j, int d, int M, Set&& set) {
  for (const auto& e : j.at("entries")) {
    if (e.size() != static_cast<std::size_t>(d + 3)) throw std::invalid_argument("entry has the wrong arity");
    const int level = e.at(0).get<int>();
    if (level < 0 || level >= M) throw std::out_of_range("entry level outside the depth-M grid");
    std::array<std::int64_t, kMaxDim> k{};
    for (int a = 0; a < d; ++a) k[a] = e.at(1 + a).get<std::int64_t>();
    const int alpha = e.at(1 + d).get<int>();
    if (alpha < 0 || alpha >= pairs_per_cell(d)) throw std::out_of_range("alpha outside Gamma_d");
    set(flat_index({CellIndex::from_coords(d, level, k), alpha}), e.at(2 + d));
  }
}

inline json to_json(const SignPattern& s) {
  return entries_json(s.d, s.M, [&](std::int64_t i) { return s.signs[i]; });
}

/// The pattern must be total.
inline SignPattern sign_pattern_from_json(const json& j) {
  SignPattern s(j.at("d").get<int>(), j.at("M").get<int>(), 0);
  entries_from_json(j, s.d, s.M, [&](std::int64_t i, const json& v) { s.signs[i] = v.get<int>(); });
  s.validate();
  return s;
}

inline json wilson_symbol_json(const Coefficients<double>& c) {
  return entries_json(c.d, c.M, [&](std::int64_t i) { return c.values[i]; });
}

inline Coefficients<double> wilson_symbol_from_json(const json& j) {
  Coefficients<double> c(j.at("d").get<int>(), j.at("M").get<int>());
  std::vector<bool> seen(c.size(), false);
  entries_from_json(j, c.d, c.M, [&](std::int64_t i, const json& v) {
    c.values[i] = v.get<double>();
    seen[i] = true;
  });
  for (bool b : seen)
    if (!b) throw std::invalid_argument("Wilson symbol is not total on the depth-M index set");
  return c;
}

// ---------------------------------------------------------------------------
// Results

inline json to_json(const TermBreakdown<double>& t) {
  json j;
  const auto v = t.terms();
  for (std::size_t k = 0; k < v.size(); ++k) j[std::string(TermBreakdown<double>::kNames[k])] = v[k];
  j["lhs"] = t.lhs;
  j["signed_sum"] = t.signed_sum();
  j["residual"] = t.residual();
  j["split_residual"] = t.split_residual();
  return j;
}

inline json to_json(const CarlesonReport& r, double budget) {
  return {{"sup", r.sup_value}, {"argmax", index_json(r.argmax)}, {"budget", budget}, {"pass", r.sup_value <= budget}};
}

inline json to_json(const NormEstimate& e) {
  return {{"value", e.value}, {"iters", e.iterations}, {"residual", e.residual}};
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

inline void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace dyadic::io
