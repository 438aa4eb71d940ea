#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dyadic/haar1d.hpp"
#include "dyadic/io.hpp"

using namespace dyadic;
using namespace dyadic::haar1d;

namespace {

StepFunctiond random_step(int R, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  StepFunctiond f(1, R);
  for (auto& v : f.values) v = n(rng);
  return f;
}

std::vector<Weightd> weights(int M, int R) {
  return {Weightd::unit(1, R), gen_recursive_weight(GridSpec{1, M, R}, 0.5),
          gen_recursive_weight(GridSpec{1, M, R}, std::uint64_t{11}, 0.8), gen_power_weight(-0.6, 1, R),
          gen_power_weight(0.9, 1, R)};
}

std::vector<CellIndex> cells_below(int M) {
  std::vector<CellIndex> out;
  for (std::int64_t i = 0; i < index_count(1, M); ++i) out.push_back(unflatten(1, i).cell);
  return out;
}

}  // namespace

TEST(haar, unit_interval_values) {
  const auto h = haar(CellIndex::root(1), 1);
  EXPECT_DOUBLE_EQ(h.values[0], 1.0);
  EXPECT_DOUBLE_EQ(h.values[1], -1.0);
}

TEST(haar, normalized_and_resolution_checked) {
  for (const auto& I : cells_below(5)) EXPECT_NEAR(norm(haar(I, 5)), 1.0, 1e-14);
  EXPECT_THROW(haar(CellIndex{1, 3, 0}, 3), resolution_error);
}

TEST(avg_fn, pairs_to_the_average) {
  const auto f = random_step(5, 1);
  for (const auto& I : cells_below(5)) EXPECT_NEAR(inner(avg_fn(I, 5), f), average(f, I), 1e-13);
}

TEST(haar, orthonormal_with_constant) {
  const int M = 5, R = 5;
  std::vector<StepFunctiond> basis{StepFunctiond::constant(1, R, 1.0)};
  for (const auto& I : cells_below(M)) basis.push_back(haar(I, R));
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b) EXPECT_NEAR(inner(basis[a], basis[b]), a == b ? 1.0 : 0.0, 1e-12);
}

TEST(haar_coeff, left_indicator) {
  EXPECT_DOUBLE_EQ(haar_coeff(indicator<double>(CellIndex{1, 1, 0}, 3), CellIndex::root(1)), 0.5);
}

TEST(haar_coeff, constant_function_vanishes) {
  const auto c = StepFunctiond::constant(1, 4, 2.5);
  for (const auto& I : cells_below(4)) EXPECT_EQ(haar_coeff(c, I), 0.0);
}

TEST(haar_coeff, two_cell_weight) {
  StepFunctiond w(1, 1, Eigen::Vector2d(2, 1));
  EXPECT_DOUBLE_EQ(haar_coeff(w, CellIndex::root(1)), 0.5);
}

TEST(haar_coeff, pyramid_version_matches_inner_product) {
  const auto f = random_step(6, 2);
  const Pyramid<double> p(f);
  for (const auto& I : cells_below(6)) {
    EXPECT_NEAR(haar_coeff(p, I), inner(f, haar(I, 6)), 1e-13);
    EXPECT_NEAR(haar_coeff(f, I), inner(f, haar(I, 6)), 1e-13);
  }
}

TEST(reconstruct, zero_coefficients_give_constant) {
  Coefficients<double> c(1, 3);
  c.mean = 1.25;
  EXPECT_TRUE(reconstruct(c, 5).values.isConstant(1.25));
}

TEST(reconstruct, single_root_coefficient_is_haar) {
  Coefficients<double> c(1, 3);
  c.at(CellIndex::root(1)) = 1.0;
  EXPECT_EQ(reconstruct(c, 4).values, haar(CellIndex::root(1), 4).values);
}

TEST(reconstruct, roundtrip_at_depth) {
  const auto f = refine(random_step(6, 3), 7);
  const auto g = reconstruct(analyze(f, 6), 7);
  EXPECT_LT((f.values - g.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(reconstruct, missing_indices_rejected) {
  Coefficients<double> c(1, 3);
  c.values.resize(4);
  EXPECT_THROW(reconstruct(c, 4), std::invalid_argument);
}

TEST(weighted_haar, unit_weight_recovers_haar) {
  for (const auto& I : cells_below(4)) {
    const auto h = weighted_haar(Weightd::unit(1, 5), I);
    EXPECT_LT((h.values - haar(I, 5).values).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(weighted_haar, two_cell_postconditions) {
  const Weightd w(StepFunctiond(1, 1, Eigen::Vector2d(2, 1)));
  const auto h = weighted_haar(w, CellIndex::root(1));
  EXPECT_NEAR(inner_w(h, h, w.values()), 1.0, 1e-12);
  EXPECT_NEAR(inner(h, w.values()), 0.0, 1e-12);
  EXPECT_GT(h.values[0], 0.0);
}

TEST(weighted_haar, weighted_gram_is_identity) {
  const int M = 3, R = 5;
  for (const auto& w : weights(M, R)) {
    std::vector<StepFunctiond> hs;
    for (const auto& K : cells_below(M)) hs.push_back(weighted_haar(w, K));
    for (std::size_t a = 0; a < hs.size(); ++a) {
      EXPECT_NEAR(inner(hs[a], w.values()), 0.0, 1e-12);
      for (std::size_t b = 0; b < hs.size(); ++b)
        EXPECT_NEAR(inner_w(hs[a], hs[b], w.values()), a == b ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(weighted_haar, pairing_matches_inner_product) {
  const auto w = gen_power_weight(0.4, 1, 6);
  const auto u = random_step(6, 4);
  const Pyramid<double> pu(u);
  for (const auto& K : cells_below(5))
    EXPECT_NEAR(weighted_haar_pairing(w.averages(), pu, K), inner(u, weighted_haar(w, K)), 1e-12);
}

TEST(disbalanced, unit_weight) {
  const auto cd = disbalanced(Weightd::unit(1, 3), CellIndex::root(1));
  EXPECT_DOUBLE_EQ(cd.C, 1.0);
  EXPECT_DOUBLE_EQ(cd.D, 0.0);
}

TEST(disbalanced, two_cell_example) {
  const Weightd w(StepFunctiond(1, 1, Eigen::Vector2d(2, 1)));
  const auto cd = disbalanced(w, CellIndex::root(1));
  EXPECT_NEAR(cd.C, std::sqrt(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(cd.D, 1.0 / 3.0, 1e-15);
}

TEST(disbalanced, homogeneity) {
  const auto w = gen_recursive_weight(GridSpec{1, 4, 6}, std::uint64_t{2}, 0.7);
  const auto cw = w.scaled(9.0);
  for (const auto& K : cells_below(4)) {
    const auto a = disbalanced(w, K), b = disbalanced(cw, K);
    EXPECT_NEAR(b.C, 3.0 * a.C, 1e-12 * b.C);
    EXPECT_NEAR(b.D, a.D, 1e-12);
  }
}

TEST(disbalanced, decomposes_haar_pointwise) {
  const int M = 5, R = 7;
  for (const auto& w : weights(M, R))
    for (const auto& K : cells_below(M + 1)) {
      const auto cd = disbalanced(w, K);
      const auto rhs = cd.C * weighted_haar(w, K) + cd.D * avg_fn<double>(K, R);
      EXPECT_LT((haar(K, R).values - rhs.values).cwiseAbs().maxCoeff(), 1e-12 * haar(K, R).values.cwiseAbs().maxCoeff());
    }
}

TEST(disbalanced, weighted_pairing_identity) {
  const int M = 5, R = 7;
  const auto g = random_step(R, 9);
  for (const auto& w : weights(M, R))
    for (const auto& K : cells_below(M)) {
      const auto cd = disbalanced(w, K);
      const double lhs = inner_w(haar(K, R), g, w.values());
      const double a = cd.C * inner_w(weighted_haar(w, K), g, w.values());
      const double b = cd.D * inner_w(avg_fn<double>(K, R), g, w.values());
      EXPECT_LE(std::abs(lhs - a - b), 1e-9 * std::max({std::abs(lhs), std::abs(a), std::abs(b)}));
    }
}

TEST(disbalanced, size_estimates) {
  const int M = 6, R = 8;
  for (const auto& w : weights(M, R))
    for (const auto& K : cells_below(M)) {
      const auto cd = disbalanced(w, K);
      const double m = w.average(K);
      EXPECT_GE(cd.C, 0.0);
      EXPECT_NEAR(cd.C * cd.C, w.average(K.child(0)) * w.average(K.child(1)) / m, 1e-12 * m);
      EXPECT_LE(cd.C, 2.0 * std::sqrt(m));
      EXPECT_LE(disbalanced(w, K.child(0)).C, 2.0 * std::sqrt(m));
      EXPECT_LE(std::abs(cd.D), std::max(w.average(K.child(0)), w.average(K.child(1))) / m + 1e-15);
    }
}

TEST(serialization, coefficient_map_roundtrip) {
  const auto c = analyze(random_step(4, 5), 4);
  const auto j = io::coefficient_map_json(c);
  EXPECT_EQ(j.at("coeffs").size(), 15u);
  const auto back = io::coefficient_map_from_json(io::json::parse(j.dump()));
  EXPECT_EQ(back.values, c.values);
  EXPECT_EQ(back.mean, c.mean);
  EXPECT_THROW(io::coefficient_map_from_json({{"M", 2}, {"coeffs", {{2, 0, 1.0}}}}), std::out_of_range);
}
