#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dyadic/grid.hpp"
#include "dyadic/io.hpp"

using namespace dyadic;

namespace {

StepFunctiond random_step(int d, int R, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  StepFunctiond f(d, R);
  for (auto& v : f.values) v = n(rng);
  return f;
}

// Mean over a cell computed from explicit coordinates, independent of the
// linear layout helpers.
double brute_average(const StepFunctiond& f, const CellIndex& c) {
  const auto k = c.coords();
  const std::int64_t span = std::int64_t{1} << (f.R - c.level);
  double acc = 0.0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const auto q = CellIndex{f.d, f.R, i}.coords();
    bool inside = true;
    for (int a = 0; a < f.d; ++a) inside = inside && q[a] / span == k[a];
    if (inside) {
      acc += f.values[i];
      ++count;
    }
  }
  return acc / count;
}

}  // namespace

TEST(children, unit_interval_bisects_left_then_right) {
  const auto c = children(CellIndex::root(1));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (CellIndex{1, 1, 0}));
  EXPECT_EQ(c[1], (CellIndex{1, 1, 1}));
}

TEST(children, square_quadrants_in_lexicographic_order) {
  const auto c = children(CellIndex::root(2));
  ASSERT_EQ(c.size(), 4u);
  const std::int64_t expected[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    const auto k = c[i].coords();
    EXPECT_EQ(k[0], expected[i][0]);
    EXPECT_EQ(k[1], expected[i][1]);
  }
}

TEST(children, right_half_splits_into_quarters) {
  const auto c = children(CellIndex{1, 1, 1});
  EXPECT_EQ(c[0], (CellIndex{1, 2, 2}));
  EXPECT_EQ(c[1], (CellIndex{1, 2, 3}));
}

TEST(cell_index, parent_of_child_roundtrips) {
  for (int d = 1; d <= 3; ++d)
    for (std::int64_t p = 0; p < (std::int64_t{1} << (2 * d)); ++p) {
      const CellIndex cell{d, 2, p};
      for (const auto& ch : children(cell)) {
        EXPECT_EQ(ch.parent(), cell);
        EXPECT_TRUE(cell.contains(ch));
        EXPECT_EQ(cell.child(cell.child_containing(ch)), ch);
      }
      EXPECT_DOUBLE_EQ(cell.measure(), std::ldexp(1.0, -2 * d));
    }
}

TEST(cell_index, out_of_range_position_rejected) {
  EXPECT_THROW(CellIndex::from_coords(1, 1, {2}), std::out_of_range);
  EXPECT_THROW(CellIndex::root(1).parent(), std::out_of_range);
}

TEST(grid_spec, resolution_must_exceed_depth) {
  EXPECT_THROW((GridSpec{1, 5, 5}.validate()), resolution_error);
  EXPECT_NO_THROW((GridSpec{1, 5, 6}.validate()));
  EXPECT_THROW((GridSpec{0, 1, 2}.validate()), std::invalid_argument);
}

TEST(step_function, size_is_checked) {
  EXPECT_THROW(StepFunctiond(1, 2, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(average, constant_function) {
  const auto f = StepFunctiond::constant(2, 3, 4.5);
  for (int l = 0; l <= 3; ++l) EXPECT_DOUBLE_EQ(average(f, CellIndex{2, l, 0}), 4.5);
}

TEST(average, two_cell_example) {
  StepFunctiond f(1, 1, Eigen::Vector2d(2, 1));
  EXPECT_DOUBLE_EQ(average(f, CellIndex::root(1)), 1.5);
  EXPECT_DOUBLE_EQ(average(f, CellIndex{1, 1, 0}), 2.0);
  EXPECT_THROW(average(f, CellIndex{1, 2, 0}), resolution_error);
}

TEST(average, pyramid_matches_brute_force) {
  for (int d = 1; d <= 3; ++d) {
    const auto f = random_step(d, 3, 10 + d);
    const Pyramid<double> p(f);
    for (int l = 0; l <= 3; ++l)
      for (std::int64_t i = 0; i < (std::int64_t{1} << (d * l)); ++i) {
        const CellIndex c{d, l, i};
        EXPECT_NEAR(p(c), brute_average(f, c), 1e-12);
        EXPECT_NEAR(average(f, c), brute_average(f, c), 1e-12);
      }
  }
}

TEST(average, tiling_reproduces_the_integral) {
  const auto f = random_step(2, 4, 3);
  const Pyramid<double> p(f);
  for (int l = 0; l <= 4; ++l) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < (std::int64_t{1} << (2 * l)); ++i) acc += p(CellIndex{2, l, i}) * std::ldexp(1.0, -2 * l);
    EXPECT_NEAR(acc, f.integral(), 1e-12);
  }
}

TEST(average, parent_is_mean_of_children) {
  const auto f = random_step(3, 3, 4);
  for (std::int64_t i = 0; i < 64; ++i) {
    const CellIndex c{3, 2, i};
    double acc = 0.0;
    for (const auto& ch : children(c)) acc += average(f, ch);
    EXPECT_NEAR(average(f, c), acc / 8.0, 1e-12);
  }
}

TEST(inner, unit_function) {
  const auto one = StepFunctiond::constant(1, 3, 1.0);
  EXPECT_DOUBLE_EQ(inner(one, one), 1.0);
}

TEST(inner, weighted_two_cell_example) {
  StepFunctiond f(1, 1, Eigen::Vector2d(1, -1)), w(1, 1, Eigen::Vector2d(2, 1));
  EXPECT_DOUBLE_EQ(inner_w(f, f, w), 1.5);
}

TEST(inner, symmetric_bilinear_positive) {
  const auto f = random_step(2, 3, 1), g = random_step(2, 3, 2), h = random_step(2, 3, 5);
  EXPECT_DOUBLE_EQ(inner(f, g), inner(g, f));
  EXPECT_NEAR(inner(2.0 * f + g, h), 2.0 * inner(f, h) + inner(g, h), 1e-12);
  EXPECT_GT(inner(f, f), 0.0);
  EXPECT_EQ(inner(StepFunctiond(2, 3), StepFunctiond(2, 3)), 0.0);
}

TEST(inner, mismatched_grids_rejected) {
  EXPECT_THROW(inner(StepFunctiond(1, 2), StepFunctiond(1, 3)), grid_mismatch);
  EXPECT_THROW(inner(StepFunctiond(1, 2), StepFunctiond(2, 1)), grid_mismatch);
}

TEST(refine, keeps_values_and_resolution_test) {
  const auto f = random_step(2, 2, 8);
  const auto g = refine(f, 4);
  EXPECT_TRUE(is_at_resolution(g, 2));
  EXPECT_FALSE(is_at_resolution(g, 1));
  for (std::int64_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(average(g, CellIndex{2, 2, i}), f.values[i]);
  EXPECT_NEAR(f.integral(), g.integral(), 1e-14);
}

TEST(serialization, step_function_roundtrips_exactly) {
  const auto f = random_step(2, 3, 77);
  const auto text = io::to_json(f).dump();
  const auto g = io::step_function_from_json(io::json::parse(text));
  EXPECT_EQ(g.d, 2);
  EXPECT_EQ(g.R, 3);
  EXPECT_EQ(g.values, f.values);
}

TEST(serialization, step_function_bad_length_rejected) {
  const auto j = io::json{{"d", 1}, {"R", 2}, {"values", {1.0, 2.0}}};
  EXPECT_THROW(io::step_function_from_json(j), std::invalid_argument);
}
