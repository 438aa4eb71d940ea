#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "dyadic/coefficients.hpp"
#include "dyadic/grid.hpp"

namespace dyadic {

/// Strictly positive step function with its pointwise powers and the dyadic
/// averages of w and w^{-1} cached on every level.  Immutable.
template <typename Scalar>
class Weight {
 public:
  Weight() = default;
  explicit Weight(StepFunction<Scalar> base) : base_(std::move(base)) {
    if (base_.size() == 0) throw std::invalid_argument("weight needs values");
    if (!(base_.values.minCoeff() > Scalar(0))) throw std::domain_error("weight values must be strictly positive");
    inverse_ = {base_.d, base_.R, base_.values.cwiseInverse()};
    sqrt_ = {base_.d, base_.R, base_.values.cwiseSqrt()};
    inv_sqrt_ = {base_.d, base_.R, sqrt_.values.cwiseInverse()};
    avg_ = Pyramid<Scalar>(base_);
    inv_avg_ = Pyramid<Scalar>(inverse_);
  }

  static Weight unit(int d, int R) { return Weight(StepFunction<Scalar>::constant(d, R, Scalar(1))); }

  const StepFunction<Scalar>& values() const { return base_; }
  const StepFunction<Scalar>& inverse() const { return inverse_; }
  const StepFunction<Scalar>& sqrt() const { return sqrt_; }
  const StepFunction<Scalar>& inv_sqrt() const { return inv_sqrt_; }
  const Pyramid<Scalar>& averages() const { return avg_; }
  const Pyramid<Scalar>& inverse_averages() const { return inv_avg_; }

  Scalar average(const CellIndex& c) const { return avg_.average(c); }
  Scalar inverse_average(const CellIndex& c) const { return inv_avg_.average(c); }
  /// w(I) = <w>_I |I|
  Scalar mass(const CellIndex& c) const { return avg_.average(c) * Scalar(c.measure()); }

  int d() const { return base_.d; }
  int R() const { return base_.R; }

  /// The weight w^{-1} as a Weight in its own right.
  Weight reciprocal() const { return Weight(inverse_); }
  Weight scaled(Scalar c) const { return Weight(StepFunction<Scalar>{base_.d, base_.R, c * base_.values}); }

 private:
  StepFunction<Scalar> base_;
  StepFunction<Scalar> inverse_;
  StepFunction<Scalar> sqrt_;
  StepFunction<Scalar> inv_sqrt_;
  Pyramid<Scalar> avg_;
  Pyramid<Scalar> inv_avg_;
};

using Weightd = Weight<double>;

template <typename Scalar>
struct A2Result {
  Scalar value = Scalar(1);
  CellIndex argmax;
};

/// Dyadic A2 characteristic: sup over every cell on levels 0..R of
/// <w>_I <w^{-1}>_I.
template <typename Scalar>
A2Result<Scalar> a2_characteristic(const Weight<Scalar>& w) {
  A2Result<Scalar> best{Scalar(0), CellIndex::root(w.d())};
  for (int l = 0; l <= w.R(); ++l) {
    const auto& a = w.averages().level(l);
    const auto& b = w.inverse_averages().level(l);
    for (Eigen::Index p = 0; p < a.size(); ++p) {
      const Scalar v = a[p] * b[p];
      if (v > best.value) best = {v, CellIndex{w.d(), l, static_cast<std::int64_t>(p)}};
    }
  }
  return best;
}

/// Top-down multiplicative weight.  For every index (I, alpha) of the
/// depth-M grid the children in E1 get average (1+delta) <w>_E and those in
/// E2 get (1-delta) <w>_E; in d=1 this is <w>_{I-} = (1+delta_I) <w>_I.
/// Cells below level M are constant.
template <typename Scalar>
Weight<Scalar> gen_recursive_weight(const GridSpec& grid, const Coefficients<Scalar>& delta,
                                    Scalar root_average = Scalar(1)) {
  grid.validate();
  require_depth(delta, grid.d, grid.M);
  using std::abs;
  for (Eigen::Index i = 0; i < delta.values.size(); ++i)
    if (!(abs(delta.values[i]) < Scalar(1))) throw std::domain_error("recursive weight needs |delta| < 1 at every node");
  if (!(root_average > Scalar(0))) throw std::domain_error("root average must be positive");

  const int d = grid.d;
  const int nc = 1 << d;
  Vector<Scalar> current = Vector<Scalar>::Constant(1, root_average);
  for (int l = 0; l < grid.M; ++l) {
    Vector<Scalar> next(std::int64_t{1} << (d * (l + 1)));
    std::vector<Scalar> child(nc);
    for (std::int64_t p = 0; p < current.size(); ++p) {
      const CellIndex cell{d, l, p};
      std::fill(child.begin(), child.end(), current[p]);
      for (int alpha = 0; alpha < pairs_per_cell(d); ++alpha) {
        const PairNode node = pair_node(d, alpha);
        const Scalar del = delta.at(cell, alpha);
        for (int c = node.first; c < node.first2(); ++c) child[c] *= (Scalar(1) + del);
        for (int c = node.first2(); c < node.first2() + node.half; ++c) child[c] *= (Scalar(1) - del);
      }
      for (int c = 0; c < nc; ++c) next[cell.child(c).linear] = child[c];
    }
    current = std::move(next);
  }
  return Weight<Scalar>(refine(StepFunction<Scalar>{d, grid.M, current}, grid.R));
}

template <typename Scalar>
Weight<Scalar> gen_recursive_weight(const GridSpec& grid, Scalar constant_delta) {
  return gen_recursive_weight(grid, Coefficients<Scalar>::constant(grid.d, grid.M, constant_delta));
}

/// Per-node deltas drawn uniformly from [-delta_max, delta_max], level-major.
template <typename Scalar>
Weight<Scalar> gen_recursive_weight(const GridSpec& grid, std::uint64_t seed, Scalar delta_max) {
  if (!(delta_max < Scalar(1)) || delta_max < Scalar(0)) throw std::domain_error("delta_max must lie in [0,1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Coefficients<Scalar> delta(grid.d, grid.M);
  for (Eigen::Index i = 0; i < delta.values.size(); ++i) delta.values[i] = delta_max * Scalar(u(rng));
  return gen_recursive_weight(grid, delta);
}

/// Power weight.  In d=1 the cell values are the exact cell averages of x^a;
/// in d>=2 |x|^a is sampled at cell centroids.
template <typename Scalar>
Weight<Scalar> gen_power_weight(Scalar a, int d, int R) {
  using std::pow;
  StepFunction<Scalar> f(d, R);
  if (d == 1) {
    if (!(a > Scalar(-1))) throw std::domain_error("power weight in d=1 needs a > -1");
    const Scalar h = Scalar(std::ldexp(1.0, -R));
    for (std::int64_t k = 0; k < f.size(); ++k) {
      if (a == Scalar(0)) {
        f.values[k] = Scalar(1);
        continue;
      }
      const Scalar k0 = Scalar(k), k1 = Scalar(k + 1);
      f.values[k] = (pow(k1, a + 1) - pow(k0, a + 1)) * pow(h, a) / (a + Scalar(1));
    }
  } else {
    const Scalar h = Scalar(std::ldexp(1.0, -R));
    for (std::int64_t i = 0; i < f.size(); ++i) {
      const auto k = CellIndex{d, R, i}.coords();
      Scalar r2(0);
      for (int j = 0; j < d; ++j) {
        const Scalar x = (Scalar(k[j]) + Scalar(0.5)) * h;
        r2 += x * x;
      }
      f.values[i] = pow(r2, a / Scalar(2));
    }
  }
  return Weight<Scalar>(std::move(f));
}

}  // namespace dyadic
