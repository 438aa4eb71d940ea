#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dyadic {

// Cells of [0,1)^d are addressed by (level, linear) where linear is the
// lexicographic index of the integer position vector, coordinate 0 most
// significant.  d * level must fit in 62 bits.
inline constexpr int kMaxDim = 8;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class resolution_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class grid_mismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Truncated dyadic grid shared by every object of one experiment.
/// Coefficients live on levels 0..M-1; step functions on level-R cells.
struct GridSpec {
  int d = 1;
  int M = 1;
  int R = 2;

  void validate() const {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension out of range: " + std::to_string(d));
    if (M < 1) throw std::invalid_argument("depth must be >= 1");
    if (R < M + 1) throw resolution_error("resolution R must be >= M+1");
    if (d * R > 24) throw std::invalid_argument("d*R exceeds the dense-array limit of 2^24 cells");
  }

  std::int64_t cells_at(int level) const { return std::int64_t{1} << (d * level); }
  std::int64_t fine_cells() const { return cells_at(R); }
  int children_per_cell() const { return 1 << d; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct CellIndex {
  int d = 1;
  int level = 0;
  std::int64_t linear = 0;

  static CellIndex root(int d) { return {d, 0, 0}; }

  static CellIndex from_coords(int d, int level, const std::array<std::int64_t, kMaxDim>& k) {
    std::int64_t lin = 0;
    for (int i = 0; i < d; ++i) {
      if (k[i] < 0 || k[i] >= (std::int64_t{1} << level))
        throw std::out_of_range("cell position out of range for its level");
      lin = (lin << level) | k[i];
    }
    return {d, level, lin};
  }

  std::array<std::int64_t, kMaxDim> coords() const {
    std::array<std::int64_t, kMaxDim> k{};
    const std::int64_t mask = (std::int64_t{1} << level) - 1;
    for (int i = d - 1, shift = 0; i >= 0; --i, shift += level) k[i] = (linear >> shift) & mask;
    return k;
  }

  double measure() const { return std::ldexp(1.0, -d * level); }

  CellIndex parent() const {
    if (level == 0) throw std::out_of_range("root has no parent");
    auto k = coords();
    for (int i = 0; i < d; ++i) k[i] >>= 1;
    return from_coords(d, level - 1, k);
  }

  /// Child number c carries one bit per coordinate, coordinate 0 in the
  /// most significant bit; in d=1 child 0 is I- (left), child 1 is I+.
  CellIndex child(int c) const {
    auto k = coords();
    for (int i = 0; i < d; ++i) k[i] = 2 * k[i] + ((c >> (d - 1 - i)) & 1);
    return from_coords(d, level + 1, k);
  }

  /// Index of the child of *this that contains `other` (other strictly inside).
  int child_containing(const CellIndex& other) const {
    const auto k = other.coords();
    const int shift = other.level - level - 1;
    int c = 0;
    for (int i = 0; i < d; ++i) c = (c << 1) | static_cast<int>((k[i] >> shift) & 1);
    return c;
  }

  bool contains(const CellIndex& other) const {
    if (other.level < level) return false;
    const auto k = other.coords();
    const auto mine = coords();
    const int shift = other.level - level;
    for (int i = 0; i < d; ++i)
      if ((k[i] >> shift) != mine[i]) return false;
    return true;
  }

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

inline std::vector<CellIndex> children(const CellIndex& cell) {
  std::vector<CellIndex> out;
  out.reserve(std::size_t{1} << cell.d);
  for (int c = 0; c < (1 << cell.d); ++c) out.push_back(cell.child(c));
  return out;
}

/// Visits the linear indices of the level-R cells covering `cell`.
template <typename Fn>
void for_each_fine_cell(const CellIndex& cell, int R, Fn&& fn) {
  if (cell.level > R) throw resolution_error("cell finer than resolution");
  const int span_bits = R - cell.level;
  const std::int64_t span = std::int64_t{1} << span_bits;
  const auto k = cell.coords();
  const int d = cell.d;
  std::array<std::int64_t, kMaxDim> off{};
  const std::int64_t total = std::int64_t{1} << (d * span_bits);
  for (std::int64_t t = 0; t < total; ++t) {
    std::int64_t lin = 0;
    for (int i = 0; i < d; ++i) lin = (lin << R) | (k[i] * span + off[i]);
    fn(lin);
    for (int i = d - 1; i >= 0; --i) {
      if (++off[i] < span) break;
      off[i] = 0;
    }
  }
}

/// Real-valued function on [0,1)^d, constant on level-R cells.
template <typename Scalar>
struct StepFunction {
  int d = 1;
  int R = 0;
  Vector<Scalar> values;

  StepFunction() = default;
  StepFunction(int dim, int resolution)
      : d(dim), R(resolution), values(Vector<Scalar>::Zero(std::int64_t{1} << (dim * resolution))) {}
  StepFunction(int dim, int resolution, Vector<Scalar> v) : d(dim), R(resolution), values(std::move(v)) {
    if (values.size() != (std::int64_t{1} << (d * R)))
      throw std::invalid_argument("step function needs exactly 2^(d*R) values");
  }

  static StepFunction constant(int dim, int resolution, Scalar c) {
    StepFunction f(dim, resolution);
    f.values.setConstant(c);
    return f;
  }

  Scalar cell_measure() const { return static_cast<Scalar>(std::ldexp(1.0, -d * R)); }
  Scalar integral() const { return values.sum() * cell_measure(); }
  std::int64_t size() const { return values.size(); }

  bool same_lattice(const StepFunction& o) const { return d == o.d && R == o.R; }
};

using StepFunctiond = StepFunction<double>;

template <typename Scalar>
void require_same_lattice(const StepFunction<Scalar>& a, const StepFunction<Scalar>& b) {
  if (!a.same_lattice(b)) throw grid_mismatch("step functions live on different grids");
}

template <typename Scalar>
void require_on_grid(const StepFunction<Scalar>& f, const GridSpec& g) {
  if (f.d != g.d || f.R != g.R) throw grid_mismatch("step function does not match the grid spec");
}

template <typename Scalar>
StepFunction<Scalar> operator*(const StepFunction<Scalar>& a, const StepFunction<Scalar>& b) {
  require_same_lattice(a, b);
  return {a.d, a.R, (a.values.array() * b.values.array()).matrix()};
}

template <typename Scalar>
StepFunction<Scalar> operator+(const StepFunction<Scalar>& a, const StepFunction<Scalar>& b) {
  require_same_lattice(a, b);
  return {a.d, a.R, a.values + b.values};
}

template <typename Scalar>
StepFunction<Scalar> operator-(const StepFunction<Scalar>& a, const StepFunction<Scalar>& b) {
  require_same_lattice(a, b);
  return {a.d, a.R, a.values - b.values};
}

template <typename Scalar>
StepFunction<Scalar> operator*(Scalar s, const StepFunction<Scalar>& a) {
  return {a.d, a.R, s * a.values};
}

template <typename Scalar>
StepFunction<Scalar> pow(const StepFunction<Scalar>& a, Scalar p) {
  return {a.d, a.R, a.values.array().pow(p).matrix()};
}

/// Adds `value` on the region of `cell`.
template <typename Scalar>
void paint(StepFunction<Scalar>& f, const CellIndex& cell, Scalar value) {
  for_each_fine_cell(cell, f.R, [&](std::int64_t i) { f.values[i] += value; });
}

template <typename Scalar>
StepFunction<Scalar> indicator(const CellIndex& cell, int R) {
  StepFunction<Scalar> f(cell.d, R);
  paint(f, cell, Scalar(1));
  return f;
}

/// Re-expresses a coarse function (resolution r) at resolution R >= r.
template <typename Scalar>
StepFunction<Scalar> refine(const StepFunction<Scalar>& f, int R) {
  if (R < f.R) throw resolution_error("refine target coarser than source");
  StepFunction<Scalar> out(f.d, R);
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const CellIndex c{f.d, f.R, i};
    for_each_fine_cell(c, R, [&](std::int64_t j) { out.values[j] = f.values[i]; });
  }
  return out;
}

/// Dyadic averages of f on every level 0..R.  levels[l][p] is the mean of f
/// over the level-l cell with linear index p.
template <typename Scalar>
class Pyramid {
 public:
  Pyramid() = default;
  explicit Pyramid(const StepFunction<Scalar>& f) : d_(f.d) {
    levels_.resize(f.R + 1);
    levels_[f.R] = f.values;
    const int nc = 1 << d_;
    for (int l = f.R - 1; l >= 0; --l) {
      const std::int64_t n = std::int64_t{1} << (d_ * l);
      levels_[l].resize(n);
      for (std::int64_t p = 0; p < n; ++p) {
        const CellIndex cell{d_, l, p};
        Scalar acc(0);
        for (int c = 0; c < nc; ++c) acc += levels_[l + 1][cell.child(c).linear];
        levels_[l][p] = acc / Scalar(nc);
      }
    }
  }

  Scalar average(const CellIndex& cell) const {
    if (cell.level >= static_cast<int>(levels_.size())) throw resolution_error("average: cell finer than resolution");
    return levels_[cell.level][cell.linear];
  }
  Scalar operator()(const CellIndex& cell) const { return average(cell); }
  const Vector<Scalar>& level(int l) const { return levels_.at(l); }
  int resolution() const { return static_cast<int>(levels_.size()) - 1; }
  int dim() const { return d_; }

  /// Mean over the union of children of `cell` whose child numbers lie in
  /// [first, first+count).
  Scalar average_children(const CellIndex& cell, int first, int count) const {
    Scalar acc(0);
    for (int c = first; c < first + count; ++c) acc += levels_.at(cell.level + 1)[cell.child(c).linear];
    return acc / Scalar(count);
  }

 private:
  int d_ = 1;
  std::vector<Vector<Scalar>> levels_;
};

template <typename Scalar>
Scalar average(const StepFunction<Scalar>& f, const CellIndex& cell) {
  if (cell.level > f.R) throw resolution_error("average: cell level exceeds resolution");
  Scalar acc(0);
  std::int64_t n = 0;
  for_each_fine_cell(cell, f.R, [&](std::int64_t i) {
    acc += f.values[i];
    ++n;
  });
  return acc / Scalar(n);
}

template <typename Scalar>
Scalar inner(const StepFunction<Scalar>& f, const StepFunction<Scalar>& g) {
  require_same_lattice(f, g);
  return f.values.dot(g.values) * f.cell_measure();
}

template <typename Scalar>
Scalar inner_w(const StepFunction<Scalar>& f, const StepFunction<Scalar>& g, const StepFunction<Scalar>& w) {
  require_same_lattice(f, g);
  require_same_lattice(f, w);
  return (f.values.array() * g.values.array() * w.values.array()).sum() * f.cell_measure();
}

template <typename Scalar>
Scalar norm(const StepFunction<Scalar>& f) {
  using std::sqrt;
  return sqrt(inner(f, f));
}

template <typename Scalar>
Scalar norm_w(const StepFunction<Scalar>& f, const StepFunction<Scalar>& w) {
  using std::sqrt;
  return sqrt(inner_w(f, f, w));
}

/// True if f is constant on every level-`level` cell.
template <typename Scalar>
bool is_at_resolution(const StepFunction<Scalar>& f, int level) {
  if (level >= f.R) return true;
  for (std::int64_t p = 0; p < (std::int64_t{1} << (f.d * level)); ++p) {
    const CellIndex cell{f.d, level, p};
    bool first = true;
    Scalar v0(0);
    bool ok = true;
    for_each_fine_cell(cell, f.R, [&](std::int64_t i) {
      if (first) {
        v0 = f.values[i];
        first = false;
      } else if (f.values[i] != v0) {
        ok = false;
      }
    });
    if (!ok) return false;
  }
  return true;
}

}  // namespace dyadic
