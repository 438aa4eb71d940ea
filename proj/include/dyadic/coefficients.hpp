#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

#include "dyadic/grid.hpp"

namespace dyadic {

/// One Haar or Wilson basis index: a cube together with its pair number.
/// In d=1 alpha is always 0 and the index is a plain Haar index.
struct WilsonIndex {
  CellIndex cell;
  int alpha = 0;

  friend bool operator==(const WilsonIndex&, const WilsonIndex&) = default;
};

inline int pairs_per_cell(int d) { return (1 << d) - 1; }

/// Node alpha of the binary tree that splits the 2^d children of a cube by
/// coordinate bits (coordinate 0 first), numbered breadth-first.  The node
/// at tree depth t with prefix p owns the children [p*2^(d-t), (p+1)*2^(d-t));
/// its first half is E1 and its second half E2.
struct PairNode {
  int depth = 0;
  int prefix = 0;
  int first = 0;  // first child number of E1
  int half = 1;   // children in each of E1 and E2

  int first2() const { return first + half; }
  int count() const { return 2 * half; }
};

inline PairNode pair_node(int d, int alpha) {
  int t = 0;
  while ((2 << t) - 1 <= alpha) ++t;
  const int prefix = alpha - ((1 << t) - 1);
  const int span = 1 << (d - t);
  return {t, prefix, prefix * span, span / 2};
}

/// Number of (cube, alpha) indices on levels 0..M-1; equals 2^(dM) - 1.
inline std::int64_t index_count(int d, int M) { return (std::int64_t{1} << (d * M)) - 1; }

/// Dense level-major, position-minor, alpha-minor layout.
inline std::int64_t flat_index(const WilsonIndex& w) {
  const int d = w.cell.d;
  return ((std::int64_t{1} << (d * w.cell.level)) - 1) + w.cell.linear * pairs_per_cell(d) + w.alpha;
}

inline WilsonIndex unflatten(int d, std::int64_t flat) {
  int level = 0;
  while (flat >= (std::int64_t{1} << (d * (level + 1))) - 1) ++level;
  const std::int64_t local = flat - ((std::int64_t{1} << (d * level)) - 1);
  const int ppc = pairs_per_cell(d);
  return {CellIndex{d, level, local / ppc}, static_cast<int>(local % ppc)};
}

/// Real numbers attached to every index of a depth-M grid, stored densely.
/// Serves as Haar coefficient map, paraproduct symbol and Wilson symbol.
/// `mean` carries the global average when the map describes a function.
template <typename Scalar>
struct Coefficients {
  int d = 1;
  int M = 1;
  Vector<Scalar> values;
  Scalar mean = Scalar(0);

  Coefficients() = default;
  Coefficients(int dim, int depth) : d(dim), M(depth), values(Vector<Scalar>::Zero(index_count(dim, depth))) {}

  static Coefficients constant(int dim, int depth, Scalar c) {
    Coefficients out(dim, depth);
    out.values.setConstant(c);
    return out;
  }

  Scalar& operator[](const WilsonIndex& w) { return values[flat_index(w)]; }
  Scalar operator[](const WilsonIndex& w) const { return values[flat_index(w)]; }
  Scalar& at(const CellIndex& c, int alpha = 0) { return values[flat_index({c, alpha})]; }
  Scalar at(const CellIndex& c, int alpha = 0) const { return values[flat_index({c, alpha})]; }
  std::int64_t size() const { return values.size(); }
};

using SymbolSequence = Coefficients<double>;
using WilsonSymbol = Coefficients<double>;

/// Signs sigma_{I,alpha} in {+1,-1} for every index of the depth-M grid.
struct SignPattern {
  int d = 1;
  int M = 1;
  Eigen::VectorXi signs;

  SignPattern() = default;
  SignPattern(int dim, int depth, int fill = 1)
      : d(dim), M(depth), signs(Eigen::VectorXi::Constant(index_count(dim, depth), fill)) {}

  int operator[](const WilsonIndex& w) const { return signs[flat_index(w)]; }

  void validate() const {
    if (signs.size() != index_count(d, M)) throw std::invalid_argument("sign pattern is not total on the index set");
    for (Eigen::Index i = 0; i < signs.size(); ++i)
      if (signs[i] != 1 && signs[i] != -1) throw std::invalid_argument("sign pattern entries must be +1 or -1");
  }
};

template <typename Scalar>
void require_depth(const Coefficients<Scalar>& c, int d, int M) {
  if (c.d != d || c.M != M || c.values.size() != index_count(d, M))
    throw std::invalid_argument("coefficient map does not cover the depth-M index set");
}

}  // namespace dyadic
