#pragma once

#include <stdexcept>

#include "dyadic/grid.hpp"

namespace dyadic {

/// B(phi, g) = sum_k scale_k <phi, p_k> <g, q_k>, with the test functions
/// p_k, q_k stored as columns of level-R cell values.  Every bilinear term
/// of the shift and multiplier decompositions has this shape.
template <typename Scalar>
struct BilinearForm {
  int d = 1;
  int R = 0;
  Vector<Scalar> scale;
  Matrix<Scalar> phi_tests;
  Matrix<Scalar> g_tests;

  BilinearForm() = default;
  BilinearForm(int dim, int resolution, Eigen::Index terms)
      : d(dim),
        R(resolution),
        scale(Vector<Scalar>::Zero(terms)),
        phi_tests(Matrix<Scalar>::Zero(std::int64_t{1} << (dim * resolution), terms)),
        g_tests(Matrix<Scalar>::Zero(std::int64_t{1} << (dim * resolution), terms)) {}

  Eigen::Index terms() const { return scale.size(); }

  void set(Eigen::Index k, Scalar s, const StepFunction<Scalar>& p, const StepFunction<Scalar>& q) {
    scale[k] = s;
    phi_tests.col(k) = p.values;
    g_tests.col(k) = q.values;
  }

  Scalar evaluate(const StepFunction<Scalar>& phi, const StepFunction<Scalar>& g) const {
    if (phi.d != d || phi.R != R || g.d != d || g.R != R) throw grid_mismatch("bilinear form evaluated off-grid");
    const Scalar h = phi.cell_measure();
    const Vector<Scalar> a = h * (phi_tests.transpose() * phi.values);
    const Vector<Scalar> b = h * (g_tests.transpose() * g.values);
    return (scale.array() * a.array() * b.array()).sum();
  }
};

using BilinearFormd = BilinearForm<double>;

}  // namespace dyadic
