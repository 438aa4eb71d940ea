#pragma once

#include <cmath>

#include "dyadic/coefficients.hpp"
#include "dyadic/grid.hpp"
#include "dyadic/weight.hpp"

namespace dyadic::haar1d {

namespace detail {

inline void require_1d(const CellIndex& I) {
  if (I.d != 1) throw std::invalid_argument("haar1d works on d=1 cells only");
}

inline void require_splittable(const CellIndex& I, int R) {
  require_1d(I);
  if (I.level > R - 1) throw resolution_error("Haar function needs level(I) <= R-1");
}

}  // namespace detail

/// (C_K(w), D_K(w)) of the disbalanced decomposition.
template <typename Scalar>
struct DisbalancedPair {
  Scalar C = Scalar(1);
  Scalar D = Scalar(0);
};

/// f-hat_I from cached averages: sqrt|I|/2 (<f>_{I-} - <f>_{I+}).
template <typename Scalar>
Scalar haar_coeff(const Pyramid<Scalar>& avg, const CellIndex& I) {
  using std::sqrt;
  return sqrt(Scalar(I.measure())) / Scalar(2) * (avg(I.child(0)) - avg(I.child(1)));
}

/// <u, h^nu_K> (unweighted) for the nu-weighted Haar function, given the
/// averages of nu and of u.  h^nu_K is positive on K- and negative on K+.
template <typename Scalar>
Scalar weighted_haar_pairing(const Pyramid<Scalar>& nu, const Pyramid<Scalar>& u, const CellIndex& K) {
  using std::sqrt;
  const Scalar half = Scalar(K.measure()) / Scalar(2);
  const Scalar m_minus = nu(K.child(0)) * half, m_plus = nu(K.child(1)) * half;
  const Scalar int_minus = u(K.child(0)) * half, int_plus = u(K.child(1)) * half;
  return (sqrt(m_plus / m_minus) * int_minus - sqrt(m_minus / m_plus) * int_plus) / sqrt(m_minus + m_plus);
}

template <typename Scalar>
DisbalancedPair<Scalar> disbalanced(const Pyramid<Scalar>& w, const CellIndex& K) {
  using std::sqrt;
  const Scalar a = w(K.child(0)), b = w(K.child(1)), m = w(K);
  return {sqrt(a * b / m), haar_coeff(w, K) / m};
}

template <typename Scalar>
DisbalancedPair<Scalar> disbalanced(const Weight<Scalar>& w, const CellIndex& K) {
  detail::require_splittable(K, w.R());
  return disbalanced(w.averages(), K);
}

/// h_I = (1_{I-} - 1_{I+}) / sqrt|I|
template <typename Scalar = double>
StepFunction<Scalar> haar(const CellIndex& I, int R) {
  using std::sqrt;
  detail::require_splittable(I, R);
  StepFunction<Scalar> f(1, R);
  const Scalar s = Scalar(1) / sqrt(Scalar(I.measure()));
  paint(f, I.child(0), s);
  paint(f, I.child(1), -s);
  return f;
}

/// h^1_I = 1_I / |I|
template <typename Scalar = double>
StepFunction<Scalar> avg_fn(const CellIndex& I, int R) {
  detail::require_1d(I);
  StepFunction<Scalar> f(1, R);
  paint(f, I, Scalar(1) / Scalar(I.measure()));
  return f;
}

template <typename Scalar>
Scalar haar_coeff(const StepFunction<Scalar>& f, const CellIndex& I) {
  using std::sqrt;
  detail::require_splittable(I, f.R);
  return sqrt(Scalar(I.measure())) / Scalar(2) * (average(f, I.child(0)) - average(f, I.child(1)));
}

/// Global mean and all Haar coefficients on levels 0..M-1.
template <typename Scalar>
Coefficients<Scalar> analyze(const StepFunction<Scalar>& f, int M) {
  if (f.d != 1) throw std::invalid_argument("analyze: d=1 only");
  if (M > f.R) throw resolution_error("analyze: depth exceeds resolution");
  const Pyramid<Scalar> avg(f);
  Coefficients<Scalar> out(1, M);
  out.mean = avg(CellIndex::root(1));
  for (std::int64_t i = 0; i < out.size(); ++i) out.values[i] = haar_coeff(avg, unflatten(1, i).cell);
  return out;
}

/// <f>_{[0,1)} 1 + sum_I f-hat_I h_I at resolution R.
template <typename Scalar>
StepFunction<Scalar> reconstruct(const Coefficients<Scalar>& coeffs, int R) {
  using std::sqrt;
  if (coeffs.d != 1) throw std::invalid_argument("reconstruct: d=1 only");
  if (coeffs.values.size() != index_count(1, coeffs.M)) throw std::invalid_argument("reconstruct: missing indices");
  if (coeffs.M > R) throw resolution_error("reconstruct: depth exceeds resolution");
  auto f = StepFunction<Scalar>::constant(1, R, coeffs.mean);
  for (std::int64_t i = 0; i < coeffs.size(); ++i) {
    const Scalar c = coeffs.values[i];
    if (c == Scalar(0)) continue;
    const CellIndex I = unflatten(1, i).cell;
    const Scalar s = c / sqrt(Scalar(I.measure()));
    paint(f, I.child(0), s);
    paint(f, I.child(1), -s);
  }
  return f;
}

/// L2(w)-normalized, w-mean-zero Haar function on K, oriented so that
/// h_K = C_K(w) h^w_K + D_K(w) h^1_K holds with C_K(w) >= 0.
template <typename Scalar>
StepFunction<Scalar> weighted_haar(const Weight<Scalar>& w, const CellIndex& K) {
  using std::sqrt;
  detail::require_splittable(K, w.R());
  const Scalar m_minus = w.mass(K.child(0)), m_plus = w.mass(K.child(1));
  const Scalar norm = sqrt(m_minus + m_plus);
  StepFunction<Scalar> f(1, w.R());
  paint(f, K.child(0), sqrt(m_plus / m_minus) / norm);
  paint(f, K.child(1), -sqrt(m_minus / m_plus) / norm);
  return f;
}

}  // namespace dyadic::haar1d
