#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "dyadic/coefficients.hpp"
#include "dyadic/forms.hpp"
#include "dyadic/grid.hpp"
#include "dyadic/haar1d.hpp"
#include "dyadic/weight.hpp"

namespace dyadic {

/// Values of the six bilinear terms of the composed-operator expansion, their
/// sub-splits and the directly computed bilinear form.  Term names follow the
/// expansion: A = product coefficient, B = average-of-symbol coefficient,
/// C = symbol-coefficient part; suffix 1 = weighted Haar part, 2 = average part.
template <typename Scalar>
struct TermBreakdown {
  Scalar A1{}, B1{}, C1{}, A2{}, B2{}, C2{};
  Scalar A11{}, A12{}, A21{}, A22{}, C21{}, C22{};
  Scalar lhs{};

  static constexpr std::array<std::string_view, 12> kNames = {"A1",  "B1",  "C1",  "A2",  "B2",  "C2",
                                                             "A11", "A12", "A21", "A22", "C21", "C22"};

  Scalar signed_sum() const { return A1 - B1 - C1 + A2 - B2 - C2; }

  std::array<Scalar, 12> terms() const { return {A1, B1, C1, A2, B2, C2, A11, A12, A21, A22, C21, C22}; }

  /// |signed_sum - lhs| relative to the largest magnitude among lhs and the
  /// six summands.
  Scalar residual() const {
    using std::abs;
    const Scalar scale = std::max({abs(lhs), abs(A1), abs(B1), abs(C1), abs(A2), abs(B2), abs(C2)});
    return scale == Scalar(0) ? Scalar(0) : abs(signed_sum() - lhs) / scale;
  }

  /// Worst mismatch of A11+A12=A1, A21+A22=A2, C21+C22=C2, relative to the
  /// largest of lhs and the twelve terms.
  Scalar split_residual() const {
    using std::abs;
    Scalar scale = abs(lhs);
    for (Scalar v : terms()) scale = std::max(scale, abs(v));
    if (scale == Scalar(0)) return Scalar(0);
    return std::max({abs(A1 - A11 - A12), abs(A2 - A21 - A22), abs(C2 - C21 - C22)}) / scale;
  }
};

/// Haar coefficients of f on levels 0..M-1 as a paraproduct symbol.
template <typename Scalar>
Coefficients<Scalar> haar_symbol(const StepFunction<Scalar>& f, int M) {
  return haar1d::analyze(f, M);
}

/// Dyadic averages <f>_I on levels 0..M-1 as a paraproduct symbol.
template <typename Scalar>
Coefficients<Scalar> average_symbol(const StepFunction<Scalar>& f, int M) {
  const Pyramid<Scalar> avg(f);
  Coefficients<Scalar> out(f.d, M);
  for (std::int64_t i = 0; i < out.size(); ++i) out.values[i] = avg(unflatten(f.d, i).cell);
  return out;
}

/// P^{(alpha,beta)}_b f = sum_I b_I <f, h^beta_I> h^alpha_I over levels 0..M-1,
/// with h^0 the Haar function and h^1 the normalized indicator.
template <typename Scalar>
StepFunction<Scalar> paraproduct(int alpha, int beta, const Coefficients<Scalar>& b, const StepFunction<Scalar>& f) {
  using std::sqrt;
  if ((alpha != 0 && alpha != 1) || (beta != 0 && beta != 1)) throw std::invalid_argument("paraproduct kind must be in {0,1}^2");
  if (f.d != 1 || b.d != 1) throw std::invalid_argument("paraproduct: d=1 only (use wilson::paraproduct_d)");
  require_depth(b, 1, b.M);
  if (b.M > f.R - (alpha == 0 || beta == 0 ? 1 : 0)) throw resolution_error("paraproduct: symbol depth exceeds resolution");
  const Pyramid<Scalar> avg(f);
  StepFunction<Scalar> out(1, f.R);
  for (std::int64_t i = 0; i < b.size(); ++i) {
    const CellIndex I = unflatten(1, i).cell;
    const Scalar test = beta == 0 ? haar1d::haar_coeff(avg, I) : avg(I);
    const Scalar c = b.values[i] * test;
    if (c == Scalar(0)) continue;
    if (alpha == 0) {
      const Scalar s = c / sqrt(Scalar(I.measure()));
      paint(out, I.child(0), s);
      paint(out, I.child(1), -s);
    } else {
      paint(out, I, c / Scalar(I.measure()));
    }
  }
  return out;
}

/// S f = sum_{level(I) < M} f-hat_I h_{I-}; the mean is annihilated.
template <typename Scalar>
StepFunction<Scalar> haar_shift(const StepFunction<Scalar>& f, int M) {
  using std::sqrt;
  if (f.d != 1) throw std::invalid_argument("haar_shift: d=1 only");
  if (f.R < M + 1) throw resolution_error("haar_shift needs resolution >= M+1");
  const Pyramid<Scalar> avg(f);
  StepFunction<Scalar> out(1, f.R);
  for (std::int64_t i = 0; i < index_count(1, M); ++i) {
    const CellIndex I = unflatten(1, i).cell;
    const Scalar c = haar1d::haar_coeff(avg, I);
    if (c == Scalar(0)) continue;
    const CellIndex left = I.child(0);
    const Scalar s = c / sqrt(Scalar(left.measure()));
    paint(out, left.child(0), s);
    paint(out, left.child(1), -s);
  }
  return out;
}

namespace detail {

template <typename Scalar>
void require_exact_input(const StepFunction<Scalar>& f, int M, const char* what) {
  if (!is_at_resolution(f, M))
    throw resolution_error(std::string(what) + " must be constant at resolution <= M for the exact identity");
}

template <typename Scalar>
void require_shift_grid(const Weight<Scalar>& w, const StepFunction<Scalar>& f, int M) {
  if (w.d() != 1 || f.d != 1) throw std::invalid_argument("shift operators are one-dimensional");
  if (f.R != w.R()) throw grid_mismatch("function and weight resolutions differ");
  if (w.R() < M + 1) throw resolution_error("shift operators need R >= M+1");
}

}  // namespace detail

/// The h_{K-} coefficient of S P^{(1,0)}_{(w^{-1/2})^} phi:
///   (w^{-1/2} phi)^_K - <w^{-1/2}>_K phi^_K - <phi>_K (w^{-1/2})^_K.
template <typename Scalar>
Coefficients<Scalar> composed_coeffs(const Weight<Scalar>& w, const StepFunction<Scalar>& phi, int M) {
  detail::require_shift_grid(w, phi, M);
  detail::require_exact_input(phi, M, "phi");
  const Pyramid<Scalar> pw_mh(w.inv_sqrt()), pphi(phi), pprod(w.inv_sqrt() * phi);
  Coefficients<Scalar> out(1, M);
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const CellIndex K = unflatten(1, i).cell;
    out.values[i] = haar1d::haar_coeff(pprod, K) - pw_mh(K) * haar1d::haar_coeff(pphi, K) -
                    pphi(K) * haar1d::haar_coeff(pw_mh, K);
  }
  return out;
}

template <typename Scalar>
Scalar composed_coeff(const Weight<Scalar>& w, const StepFunction<Scalar>& phi, const CellIndex& K, int M) {
  if (K.level >= M) throw resolution_error("composed_coeff: level(K) must be < M");
  return composed_coeffs(w, phi, M).at(K);
}

/// S P^{(1,0)}_{(w^{-1/2})^} phi by direct operator application.
template <typename Scalar>
StepFunction<Scalar> shift_paraproduct(const Weight<Scalar>& w, const StepFunction<Scalar>& phi, int M) {
  detail::require_shift_grid(w, phi, M);
  return haar_shift(paraproduct(1, 0, haar_symbol(w.inv_sqrt(), M), phi), M);
}

/// w^{1/2} S P^{(1,0)}_{(w^{-1/2})^} phi
template <typename Scalar>
StepFunction<Scalar> target_operator(const Weight<Scalar>& w, const StepFunction<Scalar>& phi, int M) {
  return w.sqrt() * shift_paraproduct(w, phi, M);
}

/// Term-by-term evaluation of the six-term expansion of
/// <S P^{(1,0)}_{(w^{-1/2})^} phi, g>_w and its sub-splits.
template <typename Scalar>
TermBreakdown<Scalar> six_terms(const Weight<Scalar>& w, const StepFunction<Scalar>& phi, const StepFunction<Scalar>& g,
                                int M) {
  detail::require_shift_grid(w, phi, M);
  require_same_lattice(phi, g);
  detail::require_exact_input(phi, M, "phi");
  detail::require_exact_input(g, M, "g");

  const auto& pw = w.averages();
  const auto& pwinv = w.inverse_averages();
  const Pyramid<Scalar> pw_mh(w.inv_sqrt()), pphi(phi), pprod(w.inv_sqrt() * phi), pgw(g * w.values());

  TermBreakdown<Scalar> t;
  for (std::int64_t i = 0; i < index_count(1, M); ++i) {
    const CellIndex K = unflatten(1, i).cell;
    const CellIndex Km = K.child(0);

    const Scalar a = haar1d::haar_coeff(pprod, K);
    const Scalar b = pw_mh(K) * haar1d::haar_coeff(pphi, K);
    const Scalar c = pphi(K) * haar1d::haar_coeff(pw_mh, K);

    const auto shifted = haar1d::disbalanced(pw, Km);
    const Scalar g_haar = haar1d::weighted_haar_pairing(pw, pgw, Km);  // <h^w_{K-}, g>_w
    const Scalar g_avg = pgw(Km);                                      // <h^1_{K-}, g>_w

    t.A1 += a * shifted.C * g_haar;
    t.B1 += b * shifted.C * g_haar;
    t.C1 += c * shifted.C * g_haar;
    t.A2 += a * shifted.D * g_avg;
    t.B2 += b * shifted.D * g_avg;
    t.C2 += c * shifted.D * g_avg;

    const auto inv = haar1d::disbalanced(pwinv, K);
    const Scalar prod_haar = haar1d::weighted_haar_pairing(pwinv, pprod, K);  // <w^{1/2} phi, h^{w^-1}_K>_{w^-1}
    const Scalar prod_avg = pprod(K);                                          // <phi w^{-1/2}>_K
    t.A11 += inv.C * prod_haar * shifted.C * g_haar;
    t.A12 += inv.D * prod_avg * shifted.C * g_haar;
    t.A21 += inv.C * prod_haar * shifted.D * g_avg;
    t.A22 += inv.D * prod_avg * shifted.D * g_avg;

    const Scalar sym_haar = haar1d::weighted_haar_pairing(pwinv, pw_mh, K);  // <w^{1/2}, h^{w^-1}_K>_{w^-1}
    t.C21 += inv.C * sym_haar * pphi(K) * shifted.D * g_avg;
    t.C22 += inv.D * pw_mh(K) * pphi(K) * shifted.D * g_avg;
  }
  t.lhs = inner_w(shift_paraproduct(w, phi, M), g, w.values());
  return t;
}

/// The twelve terms A1..C22 as explicit bilinear forms in (phi, g), built
/// from the weighted Haar functions themselves.  Order follows
/// TermBreakdown::kNames.  With `only` >= 0 the other eleven stay empty.
template <typename Scalar>
std::array<BilinearForm<Scalar>, 12> shift_term_forms(const Weight<Scalar>& w, int M, int only = -1) {
  if (w.d() != 1) throw std::invalid_argument("shift_term_forms: d=1 only");
  if (w.R() < M + 1) throw resolution_error("shift_term_forms needs R >= M+1");
  const int R = w.R();
  const auto n = index_count(1, M);
  std::array<BilinearForm<Scalar>, 12> forms;
  for (int k = 0; k < 12; ++k)
    if (only < 0 || only == k) forms[k] = BilinearForm<Scalar>(1, R, n);
  auto set = [&](int k, Eigen::Index i, Scalar s, const StepFunction<Scalar>& p, const StepFunction<Scalar>& q) {
    if (only < 0 || only == k) forms[k].set(i, s, p, q);
  };

  const Weight<Scalar> winv = w.reciprocal();
  const auto& wv = w.values();
  const auto& wmh = w.inv_sqrt();
  const Pyramid<Scalar> pw_mh(wmh);
  for (std::int64_t i = 0; i < n; ++i) {
    const CellIndex K = unflatten(1, i).cell;
    const CellIndex Km = K.child(0);
    const auto shifted = haar1d::disbalanced(w, Km);
    const auto inv = haar1d::disbalanced(winv, K);

    const auto hK = haar1d::haar<Scalar>(K, R);
    const auto h1K = haar1d::avg_fn<Scalar>(K, R);
    const auto hinvK = haar1d::weighted_haar(winv, K);
    const auto q_haar = wv * haar1d::weighted_haar(w, Km);
    const auto q_avg = wv * haar1d::avg_fn<Scalar>(Km, R);
    const auto p_prod = wmh * hK;
    const auto p_prod_inv = wmh * hinvK;
    const auto p_prod_avg = wmh * h1K;

    const Scalar mh_avg = pw_mh(K);
    const Scalar mh_hat = inner(wmh, hK);
    const Scalar mh_inv_haar = inner(wmh, hinvK);

    set(0, i, shifted.C, p_prod, q_haar);
    set(1, i, mh_avg * shifted.C, hK, q_haar);
    set(2, i, mh_hat * shifted.C, h1K, q_haar);
    set(3, i, shifted.D, p_prod, q_avg);
    set(4, i, mh_avg * shifted.D, hK, q_avg);
    set(5, i, mh_hat * shifted.D, h1K, q_avg);
    set(6, i, inv.C * shifted.C, p_prod_inv, q_haar);
    set(7, i, inv.D * shifted.C, p_prod_avg, q_haar);
    set(8, i, inv.C * shifted.D, p_prod_inv, q_avg);
    set(9, i, inv.D * shifted.D, p_prod_avg, q_avg);
    set(10, i, inv.C * mh_inv_haar * shifted.D, h1K, q_avg);
    set(11, i, inv.D * mh_avg * shifted.D, h1K, q_avg);
  }
  return forms;
}

}  // namespace dyadic
