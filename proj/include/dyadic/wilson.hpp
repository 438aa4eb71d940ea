#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dyadic/coefficients.hpp"
#include "dyadic/forms.hpp"
#include "dyadic/grid.hpp"
#include "dyadic/shiftops.hpp"
#include "dyadic/weight.hpp"

namespace dyadic::wilson {

/// A union of consecutive children [first, first+count) of a cube.  Every
/// set E^1, E^2, E of the pair system has this shape.
struct Region {
  CellIndex cube;
  int first = 0;
  int count = 1;

  double measure() const { return count * cube.measure() / double(1 << cube.d); }

  std::vector<CellIndex> cells() const {
    std::vector<CellIndex> out;
    for (int c = first; c < first + count; ++c) out.push_back(cube.child(c));
    return out;
  }

  friend bool operator==(const Region&, const Region&) = default;
};

/// inner is a subset of outer.
inline bool contains(const Region& outer, const Region& inner) {
  if (inner.cube == outer.cube) return inner.first >= outer.first && inner.first + inner.count <= outer.first + outer.count;
  if (inner.cube.level > outer.cube.level && outer.cube.contains(inner.cube)) {
    const int c = outer.cube.child_containing(inner.cube);
    return c >= outer.first && c < outer.first + outer.count;
  }
  // a single child of a coarser cube is the whole of that child
  if (inner.count == 1 && outer.first == 0 && outer.count == (1 << outer.cube.d))
    return inner.cube.child(inner.first) == outer.cube;
  return false;
}

inline bool disjoint(const Region& a, const Region& b) {
  if (a.cube == b.cube) return a.first + a.count <= b.first || b.first + b.count <= a.first;
  if (a.cube.contains(b.cube) && a.cube.level < b.cube.level) {
    const int c = a.cube.child_containing(b.cube);
    return c < a.first || c >= a.first + a.count;
  }
  if (b.cube.contains(a.cube) && b.cube.level < a.cube.level) return disjoint(b, a);
  return true;
}

struct WilsonPair {
  CellIndex cube;
  int alpha = 0;
  Region E1;
  Region E2;

  Region E() const { return {cube, E1.first, E1.count + E2.count}; }
};

inline WilsonPair make_pair(const CellIndex& I, int alpha) {
  if (alpha < 0 || alpha >= pairs_per_cell(I.d)) throw std::out_of_range("alpha outside Gamma_d");
  const PairNode node = pair_node(I.d, alpha);
  return {I, alpha, Region{I, node.first, node.half}, Region{I, node.first2(), node.half}};
}

inline WilsonPair make_pair(const WilsonIndex& w) { return make_pair(w.cell, w.alpha); }

/// The 2^d - 1 pairs of I from the coordinate-bit splitting tree, alpha in
/// breadth-first order.
inline std::vector<WilsonPair> build_pairs(const CellIndex& I) {
  std::vector<WilsonPair> out;
  out.reserve(pairs_per_cell(I.d));
  for (int alpha = 0; alpha < pairs_per_cell(I.d); ++alpha) out.push_back(make_pair(I, alpha));
  return out;
}

template <typename Scalar>
Scalar region_average(const Pyramid<Scalar>& p, const Region& r) {
  return p.average_children(r.cube, r.first, r.count);
}

/// f-hat_{I,alpha} = <f, h^alpha_I> = sqrt|E|/2 (<f>_{E2} - <f>_{E1}).
template <typename Scalar>
Scalar coeff(const Pyramid<Scalar>& f, const WilsonPair& p) {
  using std::sqrt;
  return sqrt(Scalar(p.E().measure())) / Scalar(2) * (region_average(f, p.E2) - region_average(f, p.E1));
}

/// <u, h^{nu,alpha}_I> (unweighted) from averages of nu and u.
template <typename Scalar>
Scalar weighted_pairing(const Pyramid<Scalar>& nu, const Pyramid<Scalar>& u, const WilsonPair& p) {
  using std::sqrt;
  const Scalar m1 = region_average(nu, p.E1) * Scalar(p.E1.measure());
  const Scalar m2 = region_average(nu, p.E2) * Scalar(p.E2.measure());
  const Scalar i1 = region_average(u, p.E1) * Scalar(p.E1.measure());
  const Scalar i2 = region_average(u, p.E2) * Scalar(p.E2.measure());
  return (sqrt(m1 / m2) * i2 - sqrt(m2 / m1) * i1) / sqrt(m1 + m2);
}

template <typename Scalar>
struct Disbalanced {
  Scalar C = Scalar(1);
  Scalar D = Scalar(0);
};

template <typename Scalar>
Disbalanced<Scalar> disbalanced_d(const Pyramid<Scalar>& w, const WilsonPair& p) {
  using std::sqrt;
  const Scalar a1 = region_average(w, p.E1), a2 = region_average(w, p.E2), m = region_average(w, p.E());
  return {sqrt(a1 * a2 / m), coeff(w, p) / m};
}

/// (C_J(w,beta), D_J(w,beta)); h^beta_J = C h^{w,beta}_J + D h^1_{E_{beta,J}}.
template <typename Scalar>
Disbalanced<Scalar> disbalanced_d(const Weight<Scalar>& w, const CellIndex& J, int beta) {
  if (J.level >= w.R()) throw resolution_error("disbalanced_d: cube too fine");
  return disbalanced_d(w.averages(), make_pair(J, beta));
}

/// h^{w,alpha}_I; positive on E2 and negative on E1.
template <typename Scalar>
StepFunction<Scalar> wilson_haar(const Weight<Scalar>& w, const CellIndex& I, int alpha) {
  using std::sqrt;
  if (I.level >= w.R()) throw resolution_error("wilson_haar: cube too fine");
  const WilsonPair p = make_pair(I, alpha);
  const Scalar m1 = region_average(w.averages(), p.E1) * Scalar(p.E1.measure());
  const Scalar m2 = region_average(w.averages(), p.E2) * Scalar(p.E2.measure());
  const Scalar norm = sqrt(m1 + m2);
  StepFunction<Scalar> f(I.d, w.R());
  for (const auto& c : p.E2.cells()) paint(f, c, sqrt(m1 / m2) / norm);
  for (const auto& c : p.E1.cells()) paint(f, c, -sqrt(m2 / m1) / norm);
  return f;
}

/// Unweighted h^alpha_I = (1_{E2} - 1_{E1}) / sqrt|E|.
template <typename Scalar = double>
StepFunction<Scalar> wilson_haar(const CellIndex& I, int alpha, int R) {
  using std::sqrt;
  if (I.level >= R) throw resolution_error("wilson_haar: cube too fine");
  const WilsonPair p = make_pair(I, alpha);
  const Scalar s = Scalar(1) / sqrt(Scalar(p.E().measure()));
  StepFunction<Scalar> f(I.d, R);
  for (const auto& c : p.E2.cells()) paint(f, c, s);
  for (const auto& c : p.E1.cells()) paint(f, c, -s);
  return f;
}

/// h^1_E = 1_E / |E|
template <typename Scalar = double>
StepFunction<Scalar> region_average_fn(const Region& r, int R) {
  StepFunction<Scalar> f(r.cube.d, R);
  const Scalar s = Scalar(1) / Scalar(r.measure());
  for (const auto& c : r.cells()) paint(f, c, s);
  return f;
}

/// Mean and all unweighted Wilson coefficients on levels 0..M-1.
template <typename Scalar>
Coefficients<Scalar> analyze(const StepFunction<Scalar>& f, int M) {
  if (M > f.R) throw resolution_error("wilson::analyze: depth exceeds resolution");
  const Pyramid<Scalar> avg(f);
  Coefficients<Scalar> out(f.d, M);
  out.mean = avg(CellIndex::root(f.d));
  for (std::int64_t i = 0; i < out.size(); ++i) out.values[i] = coeff(avg, make_pair(unflatten(f.d, i)));
  return out;
}

template <typename Scalar>
StepFunction<Scalar> reconstruct(const Coefficients<Scalar>& c, int R) {
  using std::sqrt;
  require_depth(c, c.d, c.M);
  if (c.M > R) throw resolution_error("wilson::reconstruct: depth exceeds resolution");
  auto f = StepFunction<Scalar>::constant(c.d, R, c.mean);
  for (std::int64_t i = 0; i < c.size(); ++i) {
    if (c.values[i] == Scalar(0)) continue;
    const WilsonPair p = make_pair(unflatten(c.d, i));
    const Scalar s = c.values[i] / sqrt(Scalar(p.E().measure()));
    for (const auto& cell : p.E2.cells()) paint(f, cell, s);
    for (const auto& cell : p.E1.cells()) paint(f, cell, -s);
  }
  return f;
}

/// T_sigma f = sum sigma_{I,alpha} f-hat_{I,alpha} h^alpha_I over levels < M.
template <typename Scalar>
StepFunction<Scalar> multiplier(const SignPattern& sigma, const StepFunction<Scalar>& f) {
  sigma.validate();
  if (sigma.d != f.d) throw grid_mismatch("sign pattern and function dimensions differ");
  auto c = analyze(f, sigma.M);
  c.mean = Scalar(0);
  for (std::int64_t i = 0; i < c.size(); ++i) c.values[i] *= Scalar(sigma.signs[i]);
  return reconstruct(c, f.R);
}

/// Wilson-indexed paraproducts:
///   (0,0): sum a f-hat h^alpha_I,  (0,1): sum a <f>_E h^alpha_I,
///   (1,0): sum a f-hat h^1_E.
template <typename Scalar>
StepFunction<Scalar> paraproduct_d(int alpha, int beta, const Coefficients<Scalar>& a, const StepFunction<Scalar>& f) {
  using std::sqrt;
  if (!((alpha == 0 && beta == 0) || (alpha == 0 && beta == 1) || (alpha == 1 && beta == 0)))
    throw std::invalid_argument("paraproduct_d kind must be (0,0), (0,1) or (1,0)");
  require_depth(a, f.d, a.M);
  if (a.M > f.R) throw resolution_error("paraproduct_d: symbol depth exceeds resolution");
  const Pyramid<Scalar> avg(f);
  StepFunction<Scalar> out(f.d, f.R);
  for (std::int64_t i = 0; i < a.size(); ++i) {
    if (a.values[i] == Scalar(0)) continue;
    const WilsonPair p = make_pair(unflatten(f.d, i));
    const Scalar test = beta == 0 ? coeff(avg, p) : region_average(avg, p.E());
    const Scalar c = a.values[i] * test;
    if (alpha == 0) {
      const Scalar s = c / sqrt(Scalar(p.E().measure()));
      for (const auto& cell : p.E2.cells()) paint(out, cell, s);
      for (const auto& cell : p.E1.cells()) paint(out, cell, -s);
    } else {
      const Scalar s = c / Scalar(p.E().measure());
      for (const auto& cell : p.E().cells()) paint(out, cell, s);
    }
  }
  return out;
}

/// Averages <g>_{E_{alpha,I}} as a Wilson symbol.
template <typename Scalar>
Coefficients<Scalar> region_average_symbol(const StepFunction<Scalar>& g, int M) {
  const Pyramid<Scalar> avg(g);
  Coefficients<Scalar> out(g.d, M);
  for (std::int64_t i = 0; i < out.size(); ++i) out.values[i] = region_average(avg, make_pair(unflatten(g.d, i)).E());
  return out;
}

/// <h^1_{E_a}, h^b> from set overlaps: +-1/sqrt|E_b| when E_a sits inside
/// E2_b or E1_b, zero otherwise.
inline double average_haar_pairing(const WilsonPair& a, const WilsonPair& b) {
  const Region Ea = a.E();
  if (contains(b.E2, Ea)) return 1.0 / std::sqrt(b.E().measure());
  if (contains(b.E1, Ea)) return -1.0 / std::sqrt(b.E().measure());
  return 0.0;
}

/// Right-hand side of the Wilson product formula for (fg)^_{J,beta}.
template <typename Scalar>
Scalar product_formula_rhs(const StepFunction<Scalar>& f, const StepFunction<Scalar>& g, const CellIndex& J, int beta,
                           int M) {
  require_same_lattice(f, g);
  const Pyramid<Scalar> pf(f), pg(g);
  const WilsonPair target = make_pair(J, beta);
  Scalar acc(0);
  for (std::int64_t i = 0; i < index_count(f.d, M); ++i) {
    const WilsonPair p = make_pair(unflatten(f.d, i));
    const double pairing = average_haar_pairing(p, target);
    if (pairing == 0.0) continue;
    acc += coeff(pf, p) * coeff(pg, p) * Scalar(pairing);
  }
  const Region E = target.E();
  return acc + coeff(pf, target) * region_average(pg, E) + coeff(pg, target) * region_average(pf, E);
}

/// T_sigma P^{(1,0)}_{(w^{-1/2})^} phi by direct operator application.
template <typename Scalar>
StepFunction<Scalar> multiplier_paraproduct(const Weight<Scalar>& w, const SignPattern& sigma,
                                            const StepFunction<Scalar>& phi) {
  if (w.d() != phi.d || w.R() != phi.R) throw grid_mismatch("weight and phi grids differ");
  const int M = sigma.M;
  return multiplier(sigma, paraproduct_d(1, 0, analyze(w.inv_sqrt(), M), phi));
}

/// w^{1/2} T_sigma P^{(1,0)}_{(w^{-1/2})^} phi
template <typename Scalar>
StepFunction<Scalar> target_operator(const Weight<Scalar>& w, const SignPattern& sigma, const StepFunction<Scalar>& phi) {
  return w.sqrt() * multiplier_paraproduct(w, sigma, phi);
}

/// Coefficient of h^beta_J in P^{(1,0)}_{(w^{-1/2})^} phi:
///   (w^{-1/2} phi)^ - (w^{-1/2})^ <phi>_E - phi^ <w^{-1/2}>_E.
template <typename Scalar>
Coefficients<Scalar> composed_coeffs(const Weight<Scalar>& w, const StepFunction<Scalar>& phi, int M) {
  if (!is_at_resolution(phi, M)) throw resolution_error("phi must be constant at resolution <= M");
  const Pyramid<Scalar> pmh(w.inv_sqrt()), pphi(phi), pprod(w.inv_sqrt() * phi);
  Coefficients<Scalar> out(phi.d, M);
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const WilsonPair p = make_pair(unflatten(phi.d, i));
    const Region E = p.E();
    out.values[i] = coeff(pprod, p) - coeff(pmh, p) * region_average(pphi, E) - coeff(pphi, p) * region_average(pmh, E);
  }
  return out;
}

/// Six-term expansion of <T_sigma P^{(1,0)}_{(w^{-1/2})^} phi, g>_w with every
/// term carrying its sigma factor.
template <typename Scalar>
TermBreakdown<Scalar> six_terms_multiplier(const Weight<Scalar>& w, const SignPattern& sigma,
                                           const StepFunction<Scalar>& phi, const StepFunction<Scalar>& g) {
  sigma.validate();
  const int M = sigma.M;
  if (w.d() != phi.d || w.R() != phi.R || sigma.d != phi.d) throw grid_mismatch("weight, sign pattern and phi disagree");
  require_same_lattice(phi, g);
  if (M >= w.R()) throw resolution_error("six_terms_multiplier needs R >= M+1");
  if (!is_at_resolution(phi, M) || !is_at_resolution(g, M))
    throw resolution_error("phi and g must be constant at resolution <= M");

  const auto& pw = w.averages();
  const auto& pwinv = w.inverse_averages();
  const Pyramid<Scalar> pmh(w.inv_sqrt()), pphi(phi), pprod(w.inv_sqrt() * phi), pgw(g * w.values());

  TermBreakdown<Scalar> t;
  for (std::int64_t i = 0; i < index_count(phi.d, M); ++i) {
    const WilsonPair p = make_pair(unflatten(phi.d, i));
    const Region E = p.E();
    const Scalar s = Scalar(sigma.signs[i]);

    const Scalar a = coeff(pprod, p);
    const Scalar b = coeff(pphi, p) * region_average(pmh, E);
    const Scalar c = coeff(pmh, p) * region_average(pphi, E);

    const auto dw = disbalanced_d(pw, p);
    const Scalar g_haar = weighted_pairing(pw, pgw, p);  // <g, h^{w,beta}_J>_w
    const Scalar g_avg = region_average(pgw, E);         // <w g>_E

    t.A1 += s * a * dw.C * g_haar;
    t.B1 += s * b * dw.C * g_haar;
    t.C1 += s * c * dw.C * g_haar;
    t.A2 += s * a * dw.D * g_avg;
    t.B2 += s * b * dw.D * g_avg;
    t.C2 += s * c * dw.D * g_avg;

    const auto dinv = disbalanced_d(pwinv, p);
    const Scalar prod_haar = weighted_pairing(pwinv, pprod, p);  // <w^{1/2} phi, h^{w^-1,beta}_J>_{w^-1}
    const Scalar prod_avg = region_average(pprod, E);            // <w^{-1/2} phi>_E
    t.A11 += s * dinv.C * prod_haar * dw.C * g_haar;
    t.A12 += s * dinv.D * prod_avg * dw.C * g_haar;
    t.A21 += s * dinv.C * prod_haar * dw.D * g_avg;
    t.A22 += s * dinv.D * prod_avg * dw.D * g_avg;

    const Scalar sym_haar = weighted_pairing(pwinv, pmh, p);  // <w^{1/2}, h^{w^-1,beta}_J>_{w^-1}
    t.C21 += s * dinv.C * sym_haar * region_average(pphi, E) * dw.D * g_avg;
    t.C22 += s * dinv.D * region_average(pmh, E) * region_average(pphi, E) * dw.D * g_avg;
  }
  t.lhs = inner_w(multiplier_paraproduct(w, sigma, phi), g, w.values());
  return t;
}

/// The twelve multiplier terms as explicit bilinear forms (sigma included).
/// With `only` >= 0 the other eleven stay empty.
template <typename Scalar>
std::array<BilinearForm<Scalar>, 12> multiplier_term_forms(const Weight<Scalar>& w, const SignPattern& sigma,
                                                          int only = -1) {
  sigma.validate();
  const int M = sigma.M, R = w.R(), d = w.d();
  if (M >= R) throw resolution_error("multiplier_term_forms needs R >= M+1");
  const auto n = index_count(d, M);
  std::array<BilinearForm<Scalar>, 12> forms;
  for (int k = 0; k < 12; ++k)
    if (only < 0 || only == k) forms[k] = BilinearForm<Scalar>(d, R, n);
  auto set = [&](int k, Eigen::Index i, Scalar s, const StepFunction<Scalar>& p, const StepFunction<Scalar>& q) {
    if (only < 0 || only == k) forms[k].set(i, s, p, q);
  };

  const Weight<Scalar> winv = w.reciprocal();
  const auto& wv = w.values();
  const auto& wmh = w.inv_sqrt();
  const Pyramid<Scalar> pmh(wmh);
  for (std::int64_t i = 0; i < n; ++i) {
    const WilsonIndex idx = unflatten(d, i);
    const WilsonPair p = make_pair(idx);
    const Scalar s = Scalar(sigma.signs[i]);
    const auto dw = disbalanced_d(w, idx.cell, idx.alpha);
    const auto dinv = disbalanced_d(winv, idx.cell, idx.alpha);

    const auto h = wilson_haar<Scalar>(idx.cell, idx.alpha, R);
    const auto h1E = region_average_fn<Scalar>(p.E(), R);
    const auto hinv = wilson_haar(winv, idx.cell, idx.alpha);
    const auto q_haar = wv * wilson_haar(w, idx.cell, idx.alpha);
    const auto q_avg = wv * h1E;
    const auto p_prod = wmh * h;
    const auto p_prod_inv = wmh * hinv;
    const auto p_prod_avg = wmh * h1E;

    const Scalar mh_avg = region_average(pmh, p.E());
    const Scalar mh_hat = inner(wmh, h);
    const Scalar mh_inv_haar = inner(wmh, hinv);

    set(0, i, s * dw.C, p_prod, q_haar);
    set(1, i, s * mh_avg * dw.C, h, q_haar);
    set(2, i, s * mh_hat * dw.C, h1E, q_haar);
    set(3, i, s * dw.D, p_prod, q_avg);
    set(4, i, s * mh_avg * dw.D, h, q_avg);
    set(5, i, s * mh_hat * dw.D, h1E, q_avg);
    set(6, i, s * dinv.C * dw.C, p_prod_inv, q_haar);
    set(7, i, s * dinv.D * dw.C, p_prod_avg, q_haar);
    set(8, i, s * dinv.C * dw.D, p_prod_inv, q_avg);
    set(9, i, s * dinv.D * dw.D, p_prod_avg, q_avg);
    set(10, i, s * dinv.C * mh_inv_haar * dw.D, h1E, q_avg);
    set(11, i, s * dinv.D * mh_avg * dw.D, h1E, q_avg);
  }
  return forms;
}

/// Seeded uniform +-1 signs.
inline SignPattern random_signs(int d, int M, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  SignPattern s(d, M);
  for (Eigen::Index i = 0; i < s.signs.size(); ++i) s.signs[i] = coin(rng) ? 1 : -1;
  return s;
}

}  // namespace dyadic::wilson
