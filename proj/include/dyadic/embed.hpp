#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "dyadic/coefficients.hpp"
#include "dyadic/forms.hpp"
#include "dyadic/grid.hpp"
#include "dyadic/haar1d.hpp"
#include "dyadic/weight.hpp"
#include "dyadic/wilson.hpp"

namespace dyadic {

/// Supremum of a family of normalized subtree sums, with the index attaining
/// it.  In d=1 every index has alpha = 0 and the subtree of (I, 0) is the set
/// of intervals inside I.
struct CarlesonReport {
  double sup_value = 0.0;
  WilsonIndex argmax;
  Eigen::VectorXd per_root;
};

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

/// S(I, alpha) = sum of v over every (J, beta) with E_{beta,J} inside
/// E_{alpha,I}, for all indices of the depth-M grid at once.
inline Eigen::VectorXd subtree_sums(int d, int M, const Eigen::VectorXd& v) {
  if (v.size() != index_count(d, M)) throw std::invalid_argument("subtree_sums: sequence is not total on the grid");
  const int ppc = pairs_per_cell(d);
  const int nc = 1 << d;
  // full[l][p]: sum over all indices inside the level-l cube p
  std::vector<Eigen::VectorXd> full(M + 1);
  full[M] = Eigen::VectorXd::Zero(std::int64_t{1} << (d * M));
  for (int l = M - 1; l >= 0; --l) {
    const std::int64_t n = std::int64_t{1} << (d * l);
    full[l].resize(n);
    for (std::int64_t p = 0; p < n; ++p) {
      const CellIndex cell{d, l, p};
      double acc = 0.0;
      for (int a = 0; a < ppc; ++a) acc += v[flat_index({cell, a})];
      for (int c = 0; c < nc; ++c) acc += full[l + 1][cell.child(c).linear];
      full[l][p] = acc;
    }
  }
  Eigen::VectorXd out(v.size());
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const WilsonIndex w = unflatten(d, i);
    const PairNode node = pair_node(d, w.alpha);
    double acc = 0.0;
    for (int b = 0; b < ppc; ++b) {
      const PairNode inner = pair_node(d, b);
      if (inner.first >= node.first && inner.first + inner.count() <= node.first + node.count())
        acc += v[flat_index({w.cell, b})];
    }
    for (int c = node.first; c < node.first + node.count(); ++c) acc += full[w.cell.level + 1][w.cell.child(c).linear];
    out[i] = acc;
  }
  return out;
}

/// sup over (I, alpha) of subtree_sums / normalizer(I, alpha).
inline CarlesonReport normalized_sup(int d, int M, const Eigen::VectorXd& v,
                                     const std::function<double(const wilson::WilsonPair&)>& normalizer) {
  CarlesonReport r;
  const Eigen::VectorXd s = subtree_sums(d, M, v);
  r.per_root.resize(s.size());
  r.argmax = unflatten(d, 0);
  for (std::int64_t i = 0; i < s.size(); ++i) {
    const WilsonIndex w = unflatten(d, i);
    r.per_root[i] = s[i] / normalizer(wilson::make_pair(w));
    if (r.per_root[i] > r.sup_value) {
      r.sup_value = r.per_root[i];
      r.argmax = w;
    }
  }
  return r;
}

namespace detail {

inline void require_nonnegative(const Eigen::VectorXd& v, const char* what) {
  if (v.size() > 0 && v.minCoeff() < 0.0) throw std::domain_error(std::string(what) + " has negative entries");
}

}  // namespace detail

/// ||lambda||_CM = sup_J (1/|J|) sum_{I in J} lambda_I on levels 0..M-1.
inline CarlesonReport carleson_norm(const Coefficients<double>& lambda) {
  detail::require_nonnegative(lambda.values, "Carleson sequence");
  return normalized_sup(lambda.d, lambda.M, lambda.values, [](const wilson::WilsonPair& p) { return p.E().measure(); });
}

/// sup_J (1/(|J| <w>_J)) sum_{I in J} <w>_I^2 alpha_I
inline CarlesonReport weighted_carleson_constant(const Weightd& w, const Coefficients<double>& alpha) {
  detail::require_nonnegative(alpha.values, "embedding sequence");
  const auto& pw = w.averages();
  Eigen::VectorXd v(alpha.size());
  for (std::int64_t i = 0; i < alpha.size(); ++i) {
    const double m = wilson::region_average(pw, wilson::make_pair(unflatten(alpha.d, i)).E());
    v[i] = m * m * alpha.values[i];
  }
  return normalized_sup(alpha.d, alpha.M, v, [&](const wilson::WilsonPair& p) {
    return p.E().measure() * wilson::region_average(pw, p.E());
  });
}

/// sum_I alpha_I <g w>_I^2, the embedding side of the weighted Carleson test.
inline double weighted_embedding_sum(const Weightd& w, const Coefficients<double>& alpha, const StepFunctiond& g) {
  const Pyramid<double> pgw(g * w.values());
  double acc = 0.0;
  for (std::int64_t i = 0; i < alpha.size(); ++i) {
    const double m = wilson::region_average(pgw, wilson::make_pair(unflatten(alpha.d, i)).E());
    acc += alpha.values[i] * m * m;
  }
  return acc;
}

struct BilinearTest {
  CarlesonReport nu_test;
  CarlesonReport omega_test;
  CarlesonReport plain_test;

  double max_sup() const { return std::max({nu_test.sup_value, omega_test.sup_value, plain_test.sup_value}); }
};

/// Testing suprema sum alpha <nu>_E / nu(E), sum alpha <w>_E / w(E) and
/// sum alpha / |E| over subtrees.
inline BilinearTest bilinear_test(const Weightd& w, const Weightd& nu, const Coefficients<double>& alpha) {
  detail::require_nonnegative(alpha.values, "embedding sequence");
  const auto& pw = w.averages();
  const auto& pn = nu.averages();
  Eigen::VectorXd vn(alpha.size()), vw(alpha.size());
  for (std::int64_t i = 0; i < alpha.size(); ++i) {
    const auto E = wilson::make_pair(unflatten(alpha.d, i)).E();
    vn[i] = alpha.values[i] * wilson::region_average(pn, E);
    vw[i] = alpha.values[i] * wilson::region_average(pw, E);
  }
  const int d = alpha.d, M = alpha.M;
  BilinearTest out;
  out.nu_test = normalized_sup(d, M, vn, [&](const wilson::WilsonPair& p) {
    return p.E().measure() * wilson::region_average(pn, p.E());
  });
  out.omega_test = normalized_sup(d, M, vw, [&](const wilson::WilsonPair& p) {
    return p.E().measure() * wilson::region_average(pw, p.E());
  });
  out.plain_test = carleson_norm(alpha);
  return out;
}

/// sum alpha <f w>_E <g nu>_E
inline double bilinear_embedding_sum(const Weightd& w, const Weightd& nu, const Coefficients<double>& alpha,
                                     const StepFunctiond& f, const StepFunctiond& g) {
  const Pyramid<double> pf(f * w.values()), pg(g * nu.values());
  double acc = 0.0;
  for (std::int64_t i = 0; i < alpha.size(); ++i) {
    const auto E = wilson::make_pair(unflatten(alpha.d, i)).E();
    acc += alpha.values[i] * wilson::region_average(pf, E) * wilson::region_average(pg, E);
  }
  return acc;
}

/// sup over cells of <w>_I <nu>_I, levels 0..R.
inline double joint_characteristic(const Weightd& w, const Weightd& nu) {
  double best = 0.0;
  for (int l = 0; l <= w.R(); ++l)
    best = std::max(best, w.averages().level(l).cwiseProduct(nu.averages().level(l)).maxCoeff());
  return best;
}

struct TripleReport {
  CarlesonReport weighted;    // normalized by w^{-1}(J), summand / <w>
  CarlesonReport inverse;     // normalized by w(J), summand / <w^{-1}>
  CarlesonReport unweighted;  // normalized by |J|
};

/// d=1 sums of |(w^{-1})^_I w^_{I-}| over subtrees, in the three
/// normalizations.
inline TripleReport petermichl_sums(const Weightd& w, int M) {
  if (w.d() != 1) throw std::invalid_argument("petermichl_sums: d=1 only (use wilson_sums)");
  if (w.R() < M + 1) throw resolution_error("petermichl_sums needs R >= M+1");
  const auto& pw = w.averages();
  const auto& pi = w.inverse_averages();
  const auto n = index_count(1, M);
  Eigen::VectorXd plain(n), by_w(n), by_inv(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const CellIndex I = unflatten(1, i).cell;
    const double v = std::abs(haar1d::haar_coeff(pi, I) * haar1d::haar_coeff(pw, I.child(0)));
    plain[i] = v;
    by_w[i] = v / pw(I);
    by_inv[i] = v / pi(I);
  }
  TripleReport r;
  r.weighted = normalized_sup(1, M, by_w, [&](const wilson::WilsonPair& p) { return pi(p.cube) * p.cube.measure(); });
  r.inverse = normalized_sup(1, M, by_inv, [&](const wilson::WilsonPair& p) { return pw(p.cube) * p.cube.measure(); });
  r.unweighted = normalized_sup(1, M, plain, [](const wilson::WilsonPair& p) { return p.cube.measure(); });
  return r;
}

/// Wilson-indexed sums of |w^_{J,beta} (w^{-1})^_{J,beta}| (no shift):
/// plain / |E|; summand / <w^{-1}>_E over |E| <w>_E; summand / <w>_E over
/// |E| <w^{-1}>_E.
inline TripleReport wilson_sums(const Weightd& w, int M) {
  if (w.R() < M) throw resolution_error("wilson_sums needs R >= M");
  const int d = w.d();
  const auto& pw = w.averages();
  const auto& pi = w.inverse_averages();
  const auto n = index_count(d, M);
  Eigen::VectorXd plain(n), by_inv(n), by_w(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto p = wilson::make_pair(unflatten(d, i));
    const double v = std::abs(wilson::coeff(pw, p) * wilson::coeff(pi, p));
    plain[i] = v;
    by_inv[i] = v / wilson::region_average(pi, p.E());
    by_w[i] = v / wilson::region_average(pw, p.E());
  }
  TripleReport r;
  r.unweighted = normalized_sup(d, M, plain, [](const wilson::WilsonPair& p) { return p.E().measure(); });
  r.inverse = normalized_sup(d, M, by_inv, [&](const wilson::WilsonPair& p) {
    return p.E().measure() * wilson::region_average(pw, p.E());
  });
  r.weighted = normalized_sup(d, M, by_w, [&](const wilson::WilsonPair& p) {
    return p.E().measure() * wilson::region_average(pi, p.E());
  });
  return r;
}

/// sup over (I, alpha) of (1/|E|) sum_{E_{beta,J} in E_{alpha,I}} |(w^{-1/2})^_{J,beta}|^2 <w>_J,
/// the testing consequence of the weighted square function bound.
inline CarlesonReport square_function_testing(const Weightd& w, int M) {
  const int d = w.d();
  const Pyramid<double> pmh(w.inv_sqrt());
  const auto n = index_count(d, M);
  Eigen::VectorXd v(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const WilsonIndex idx = unflatten(d, i);
    const double c = wilson::coeff(pmh, wilson::make_pair(idx));
    v[i] = c * c * w.average(idx.cell);
  }
  return normalized_sup(d, M, v, [](const wilson::WilsonPair& p) { return p.E().measure(); });
}

// ---------------------------------------------------------------------------
// Square functions

/// Sf = (sum f^_{I,alpha}^2 1_I / |I|)^{1/2} over levels 0..M-1.
inline StepFunctiond square_function(const StepFunctiond& f, int M) {
  const auto c = wilson::analyze(f, M);
  StepFunctiond sq(f.d, f.R);
  for (std::int64_t i = 0; i < c.size(); ++i) {
    const CellIndex I = unflatten(f.d, i).cell;
    paint(sq, I, c.values[i] * c.values[i] / I.measure());
  }
  sq.values = sq.values.cwiseSqrt();
  return sq;
}

/// S_pi f = (sum f^_I^2 1_{pi I} / |I|)^{1/2}; the root is spread over itself.
inline StepFunctiond modified_square_function(const StepFunctiond& f, int M) {
  const auto c = wilson::analyze(f, M);
  StepFunctiond sq(f.d, f.R);
  for (std::int64_t i = 0; i < c.size(); ++i) {
    const CellIndex I = unflatten(f.d, i).cell;
    paint(sq, I.level == 0 ? I : I.parent(), c.values[i] * c.values[i] / I.measure());
  }
  sq.values = sq.values.cwiseSqrt();
  return sq;
}

/// ||Sf||_sigma^2 = sum f^_{I,alpha}^2 <sigma>_I
inline double weighted_sq_norm(const StepFunctiond& f, const Weightd& sigma, int M) {
  require_same_lattice(f, sigma.values());
  const auto c = wilson::analyze(f, M);
  double acc = 0.0;
  for (std::int64_t i = 0; i < c.size(); ++i) acc += c.values[i] * c.values[i] * sigma.average(unflatten(f.d, i).cell);
  return acc;
}

/// The same quantity by integrating (Sf)^2 sigma.
inline double weighted_sq_norm_direct(const StepFunctiond& f, const Weightd& sigma, int M) {
  const auto s = square_function(f, M);
  return inner_w(s, s, sigma.values());
}

// ---------------------------------------------------------------------------
// Norm estimation

struct PowerOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  int restarts = 8;
  std::uint64_t seed = 0x5eed;
};

/// Largest lambda with N v = lambda W v, by power iteration on W^{-1} N.
/// With `history` the Rayleigh quotients of every step are recorded.
inline NormEstimate sharp_ratio(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& denominator,
                                const PowerOptions& opt = {}, std::vector<double>* history = nullptr) {
  const auto n = numerator.rows();
  if (numerator.cols() != n || denominator.rows() != n || denominator.cols() != n)
    throw std::invalid_argument("sharp_ratio: pencil matrices must be square and of equal size");
  const Eigen::LLT<Eigen::MatrixXd> llt(denominator);
  if (llt.info() != Eigen::Success) throw std::domain_error("sharp_ratio: denominator is not positive definite");

  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd Nv = numerator * v;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  for (int r = 0; r < opt.restarts && Nv.norm() == 0.0; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    Nv = numerator * v;
  }
  if (Nv.norm() == 0.0) return {0.0, 0, 0.0, true};

  NormEstimate est;
  double lambda = v.dot(Nv) / v.dot(denominator * v);
  est.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    v = llt.solve(Nv);
    v /= std::sqrt(v.dot(denominator * v));
    Nv.noalias() = numerator * v;
    const double next = v.dot(Nv);
    if (history) history->push_back(next);
    est.iterations = it;
    est.residual = next > 0.0 ? std::abs(next - lambda) / next : 0.0;
    lambda = next;
    if (est.residual <= opt.tolerance) break;
  }
  est.value = lambda;
  est.converged = est.residual <= opt.tolerance;
  return est;
}

/// Pencil (N, W) of the weighted square function on resolution-M functions
/// x = cell values: ||Sf||_w^2 = x^T N x, ||f||_w^2 = x^T W x.
/// With `modified` the S_pi masses w(pi I)/|I| replace <w>_I.
struct Pencil {
  Eigen::MatrixXd numerator;
  Eigen::MatrixXd denominator;
};

inline Pencil square_function_pencil(const Weightd& w, int M, bool modified = false) {
  const int d = w.d();
  const std::int64_t cells = std::int64_t{1} << (d * M);
  const auto n = index_count(d, M);
  Eigen::MatrixXd H(n, cells);  // H(i, k) = <1_{cell k}, h^alpha_I>
  Eigen::VectorXd mass(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const WilsonIndex idx = unflatten(d, i);
    const auto p = wilson::make_pair(idx);
    H.row(i).setZero();
    const double s = 1.0 / std::sqrt(p.E().measure());
    const double cell = std::ldexp(1.0, -d * M);
    auto put = [&](const wilson::Region& r, double sign) {
      for (const auto& c : r.cells())
        for_each_fine_cell(c, M, [&](std::int64_t k) { H(i, k) = sign * s * cell; });
    };
    put(p.E2, 1.0);
    put(p.E1, -1.0);
    if (modified) {
      const CellIndex parent = idx.cell.level == 0 ? idx.cell : idx.cell.parent();
      mass[i] = w.mass(parent) / idx.cell.measure();
    } else {
      mass[i] = w.average(idx.cell);
    }
  }
  Pencil p;
  p.numerator = H.transpose() * mass.asDiagonal() * H;
  p.denominator = Eigen::MatrixXd::Zero(cells, cells);
  for (std::int64_t k = 0; k < cells; ++k) p.denominator(k, k) = w.mass(CellIndex{d, M, k});
  return p;
}

/// ||S||_{L2(w) -> L2(w)} (or S_pi) on resolution-M functions.
inline NormEstimate square_function_norm(const Weightd& w, int M, bool modified = false, const PowerOptions& opt = {}) {
  const auto p = square_function_pencil(w, M, modified);
  auto est = sharp_ratio(p.numerator, p.denominator, opt);
  est.value = std::sqrt(est.value);
  return est;
}

/// Matrix of a linear map on resolution-M functions: column k is the
/// level-R image of the indicator of the k-th level-M cell.
using LinearMap = std::function<StepFunctiond(const StepFunctiond&)>;

inline Eigen::MatrixXd assemble(const LinearMap& apply, int d, int M, int R) {
  const std::int64_t cells = std::int64_t{1} << (d * M);
  Eigen::MatrixXd A;
  for (std::int64_t k = 0; k < cells; ++k) {
    const auto image = apply(indicator<double>(CellIndex{d, M, k}, R));
    if (A.size() == 0) A.resize(image.size(), cells);
    A.col(k) = image.values;
  }
  return A;
}

/// Largest |apply(af+bg) - a apply(f) - b apply(g)| relative to the images,
/// over `trials` seeded random triples.
inline double linearity_defect(const LinearMap& apply, int d, int M, int R, int trials = 3, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_fn = [&] {
    StepFunctiond coarse(d, M);
    for (auto& x : coarse.values) x = normal(rng);
    return refine(coarse, R);
  };
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto f = random_fn(), g = random_fn();
    const double a = normal(rng), b = normal(rng);
    const auto lhs = apply(a * f + b * g);
    const auto rhs = a * apply(f) + b * apply(g);
    const double scale = std::max({lhs.values.cwiseAbs().maxCoeff(), rhs.values.cwiseAbs().maxCoeff(), 1e-300});
    worst = std::max(worst, (lhs.values - rhs.values).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

/// ||apply||_{L2(u) -> L2(v)} over resolution-M inputs, u and v given as
/// weights (Weightd::unit for Lebesgue measure).
inline NormEstimate operator_norm(const LinearMap& apply, const Weightd& domain_weight, const Weightd& codomain_weight,
                                  int M, const PowerOptions& opt = {}) {
  const int d = domain_weight.d(), R = codomain_weight.R();
  if (linearity_defect(apply, d, M, R) > 1e-9) throw std::invalid_argument("operator_norm: map is not linear");
  const Eigen::MatrixXd A = assemble(apply, d, M, R);
  const double h = std::ldexp(1.0, -d * R);
  const Eigen::MatrixXd N = A.transpose() * (h * codomain_weight.values().values).asDiagonal() * A;
  const std::int64_t cells = A.cols();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(cells, cells);
  for (std::int64_t k = 0; k < cells; ++k) W(k, k) = domain_weight.mass(CellIndex{d, M, k});
  auto est = sharp_ratio(N, W, opt);
  est.value = std::sqrt(est.value);
  return est;
}

/// sup |B(phi, g)| / (||phi|| ||g||_w) over resolution-M phi and g.
inline NormEstimate form_norm(const BilinearFormd& form, const Weightd& w, int M, const PowerOptions& opt = {}) {
  const int d = form.d, R = form.R;
  if (w.d() != d || w.R() != R) throw grid_mismatch("form and weight grids differ");
  const std::int64_t cells = std::int64_t{1} << (d * M);
  const double h = std::ldexp(1.0, -d * R);
  // Test functions integrated against each level-M cell indicator.
  Eigen::MatrixXd P(cells, form.terms()), Q(cells, form.terms());
  for (std::int64_t k = 0; k < cells; ++k) {
    P.row(k).setZero();
    Q.row(k).setZero();
    for_each_fine_cell(CellIndex{d, M, k}, R, [&](std::int64_t i) {
      P.row(k) += form.phi_tests.row(i);
      Q.row(k) += form.g_tests.row(i);
    });
  }
  P *= h;
  Q *= h;
  Eigen::VectorXd u(cells), v(cells);
  for (std::int64_t k = 0; k < cells; ++k) {
    const CellIndex c{d, M, k};
    u[k] = 1.0 / std::sqrt(c.measure());
    v[k] = 1.0 / std::sqrt(w.mass(c));
  }
  const Eigen::MatrixXd K = u.asDiagonal() * P * form.scale.asDiagonal() * Q.transpose() * v.asDiagonal();
  auto est = sharp_ratio(K * K.transpose(), Eigen::MatrixXd::Identity(cells, cells), opt);
  est.value = std::sqrt(est.value);
  return est;
}

}  // namespace dyadic
