#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sfree/core.hpp"
#include "sfree/ensembles/rng.hpp"
#include "sfree/ncalg/polynomial.hpp"

namespace sfree::freelimit {

/// Trace of a word in free Haar unitaries: 1 if it reduces to the empty word, else 0.
inline double free_haar_trace(const ncalg::StarMonomial& w) {
  std::vector<ncalg::StarLetter> stack;
  for (const auto& l : w.letters()) {
    if (!stack.empty() && stack.back().index == l.index && stack.back().starred != l.starred) {
      stack.pop_back();
    } else {
      stack.push_back(l);
    }
  }
  return stack.empty() ? 1.0 : 0.0;
}

/// t -> 2t + sum_i (sqrt(t^2 + |a_i|^2) - t).
inline double akemann_ostrand_objective(const std::vector<Complex>& a, double t) {
  double s = 2.0 * t;
  for (const Complex& c : a) s += std::hypot(t, std::abs(c)) - t;
  return s;
}

/// Norm of sum_i a_i u_i for free Haar unitaries u_i: minimum of the convex objective over t >= 0.
inline double akemann_ostrand_norm(const std::vector<Complex>& a) {
  require(!a.empty(), "akemann_ostrand_norm: need at least one coefficient");
  const auto slope = [&](double t) {
    double s = 2.0;
    for (const Complex& c : a) {
      const double m = std::abs(c);
      if (m > 0.0) s += t / std::hypot(t, m) - 1.0;
    }
    return s;
  };
  double amax = 0.0;
  for (const Complex& c : a) amax = std::max(amax, std::abs(c));
  if (amax == 0.0) return 0.0;
  if (slope(0.0) >= 0.0) return akemann_ostrand_objective(a, 0.0);
  double lo = 0.0;
  double hi = amax * static_cast<double>(a.size());
  while (slope(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return akemann_ostrand_objective(a, 0.5 * (lo + hi));
}

/// Norm of sum_{i <= p} (u_i + u_i^*) for free Haar unitaries.
inline double kesten_norm(int p) {
  require(p >= 1, "kesten_norm: p must be >= 1");
  return 2.0 * std::sqrt(2.0 * p - 1.0);
}

/// Limit of the norm of sum_{i <= p} S_i restricted to the orthogonal of the constant vector.
inline double fell_norm(int p) {
  require(p >= 2, "fell_norm: p must be >= 2");
  return 2.0 * std::sqrt(p - 1.0);
}

/// (d + 1) ||alpha||_2.
inline double haagerup_bound(int d, const std::vector<Complex>& alpha) {
  require(d >= 1, "haagerup_bound: d must be >= 1");
  return (d + 1.0) * ncalg::l2_coefficient_norm(alpha);
}

/// e sqrt(d + 1) l2.
inline double kemp_speicher_bound(int d, double l2) {
  require(d >= 1, "kemp_speicher_bound: d must be >= 1");
  require(l2 >= 0.0, "kemp_speicher_bound: l2 must be >= 0");
  return kE * std::sqrt(d + 1.0) * l2;
}

// ---- Matrix-coefficient norm ----------------------------------------------------------------

namespace lehner_detail {

using Eigen::Index;

/// Hermitian positive definite b = L L^* from k^2 reals: log-diagonal then complex strict lower part.
inline CMatrix factor_to_b(const std::vector<double>& theta, Index k) {
  CMatrix l = CMatrix::Zero(k, k);
  std::size_t pos = 0;
  for (Index i = 0; i < k; ++i) l(i, i) = std::exp(theta[pos++]);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < i; ++j) {
      l(i, j) = Complex(theta[pos], theta[pos + 1]);
      pos += 2;
    }
  }
  return l * l.adjoint();
}

/// Largest eigenvalue of 2b + sum_i b^{1/2} ((1 + (b^{-1/2} a_i b^{-1/2})^2)^{1/2} - 1) b^{1/2}.
inline double objective(const CMatrix& b, const std::vector<CMatrix>& coeffs) {
  const Index k = b.rows();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(b);
  const RVector& lam = es.eigenvalues();
  if (!(lam.minCoeff() > 0.0)) return std::numeric_limits<double>::infinity();
  const CMatrix& v = es.eigenvectors();
  const CMatrix root = v * lam.cwiseSqrt().asDiagonal() * v.adjoint();
  const CMatrix inv_root = v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint();
  CMatrix total = 2.0 * b;
  for (const CMatrix& a : coeffs) {
    CMatrix m = inv_root * a * inv_root;
    m = (0.5 * (m + m.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> em(m);
    const RVector mu = em.eigenvalues();
    RVector f(k);
    for (Index i = 0; i < k; ++i) f(i) = std::hypot(1.0, mu(i)) - 1.0;
    const CMatrix inner = em.eigenvectors() * f.asDiagonal() * em.eigenvectors().adjoint();
    total += root * inner * root;
  }
  total = (0.5 * (total + total.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> et(total, Eigen::EigenvaluesOnly);
  return et.eigenvalues().maxCoeff();
}

struct NelderMeadResult {
  std::vector<double> x;
  double value;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double step, double tol, int max_eval) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    val[i] = f(pts[i]);
    ++evals;
  }
  std::vector<std::size_t> order(n + 1);
  while (evals < max_eval) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    double spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) spread = std::max(spread, std::abs(pts[i][d] - pts[best][d]));
    }
    if (val[worst] - val[best] <= tol * (1.0 + std::abs(val[best])) && spread <= 1e-9) break;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
    }
    const auto along = [&](double c) {
      std::vector<double> p(n);
      for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + c * (pts[worst][d] - centroid[d]);
      return p;
    };
    const auto refl = along(-1.0);
    const double fr = f(refl);
    ++evals;
    if (fr < val[best]) {
      const auto ext = along(-2.0);
      const double fe = f(ext);
      ++evals;
      if (fe < fr) {
        pts[worst] = ext;
        val[worst] = fe;
      } else {
        pts[worst] = refl;
        val[worst] = fr;
      }
    } else if (fr < val[second]) {
      pts[worst] = refl;
      val[worst] = fr;
    } else {
      const auto con = fr < val[worst] ? along(-0.5) : along(0.5);
      const double fc = f(con);
      ++evals;
      if (fc < std::min(fr, val[worst])) {
        pts[worst] = con;
        val[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
          val[i] = f(pts[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(val.begin(), val.end());
  return {pts[static_cast<std::size_t>(it - val.begin())], *it};
}

}  // namespace lehner_detail

/// Norm of a_0 (x) 1 + sum_{i >= 1} a_i (x) u_i for k x k hermitian a_i and free Haar unitaries u_i.
///
/// Evaluates inf over positive definite b of
///   lambda_max( 2b + sum_{i=0}^{p} b^{1/2} ((1 + (b^{-1/2} a_i b^{-1/2})^2)^{1/2} - 1) b^{1/2} ),
/// where a_0 enters as one more free Haar coefficient (multiply on the left by a free u_0).
/// For k = 1 this is the Akemann-Ostrand minimum. b = L L^* is searched by Nelder-Mead over the
/// triangular factor L with 8 deterministic restarts.
inline double lehner_norm(const std::vector<CMatrix>& coeffs) {
  require(!coeffs.empty(), "lehner_norm: need a_0");
  const Eigen::Index k = coeffs.front().rows();
  double scale = 0.0;
  for (const CMatrix& a : coeffs) {
    require(a.rows() == k && a.cols() == k, "lehner_norm: coefficients must share one square size");
    const double na = a.cwiseAbs().maxCoeff();
    require((a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, na), "lehner_norm: coefficients must be hermitian");
    scale = std::max(scale, na);
  }
  if (scale == 0.0) return 0.0;
  const std::size_t dim = static_cast<std::size_t>(k * k);
  const auto f = [&](const std::vector<double>& th) {
    return lehner_detail::objective(lehner_detail::factor_to_b(th, k), coeffs);
  };
  ensembles::PhiloxEngine rng(ensembles::Seed{0x1e4e12ULL, static_cast<std::uint64_t>(k)});
  std::vector<double> values;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  for (int r = 0; r < 8; ++r) {
    std::vector<double> x0(dim, 0.0);
    const double s = std::sqrt(scale) * std::pow(4.0, static_cast<double>(r % 4) - 1.5);
    for (Eigen::Index i = 0; i < k; ++i) x0[static_cast<std::size_t>(i)] = std::log(s) + (r >= 4 ? 0.3 * rng.normal() : 0.0);
    for (std::size_t i = static_cast<std::size_t>(k); i < dim; ++i) x0[i] = r >= 4 ? 0.3 * s * rng.normal() : 0.0;
    auto res = lehner_detail::nelder_mead(f, x0, 0.5, 1e-13, 20000);
    res = lehner_detail::nelder_mead(f, res.x, 0.05, 1e-15, 20000);
    values.push_back(res.value);
    if (res.value < best) {
      best = res.value;
      best_x = res.x;
    }
  }
  const auto polished = lehner_detail::nelder_mead(f, best_x, 1e-3, 1e-16, 20000);
  best = std::min(best, polished.value);
  const double tol = 1e-6 * std::max(1.0, best);
  const auto agreeing = std::count_if(values.begin(), values.end(), [&](double v) { return v - best <= 1e2 * tol; });
  if (agreeing < 2) throw ConvergenceError("lehner_norm: restarts disagree beyond tolerance");
  return best;
}

}  // namespace sfree::freelimit
