#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sfree/core.hpp"
#include "sfree/ensembles/rng.hpp"
#include "sfree/matrix.hpp"

namespace sfree::spectral {

enum class Ordering { real_ascending, argument_ascending };

/// Eigenvalues with a unitary basis whose columns are the matching eigenvectors.
struct SpectralDecomposition {
  std::vector<Complex> eigenvalues;
  SquareMatrix basis;
  Ordering ordering = Ordering::real_ascending;

  [[nodiscard]] CMatrix reconstruct() const {
    CMatrix scaled = basis.entries();
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) scaled.col(j) *= eigenvalues[static_cast<std::size_t>(j)];
    return scaled * basis.entries().adjoint();
  }
};

/// Argument of z in [0, 2*pi).
inline double argument_0_2pi(Complex z) {
  double a = std::atan2(z.imag(), z.real());
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

namespace detail {

inline void require_hermitian(const SquareMatrix& a, const char* who) {
  require(a.is(MatrixFlag::hermitian) || hermitian_residual(a.entries()) <= kHermitianTolerance,
          std::string(who) + ": input is not hermitian");
}

inline void require_unitary(const SquareMatrix& u, const char* who) {
  require(u.is(MatrixFlag::unitary) || unitary_residual(u.entries()) <= kUnitaryTolerance,
          std::string(who) + ": input is not unitary");
}

inline CMatrix hermitian_part(const CMatrix& a) { return (a + a.adjoint()) * 0.5; }

// Rotation theta such that e^{i theta} U keeps its spectrum away from -1.
// The arguments of U are among +-arccos of the eigenvalues of (U + U*)/2, so a
// gap in that candidate set is a gap in the spectrum.
inline double cayley_rotation(const CMatrix& u) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(u), Eigen::EigenvaluesOnly);
  std::vector<double> cand;
  cand.reserve(2 * static_cast<std::size_t>(u.rows()));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double a = std::acos(std::clamp(es.eigenvalues()(i), -1.0, 1.0));
    cand.push_back(a);
    cand.push_back(a == 0.0 ? 0.0 : 2.0 * kPi - a);
  }
  std::sort(cand.begin(), cand.end());
  double best_gap = cand.front() + 2.0 * kPi - cand.back();
  double best_mid = std::fmod(cand.back() + 0.5 * best_gap, 2.0 * kPi);
  for (std::size_t i = 1; i < cand.size(); ++i) {
    const double g = cand[i] - cand[i - 1];
    if (g > best_gap) {
      best_gap = g;
      best_mid = cand[i - 1] + 0.5 * g;
    }
  }
  return kPi - best_mid;
}

// H = i (I - U')(I + U')^{-1} with U' = e^{i theta} U; eigenvalue e^{i psi} maps to tan(psi / 2).
inline CMatrix cayley_hermitian(const CMatrix& u, double theta) {
  const Eigen::Index n = u.rows();
  const CMatrix rotated = u * std::polar(1.0, theta);
  const CMatrix id = CMatrix::Identity(n, n);
  Eigen::PartialPivLU<CMatrix> lu(id + rotated);
  CMatrix h = lu.solve(id - rotated) * Complex(0.0, 1.0);
  return hermitian_part(h);
}

template <class Key>
SpectralDecomposition sorted_decomposition(std::vector<Complex> values, const CMatrix& vectors, Key key,
                                           Ordering ordering, MatrixFlags basis_flags) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(values[a]) < key(values[b]); });
  SpectralDecomposition d;
  d.ordering = ordering;
  d.eigenvalues.resize(n);
  CMatrix basis(vectors.rows(), vectors.cols());
  for (std::size_t j = 0; j < n; ++j) {
    d.eigenvalues[j] = values[idx[j]];
    basis.col(static_cast<Eigen::Index>(j)) = vectors.col(static_cast<Eigen::Index>(idx[j]));
  }
  d.basis = SquareMatrix(std::move(basis), basis_flags);
  return d;
}

}  // namespace detail

/// Ascending real eigenvalues and orthonormal eigenvectors.
inline SpectralDecomposition eig_hermitian(const SquareMatrix& a) {
  detail::require_hermitian(a, "eig_hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(detail::hermitian_part(a.entries()));
  require(es.info() == Eigen::Success, "eig_hermitian: eigensolver failed");
  SpectralDecomposition d;
  d.ordering = Ordering::real_ascending;
  d.eigenvalues.reserve(static_cast<std::size_t>(a.dimension()));
  for (Eigen::Index i = 0; i < a.dimension(); ++i) d.eigenvalues.emplace_back(es.eigenvalues()(i), 0.0);
  d.basis = SquareMatrix(es.eigenvectors(), MatrixFlag::unitary);
  return d;
}

/// Ascending eigenvalues only.
inline RVector hermitian_eigenvalues(const SquareMatrix& a) {
  detail::require_hermitian(a, "hermitian_eigenvalues");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(detail::hermitian_part(a.entries()), Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, "hermitian_eigenvalues: eigensolver failed");
  return es.eigenvalues();
}

/// Eigendecomposition of a unitary, ordered by argument in [0, 2*pi).
///
/// Goes through the Cayley transform of a rotated copy of U, which is Hermitian,
/// then reads each eigenvalue off the diagonal of V* U V.
inline SpectralDecomposition eig_unitary(const SquareMatrix& u) {
  detail::require_unitary(u, "eig_unitary");
  const CMatrix& m = u.entries();
  const double theta = detail::cayley_rotation(m);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(detail::cayley_hermitian(m, theta));
  require(es.info() == Eigen::Success, "eig_unitary: eigensolver failed");
  const CMatrix& v = es.eigenvectors();
  const Eigen::Index n = m.rows();
  std::vector<Complex> values(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex l = v.col(j).dot(m * v.col(j));
    values[static_cast<std::size_t>(j)] = l / std::abs(l);
  }
  return detail::sorted_decomposition(std::move(values), v, argument_0_2pi, Ordering::argument_ascending,
                                      MatrixFlag::unitary);
}

/// Arguments in [0, 2*pi) of the eigenvalues of U, ascending.
inline std::vector<double> unitary_arguments(const SquareMatrix& u) {
  detail::require_unitary(u, "unitary_arguments");
  const double theta = detail::cayley_rotation(u.entries());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(detail::cayley_hermitian(u.entries(), theta), Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, "unitary_arguments: eigensolver failed");
  std::vector<double> args;
  args.reserve(static_cast<std::size_t>(u.dimension()));
  for (Eigen::Index i = 0; i < u.dimension(); ++i) {
    args.push_back(argument_0_2pi(std::polar(1.0, 2.0 * std::atan(es.eigenvalues()(i)) - theta)));
  }
  std::sort(args.begin(), args.end());
  return args;
}

/// Multiplies each basis column by an independent uniform phase.
///
/// Eigenvectors are only defined up to phase; a solver fixes one by convention,
/// which biases the basis. Randomizing restores unitary invariance of its law.
inline SpectralDecomposition randomize_phases(SpectralDecomposition d, ensembles::Seed seed) {
  ensembles::PhiloxEngine eng(seed);
  CMatrix b = d.basis.entries();
  for (Eigen::Index j = 0; j < b.cols(); ++j) b.col(j) *= eng.phase();
  d.basis = SquareMatrix(std::move(b), d.basis.flags());
  return d;
}

/// basis * diag(f(lambda)) * basis*; rejects non-finite f values.
template <class F>
SquareMatrix functional_calculus(const SpectralDecomposition& d, F&& f) {
  const std::size_t n = d.eigenvalues.size();
  std::vector<Complex> fv(n);
  bool real = true;
  bool on_circle = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex v = static_cast<Complex>(f(d.eigenvalues[i]));
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), "functional_calculus: f is undefined at an eigenvalue");
    fv[i] = v;
    real = real && v.imag() == 0.0;
    on_circle = on_circle && std::abs(std::abs(v) - 1.0) <= 1e-12;
  }
  SpectralDecomposition image{std::move(fv), d.basis, d.ordering};
  CMatrix m = image.reconstruct();
  MatrixFlags flags;
  if (real) {
    m = detail::hermitian_part(m);
    flags.set(MatrixFlag::hermitian);
  }
  flags.set(MatrixFlag::unitary, on_circle);
  return SquareMatrix(std::move(m), flags);
}

/// Largest singular value.
inline double operator_norm(const SquareMatrix& a) {
  if (a.dimension() == 0) return 0.0;
  if (a.is(MatrixFlag::hermitian)) return hermitian_eigenvalues(a).cwiseAbs().maxCoeff();
  const CMatrix g = a.entries().adjoint() * a.entries();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(detail::hermitian_part(g), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// (1/N) Tr A.
inline Complex normalized_trace(const SquareMatrix& a) {
  require(a.dimension() > 0, "normalized_trace: empty matrix");
  return a.entries().trace() / static_cast<double>(a.dimension());
}

}  // namespace sfree::spectral
