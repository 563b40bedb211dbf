#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfree/spectral/cdf.hpp"
#include "sfree/spectral/decomposition.hpp"

namespace sfree::spectral {

inline constexpr double kTieTolerance = 1e-12;     // relative to the operator norm
inline constexpr double kLatticeSnap = 1e-8;       // eigenvalue-to-{k/N} snapping radius
inline constexpr double kUnitIntervalSlack = 1e-10;

namespace detail {

inline void require_distinct(const std::vector<double>& sorted, double scale, const char* who) {
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] < kTieTolerance * std::max(scale, 1e-300)) {
      throw DegenerateSpectrumError(std::string(who) + ": eigenvalues " + std::to_string(i - 1) + " and " +
                                    std::to_string(i) + " are tied");
    }
  }
}

// Eigenvalues of a matrix with spectrum {k/N} come back with rounding noise;
// step maps like F^{-1} jump exactly on that lattice, so noise is removed first.
inline double snap_to_lattice(double x, Eigen::Index n) {
  const double k = std::round(x * static_cast<double>(n));
  if (k >= 1.0 && k <= static_cast<double>(n) && std::abs(x - k / static_cast<double>(n)) <= kLatticeSnap) {
    return k / static_cast<double>(n);
  }
  return x;
}

}  // namespace detail

/// Eigendecomposition of V diag(1/N, ..., N/N) V* where V diagonalizes A in
/// ascending order. Equivalently F_A(A).
inline SpectralDecomposition coupling_reference_decomposition(const SquareMatrix& a) {
  SpectralDecomposition d = eig_hermitian(a);
  std::vector<double> ev;
  ev.reserve(d.eigenvalues.size());
  for (const Complex& l : d.eigenvalues) ev.push_back(l.real());
  const double scale = ev.empty() ? 0.0 : std::max(std::abs(ev.front()), std::abs(ev.back()));
  detail::require_distinct(ev, scale, "coupling_reference");
  const auto n = static_cast<double>(ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) d.eigenvalues[i] = Complex(static_cast<double>(i + 1) / n, 0.0);
  return d;
}

/// M = V_A diag(1/N, ..., N/N) V_A*, hermitian, same eigenbasis as A.
inline SquareMatrix coupling_reference(const SquareMatrix& a) {
  const SpectralDecomposition d = coupling_reference_decomposition(a);
  return SquareMatrix(detail::hermitian_part(d.reconstruct()), MatrixFlag::hermitian);
}

/// gamma(M) through the eigenbasis of M; spectrum of M must lie in [0, 1].
///
/// Eigenvalues within 1e-8 of k/N are snapped to k/N before gamma is applied.
template <class Gamma>
SquareMatrix coupled_copy(const SquareMatrix& m, Gamma&& gamma) {
  const SpectralDecomposition d = eig_hermitian(m);
  const Eigen::Index n = m.dimension();
  for (const Complex& l : d.eigenvalues) {
    require(l.real() >= -kUnitIntervalSlack && l.real() <= 1.0 + kUnitIntervalSlack,
            "coupled_copy: spectrum of M is outside [0, 1]");
  }
  return functional_calculus(d, [&](Complex l) {
    const double s = std::clamp(detail::snap_to_lattice(l.real(), n), 0.0, 1.0);
    return static_cast<Complex>(gamma(s));
  });
}

inline SquareMatrix coupled_copy(const SquareMatrix& m, const QuantileMap& gamma) {
  return coupled_copy(m, [&](double s) { return gamma(s); });
}

/// Normalized angles arg(lambda) / (2 pi) in [0, 1), ascending.
inline std::vector<double> unitary_angles(const SquareMatrix& u) {
  std::vector<double> a = unitary_arguments(u);
  for (double& x : a) x /= 2.0 * kPi;
  return a;
}

/// max|exp(2 pi i F_U^{-1}(M)) - U| with M built from the argument-ordered basis of U.
inline double haar_reconstruction_check(const SquareMatrix& u) {
  const SpectralDecomposition d = eig_unitary(u);
  const Eigen::Index n = u.dimension();
  std::vector<double> angles;
  angles.reserve(d.eigenvalues.size());
  for (const Complex& l : d.eigenvalues) angles.push_back(argument_0_2pi(l) / (2.0 * kPi));
  detail::require_distinct(angles, 1.0, "haar_reconstruction_check");

  SpectralDecomposition md = d;
  for (Eigen::Index i = 0; i < n; ++i) {
    md.eigenvalues[static_cast<std::size_t>(i)] = Complex(static_cast<double>(i + 1) / static_cast<double>(n), 0.0);
  }
  const SquareMatrix m(detail::hermitian_part(md.reconstruct()), MatrixFlag::hermitian);

  const StepFunction f = empirical_cdf(angles);
  const SquareMatrix rebuilt = coupled_copy(m, [&](double s) {
    return std::polar(1.0, 2.0 * kPi * generalized_inverse(f, std::max(s, 1.0 / static_cast<double>(n))));
  });
  return max_abs(rebuilt.entries() - u.entries());
}

/// sup over the quantile grid of |F_U^{-1}(s) - s|, angles normalized to [0, 1).
inline double angle_quantile_drift(const SquareMatrix& u, std::size_t m = kDefaultQuantileGrid) {
  const StepFunction f = empirical_cdf(unitary_angles(u));
  const QuantileMap q = QuantileMap::from_step(f, m);
  const QuantileMap id = QuantileMap::from_function([](double s) { return s; }, m);
  return sup_distance(q, id);
}

}  // namespace sfree::spectral
