#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfree/core.hpp"
#include "sfree/ensembles/rng.hpp"
#include "sfree/matrix.hpp"

namespace sfree::ensembles {

enum class EnsembleKind {
  GUE,
  GOE,
  GSE,
  HaarUnitary,
  HaarOrthogonal,
  HaarSymplectic,
  Permutation,
  ConjugatedDiagonal
};

enum class Field { real, complex, quaternion };

inline std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::GUE: return "GUE";
    case EnsembleKind::GOE: return "GOE";
    case EnsembleKind::GSE: return "GSE";
    case EnsembleKind::HaarUnitary: return "HaarUnitary";
    case EnsembleKind::HaarOrthogonal: return "HaarOrthogonal";
    case EnsembleKind::HaarSymplectic: return "HaarSymplectic";
    case EnsembleKind::Permutation: return "Permutation";
    case EnsembleKind::ConjugatedDiagonal: return "ConjugatedDiagonal";
  }
  return "?";
}

inline EnsembleKind parse_ensemble_kind(std::string_view s) {
  for (auto k : {EnsembleKind::GUE, EnsembleKind::GOE, EnsembleKind::GSE, EnsembleKind::HaarUnitary,
                 EnsembleKind::HaarOrthogonal, EnsembleKind::HaarSymplectic, EnsembleKind::Permutation,
                 EnsembleKind::ConjugatedDiagonal}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown ensemble kind: " + std::string(s));
}

/// What to sample. Symplectic kinds use the even stored size 2n.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::GUE;
  Eigen::Index dimension = 1;
  std::optional<std::vector<Complex>> diagonal_data;

  void validate() const {
    require(dimension >= 1, "EnsembleSpec: dimension must be positive");
    if (kind == EnsembleKind::GSE || kind == EnsembleKind::HaarSymplectic) {
      require(dimension % 2 == 0, "EnsembleSpec: symplectic kinds need an even stored dimension");
    }
    if (kind == EnsembleKind::ConjugatedDiagonal) {
      require(diagonal_data.has_value() && static_cast<Eigen::Index>(diagonal_data->size()) == dimension,
              "EnsembleSpec: ConjugatedDiagonal needs diagonal_data of length N");
    }
  }
};

namespace detail {

// Complex image [[A, B], [-conj(B), conj(A)]] of the quaternion matrix A + B j.
inline CMatrix quaternion_image(const CMatrix& a, const CMatrix& b) {
  const Eigen::Index n = a.rows();
  CMatrix m(2 * n, 2 * n);
  m.topLeftCorner(n, n) = a;
  m.topRightCorner(n, n) = b;
  m.bottomLeftCorner(n, n) = -b.conjugate();
  m.bottomRightCorner(n, n) = a.conjugate();
  return m;
}

inline CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, PhiloxEngine& eng) {
  const double s = std::sqrt(variance / 2.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = eng.normal();
      const double im = eng.normal();
      m(i, j) = Complex(s * re, s * im);
    }
  }
  return m;
}

// Quaternionic Gram-Schmidt on the first n columns; the partner of column k is
// T(q) = J^T conj(q), which keeps the result in the quaternion image.
inline CMatrix symplectic_orthonormalize(const CMatrix& g) {
  const Eigen::Index two_n = g.rows();
  const Eigen::Index n = two_n / 2;
  CMatrix q = CMatrix::Zero(two_n, two_n);
  for (Eigen::Index k = 0; k < n; ++k) {
    CVector v = g.col(k);
    for (int pass = 0; pass < 2; ++pass) {
      if (k > 0) {
        v -= q.leftCols(k) * (q.leftCols(k).adjoint() * v);
        v -= q.middleCols(n, k) * (q.middleCols(n, k).adjoint() * v);
      }
    }
    v /= v.norm();
    q.col(k) = v;
    q.col(n + k).head(n) = -v.tail(n).conjugate();
    q.col(n + k).tail(n) = v.head(n).conjugate();
  }
  return q;
}

}  // namespace detail

/// Ginibre matrix with i.i.d. Gaussian entries of variance 1/n per complex entry.
///
/// Real: N(0, 1/n) entries. Complex: real and imaginary parts N(0, 1/(2n)).
/// Quaternion: n is the stored (even) size and the result is the complex image of
/// an (n/2) x (n/2) quaternion Gaussian matrix; its complex entries again have
/// variance 1/n.
inline SquareMatrix sample_ginibre(Eigen::Index n, Field field, Seed seed) {
  require(n >= 1, "sample_ginibre: dimension must be positive");
  PhiloxEngine eng(seed);
  const double var = 1.0 / static_cast<double>(n);
  switch (field) {
    case Field::real: {
      const double s = std::sqrt(var);
      CMatrix m(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(s * eng.normal(), 0.0);
      }
      return SquareMatrix(std::move(m));
    }
    case Field::complex:
      return SquareMatrix(detail::complex_gaussian(n, n, var, eng));
    case Field::quaternion: {
      require(n % 2 == 0, "sample_ginibre: quaternion field needs an even stored size");
      const Eigen::Index h = n / 2;
      CMatrix a = detail::complex_gaussian(h, h, var, eng);
      CMatrix b = detail::complex_gaussian(h, h, var, eng);
      return SquareMatrix(detail::quaternion_image(a, b), MatrixFlag::selfdual);
    }
  }
  throw std::invalid_argument("sample_ginibre: unknown field");
}

/// GUE / GOE / GSE as (Z + Z*)/sqrt(2) from the matching Ginibre Z.
///
/// GUE: complex off-diagonal entries of variance 1/N, real diagonal of variance
/// 1/N, i.e. density proportional to exp(-N/2 Tr A^2). GOE and GSE use the same
/// construction over the reals and quaternions, so all three have limiting
/// spectral support [-2, 2].
inline SquareMatrix sample_gaussian_hermitian(const EnsembleSpec& spec, Seed seed) {
  spec.validate();
  Field field{};
  switch (spec.kind) {
    case EnsembleKind::GUE: field = Field::complex; break;
    case EnsembleKind::GOE: field = Field::real; break;
    case EnsembleKind::GSE: field = Field::quaternion; break;
    default: throw std::invalid_argument("sample_gaussian_hermitian: kind must be GUE, GOE or GSE");
  }
  const SquareMatrix z = sample_ginibre(spec.dimension, field, seed);
  CMatrix h = (z.entries() + z.entries().adjoint()) * (1.0 / std::sqrt(2.0));
  MatrixFlags flags = MatrixFlag::hermitian;
  if (spec.kind == EnsembleKind::GSE) flags.set(MatrixFlag::selfdual);
  return SquareMatrix(std::move(h), flags);
}

/// Haar-distributed element of U(N), O(N) or Sp(N/2).
///
/// Unitary and orthogonal: Q R of a Ginibre matrix, then Q diag(r_ii / |r_ii|),
/// which removes the phase ambiguity of QR and yields exactly Haar measure.
/// Symplectic: quaternionic Gram-Schmidt with positive real R-diagonal.
inline SquareMatrix sample_haar(const EnsembleSpec& spec, Seed seed) {
  spec.validate();
  const Eigen::Index n = spec.dimension;
  switch (spec.kind) {
    case EnsembleKind::HaarUnitary: {
      const SquareMatrix g = sample_ginibre(n, Field::complex, seed);
      Eigen::HouseholderQR<CMatrix> qr(g.entries());
      CMatrix q = qr.householderQ();
      const CMatrix& r = qr.matrixQR();
      for (Eigen::Index j = 0; j < n; ++j) {
        const Complex d = r(j, j);
        const double a = std::abs(d);
        q.col(j) *= (a > 0.0 ? d / a : Complex(1.0, 0.0));
      }
      return SquareMatrix(std::move(q), MatrixFlag::unitary);
    }
    case EnsembleKind::HaarOrthogonal: {
      const SquareMatrix g = sample_ginibre(n, Field::real, seed);
      Eigen::MatrixXd gr = g.entries().real();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(gr);
      Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd& r = qr.matrixQR();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
      }
      return SquareMatrix(q.cast<Complex>(), MatrixFlag::unitary);
    }
    case EnsembleKind::HaarSymplectic: {
      const SquareMatrix g = sample_ginibre(n, Field::quaternion, seed);
      return SquareMatrix(detail::symplectic_orthonormalize(g.entries()), MatrixFlag::unitary | MatrixFlag::selfdual);
    }
    default:
      throw std::invalid_argument("sample_haar: kind must be HaarUnitary, HaarOrthogonal or HaarSymplectic");
  }
}

inline SquareMatrix sample_haar_unitary(Eigen::Index n, Seed seed) {
  return sample_haar(EnsembleSpec{EnsembleKind::HaarUnitary, n, std::nullopt}, seed);
}

/// V diag(data) V* with V a fresh Haar unitary drawn from `seed`.
///
/// Constant data returns c I exactly. Hermitian flag iff all data are real,
/// unitary flag iff all |d_i| = 1.
inline SquareMatrix conjugate_by_haar(const std::vector<Complex>& data, Seed seed) {
  require(!data.empty(), "conjugate_by_haar: diagonal data must be nonempty");
  const auto n = static_cast<Eigen::Index>(data.size());
  const bool real = std::all_of(data.begin(), data.end(), [](Complex d) { return d.imag() == 0.0; });
  const bool on_circle =
      std::all_of(data.begin(), data.end(), [](Complex d) { return std::abs(std::abs(d) - 1.0) <= 1e-12; });
  MatrixFlags flags;
  flags.set(MatrixFlag::hermitian, real);
  flags.set(MatrixFlag::unitary, on_circle);

  if (std::all_of(data.begin(), data.end(), [&](Complex d) { return d == data.front(); })) {
    return SquareMatrix(CMatrix::Identity(n, n) * data.front(), flags);
  }
  const SquareMatrix v = sample_haar_unitary(n, seed);
  CMatrix scaled = v.entries();
  for (Eigen::Index j = 0; j < n; ++j) scaled.col(j) *= data[static_cast<std::size_t>(j)];
  CMatrix m = scaled * v.entries().adjoint();
  if (real) m = ((m + m.adjoint()) * 0.5).eval();
  return SquareMatrix(std::move(m), flags);
}

/// Uniformly random permutation matrix, P(i, pi(i)) = 1 (Fisher-Yates).
inline std::vector<Eigen::Index> sample_permutation_indices(Eigen::Index n, Seed seed) {
  require(n >= 1, "sample_permutation: dimension must be positive");
  PhiloxEngine eng(seed);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(eng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

inline SquareMatrix sample_permutation(Eigen::Index n, Seed seed) {
  const auto perm = sample_permutation_indices(n, seed);
  CMatrix p = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  return SquareMatrix(std::move(p), MatrixFlag::unitary);
}

/// Dispatches on spec.kind.
inline SquareMatrix sample(const EnsembleSpec& spec, Seed seed) {
  spec.validate();
  switch (spec.kind) {
    case EnsembleKind::GUE:
    case EnsembleKind::GOE:
    case EnsembleKind::GSE:
      return sample_gaussian_hermitian(spec, seed);
    case EnsembleKind::HaarUnitary:
    case EnsembleKind::HaarOrthogonal:
    case EnsembleKind::HaarSymplectic:
      return sample_haar(spec, seed);
    case EnsembleKind::Permutation:
      return sample_permutation(spec.dimension, seed);
    case EnsembleKind::ConjugatedDiagonal:
      return conjugate_by_haar(*spec.diagonal_data, seed);
  }
  throw std::invalid_argument("sample: unknown kind");
}

}  // namespace sfree::ensembles
