#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>

#include "sfree/core.hpp"

namespace sfree {

/// Structural properties a SquareMatrix may carry.
///
/// `selfdual` means M = J conj(M) J^T with J = [[0, I], [-I, 0]], i.e. M is the
/// 2n x 2n complex image of an n x n quaternion matrix. For Hermitian M this is
/// the usual self-duality of the symplectic ensemble.
enum class MatrixFlag : std::uint8_t { hermitian = 1, unitary = 2, selfdual = 4 };

class MatrixFlags {
 public:
  constexpr MatrixFlags() = default;
  constexpr MatrixFlags(MatrixFlag f) : bits_(static_cast<std::uint8_t>(f)) {}  // NOLINT

  [[nodiscard]] constexpr bool has(MatrixFlag f) const { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
  constexpr MatrixFlags& set(MatrixFlag f, bool on = true) {
    if (on) {
      bits_ |= static_cast<std::uint8_t>(f);
    } else {
      bits_ &= static_cast<std::uint8_t>(~static_cast<std::uint8_t>(f));
    }
    return *this;
  }
  [[nodiscard]] constexpr std::uint8_t bits() const { return bits_; }
  static constexpr MatrixFlags from_bits(std::uint8_t b) {
    MatrixFlags f;
    f.bits_ = b & 7;
    return f;
  }

  friend constexpr MatrixFlags operator|(MatrixFlags a, MatrixFlags b) { return from_bits(a.bits_ | b.bits_); }
  friend constexpr bool operator==(MatrixFlags, MatrixFlags) = default;

 private:
  std::uint8_t bits_ = 0;
};

constexpr MatrixFlags operator|(MatrixFlag a, MatrixFlag b) { return MatrixFlags(a) | MatrixFlags(b); }

inline constexpr double kHermitianTolerance = 1e-12;  // relative to max|A|
inline constexpr double kUnitaryTolerance = 1e-10;    // absolute on A A* - I
inline constexpr double kSelfDualTolerance = 1e-12;   // relative to max|A|

/// Standard skew form J = [[0, I_n], [-I_n, 0]] of size 2n.
inline CMatrix skew_form(Eigen::Index two_n) {
  require(two_n % 2 == 0, "skew_form: size must be even");
  const Eigen::Index n = two_n / 2;
  CMatrix j = CMatrix::Zero(two_n, two_n);
  j.topRightCorner(n, n).setIdentity();
  j.bottomLeftCorner(n, n) = -CMatrix::Identity(n, n);
  return j;
}

inline double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// max|A - A*| / max(max|A|, tiny).
inline double hermitian_residual(const CMatrix& a) {
  const double scale = std::max(max_abs(a), 1e-300);
  return max_abs(a - a.adjoint()) / scale;
}

/// max|A A* - I|.
inline double unitary_residual(const CMatrix& a) {
  return max_abs(a * a.adjoint() - CMatrix::Identity(a.rows(), a.cols()));
}

/// max|J conj(A) J^T - A| / max|A|; infinite for odd sizes.
inline double selfdual_residual(const CMatrix& a) {
  if (a.rows() % 2 != 0) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = a.rows() / 2;
  // J conj(A) J^T written blockwise: [[conj(D), -conj(C)], [-conj(B), conj(A11)]].
  CMatrix m(a.rows(), a.cols());
  m.topLeftCorner(n, n) = a.bottomRightCorner(n, n).conjugate();
  m.topRightCorner(n, n) = -a.bottomLeftCorner(n, n).conjugate();
  m.bottomLeftCorner(n, n) = -a.topRightCorner(n, n).conjugate();
  m.bottomRightCorner(n, n) = a.topLeftCorner(n, n).conjugate();
  const double scale = std::max(max_abs(a), 1e-300);
  return max_abs(m - a) / scale;
}

/// Dense complex N x N matrix with structural flags.
///
/// Flags are claims made by whoever builds the matrix; samplers set them by
/// construction. Use `SquareMatrix::detect` for matrices of unknown origin.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(CMatrix entries, MatrixFlags flags = {}) : entries_(std::move(entries)), flags_(flags) {
    require(entries_.rows() == entries_.cols(), "SquareMatrix: entries must be square");
  }

  /// Wraps `entries` and sets every flag whose residual is within tolerance.
  static SquareMatrix detect(CMatrix entries) {
    MatrixFlags f;
    f.set(MatrixFlag::hermitian, hermitian_residual(entries) <= kHermitianTolerance);
    f.set(MatrixFlag::unitary, entries.rows() > 0 && unitary_residual(entries) <= kUnitaryTolerance);
    f.set(MatrixFlag::selfdual, entries.rows() > 0 && selfdual_residual(entries) <= kSelfDualTolerance);
    return SquareMatrix(std::move(entries), f);
  }

  [[nodiscard]] Eigen::Index dimension() const { return entries_.rows(); }
  [[nodiscard]] const CMatrix& entries() const& { return entries_; }
  [[nodiscard]] CMatrix&& entries() && { return std::move(entries_); }
  [[nodiscard]] MatrixFlags flags() const { return flags_; }
  [[nodiscard]] bool is(MatrixFlag f) const { return flags_.has(f); }

  [[nodiscard]] Complex operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  [[nodiscard]] SquareMatrix adjoint() const {
    MatrixFlags f = flags_;
    return SquareMatrix(entries_.adjoint(), f);
  }

 private:
  CMatrix entries_;
  MatrixFlags flags_;
};

}  // namespace sfree
