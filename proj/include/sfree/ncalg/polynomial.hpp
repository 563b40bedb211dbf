#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <utility>
#include <vector>

#include "sfree/core.hpp"
#include "sfree/matrix.hpp"

namespace sfree::ncalg {

/// x_index or x_index^*; indices start at 1.
struct StarLetter {
  int index = 1;
  bool starred = false;

  [[nodiscard]] StarLetter adjoint() const { return {index, !starred}; }
  friend auto operator<=>(const StarLetter&, const StarLetter&) = default;
};

/// Ordered product of letters; the empty word is the unit.
class StarMonomial {
 public:
  StarMonomial() = default;
  explicit StarMonomial(std::vector<StarLetter> letters) : letters_(std::move(letters)) {
    for (const auto& l : letters_) require(l.index >= 1, "StarMonomial: letter index must be >= 1");
  }

  [[nodiscard]] const std::vector<StarLetter>& letters() const { return letters_; }
  [[nodiscard]] std::size_t degree() const { return letters_.size(); }
  [[nodiscard]] bool is_unit() const { return letters_.empty(); }
  [[nodiscard]] int max_index() const {
    int m = 0;
    for (const auto& l : letters_) m = std::max(m, l.index);
    return m;
  }

  /// Reversed word with every star flipped.
  [[nodiscard]] StarMonomial adjoint() const {
    std::vector<StarLetter> r;
    r.reserve(letters_.size());
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) r.push_back(it->adjoint());
    return StarMonomial(std::move(r));
  }

  friend StarMonomial operator*(const StarMonomial& a, const StarMonomial& b) {
    std::vector<StarLetter> r = a.letters_;
    r.insert(r.end(), b.letters_.begin(), b.letters_.end());
    return StarMonomial(std::move(r));
  }

  friend auto operator<=>(const StarMonomial&, const StarMonomial&) = default;

 private:
  std::vector<StarLetter> letters_;
};

inline StarMonomial word(std::initializer_list<StarLetter> letters) { return StarMonomial(std::vector<StarLetter>(letters)); }

/// Noncommutative *-polynomial in p letters with k x k complex coefficients.
///
/// Terms with an all-zero coefficient are never stored. Every coefficient has
/// the same size k; mixing sizes throws.
class NcPolynomial {
 public:
  using Terms = std::map<StarMonomial, CMatrix>;

  NcPolynomial() : NcPolynomial(1, 1) {}
  NcPolynomial(int alphabet_size, Eigen::Index coefficient_dimension) : p_(alphabet_size), k_(coefficient_dimension) {
    require(p_ >= 0, "NcPolynomial: alphabet size must be nonnegative");
    require(k_ >= 1, "NcPolynomial: coefficient dimension must be >= 1");
  }

  /// coeff * word.
  static NcPolynomial term(int alphabet_size, const StarMonomial& w, const CMatrix& coeff) {
    NcPolynomial r(alphabet_size, coeff.rows());
    r.add_term(w, coeff);
    return r;
  }
  static NcPolynomial term(int alphabet_size, const StarMonomial& w, Complex coeff = 1.0) {
    return term(alphabet_size, w, CMatrix::Constant(1, 1, coeff));
  }

  [[nodiscard]] int alphabet_size() const { return p_; }
  [[nodiscard]] Eigen::Index coefficient_dimension() const { return k_; }
  [[nodiscard]] const Terms& terms() const { return terms_; }
  [[nodiscard]] bool is_zero() const { return terms_.empty(); }

  [[nodiscard]] std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& [w, c] : terms_) d = std::max(d, w.degree());
    return d;
  }

  /// Coefficient of `w`, zero if absent.
  [[nodiscard]] CMatrix coefficient(const StarMonomial& w) const {
    const auto it = terms_.find(w);
    return it == terms_.end() ? CMatrix::Zero(k_, k_) : it->second;
  }

  NcPolynomial& add_term(const StarMonomial& w, const CMatrix& coeff) {
    require(coeff.rows() == k_ && coeff.cols() == k_, "NcPolynomial: coefficient size differs from k");
    require(w.max_index() <= p_, "NcPolynomial: letter index exceeds alphabet size");
    auto [it, inserted] = terms_.try_emplace(w, CMatrix::Zero(k_, k_));
    it->second += coeff;
    if ((it->second.array() == Complex(0.0)).all()) terms_.erase(it);
    return *this;
  }
  NcPolynomial& add_term(const StarMonomial& w, Complex coeff) {
    return add_term(w, CMatrix::Identity(k_, k_) * coeff);
  }

  NcPolynomial& operator+=(const NcPolynomial& o) {
    require_compatible(o);
    for (const auto& [w, c] : o.terms_) add_term(w, c);
    return *this;
  }
  NcPolynomial& operator-=(const NcPolynomial& o) { return *this += o * Complex(-1.0); }
  NcPolynomial& operator*=(Complex s) {
    if (s == Complex(0.0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [w, c] : terms_) c *= s;
    return *this;
  }

  friend NcPolynomial operator+(NcPolynomial a, const NcPolynomial& b) { return a += b; }
  friend NcPolynomial operator-(NcPolynomial a, const NcPolynomial& b) { return a -= b; }
  friend NcPolynomial operator*(NcPolynomial a, Complex s) { return a *= s; }
  friend NcPolynomial operator*(Complex s, NcPolynomial a) { return a *= s; }

  /// Product with coefficients multiplied as k x k matrices.
  friend NcPolynomial operator*(const NcPolynomial& a, const NcPolynomial& b) {
    a.require_compatible(b);
    NcPolynomial r(a.p_, a.k_);
    for (const auto& [wa, ca] : a.terms_) {
      for (const auto& [wb, cb] : b.terms_) r.add_term(wa * wb, ca * cb);
    }
    return r;
  }

  friend bool operator==(const NcPolynomial& a, const NcPolynomial& b) {
    if (a.p_ != b.p_ || a.k_ != b.k_ || a.terms_.size() != b.terms_.size()) return false;
    auto ib = b.terms_.begin();
    for (auto ia = a.terms_.begin(); ia != a.terms_.end(); ++ia, ++ib) {
      if (!(ia->first == ib->first) || ia->second != ib->second) return false;
    }
    return true;
  }

 private:
  void require_compatible(const NcPolynomial& o) const {
    require(p_ == o.p_, "NcPolynomial: alphabet sizes differ");
    require(k_ == o.k_, "NcPolynomial: coefficient dimensions differ");
  }

  int p_;
  Eigen::Index k_;
  Terms terms_;
};

/// Reversed words, flipped stars, conjugate-transposed coefficients.
inline NcPolynomial adjoint(const NcPolynomial& p) {
  NcPolynomial r(p.alphabet_size(), p.coefficient_dimension());
  for (const auto& [w, c] : p.terms()) r.add_term(w.adjoint(), c.adjoint());
  return r;
}

/// (Q, R) with P = Q + iR, Q = (P + P*)/2 and R = (P - P*)/(2i), both self-adjoint.
inline std::pair<NcPolynomial, NcPolynomial> hermitian_parts(const NcPolynomial& p) {
  const NcPolynomial ps = adjoint(p);
  return {(p + ps) * Complex(0.5, 0.0), (p - ps) * Complex(0.0, -0.5)};
}

inline bool is_selfadjoint(const NcPolynomial& p) { return adjoint(p) == p; }

/// Matrix of a word evaluated on the inputs; starred letters act by adjoint.
inline CMatrix evaluate_word(const StarMonomial& w, const std::vector<SquareMatrix>& inputs, Eigen::Index n) {
  if (w.is_unit()) return CMatrix::Identity(n, n);
  auto letter = [&](const StarLetter& l) -> CMatrix {
    const CMatrix& m = inputs[static_cast<std::size_t>(l.index - 1)].entries();
    return l.starred ? CMatrix(m.adjoint()) : m;
  };
  CMatrix acc = letter(w.letters().front());
  for (std::size_t i = 1; i < w.letters().size(); ++i) {
    const StarLetter& l = w.letters()[i];
    const CMatrix& m = inputs[static_cast<std::size_t>(l.index - 1)].entries();
    acc = l.starred ? CMatrix(acc * m.adjoint()) : CMatrix(acc * m);
  }
  return acc;
}

/// sum over terms of coeff (x) word(inputs), a kN x kN matrix.
///
/// Block (a, b) of the result is sum_w coeff_w(a, b) * word(inputs).
inline SquareMatrix evaluate(const NcPolynomial& p, const std::vector<SquareMatrix>& inputs, Eigen::Index n) {
  require(static_cast<int>(inputs.size()) == p.alphabet_size(), "evaluate: need one matrix per letter");
  for (const auto& m : inputs) require(m.dimension() == n, "evaluate: input dimension mismatch");
  const Eigen::Index k = p.coefficient_dimension();
  CMatrix out = CMatrix::Zero(k * n, k * n);
  for (const auto& [w, c] : p.terms()) {
    const CMatrix wm = evaluate_word(w, inputs, n);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        if (c(a, b) != Complex(0.0)) out.block(a * n, b * n, n, n) += c(a, b) * wm;
      }
    }
  }
  MatrixFlags flags;
  if (is_selfadjoint(p)) {
    out = ((out + out.adjoint()) * 0.5).eval();
    flags.set(MatrixFlag::hermitian);
  }
  return SquareMatrix(std::move(out), flags);
}

/// Words x_{j1}^{e1} ... x_{jd}^{ed} with j_i != j_{i+1}; star-free when holomorphic.
///
/// Count p (p-1)^{d-1}, times 2^d when stars are allowed. Lexicographic order.
inline std::vector<StarMonomial> reduced_words(int p, int d, bool holomorphic) {
  require(p >= 1, "reduced_words: alphabet size must be >= 1");
  require(d >= 1, "reduced_words: degree must be >= 1");
  std::vector<std::vector<int>> patterns{{}};
  for (int pos = 0; pos < d; ++pos) {
    std::vector<std::vector<int>> next;
    for (const auto& pat : patterns) {
      for (int j = 1; j <= p; ++j) {
        if (!pat.empty() && pat.back() == j) continue;
        auto q = pat;
        q.push_back(j);
        next.push_back(std::move(q));
      }
    }
    patterns = std::move(next);
  }
  std::vector<StarMonomial> out;
  const unsigned star_patterns = holomorphic ? 1u : (1u << static_cast<unsigned>(d));
  for (const auto& pat : patterns) {
    for (unsigned mask = 0; mask < star_patterns; ++mask) {
      std::vector<StarLetter> letters;
      for (int i = 0; i < d; ++i) {
        letters.push_back({pat[static_cast<std::size_t>(i)], ((mask >> (d - 1 - i)) & 1u) != 0});
      }
      out.emplace_back(std::move(letters));
    }
  }
  return out;
}

/// Euclidean norm of a coefficient vector.
inline double l2_coefficient_norm(const std::vector<Complex>& alpha) {
  double s = 0.0;
  for (const Complex& a : alpha) s += std::norm(a);
  return std::sqrt(s);
}

}  // namespace sfree::ncalg
