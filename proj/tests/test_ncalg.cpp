#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "sfree/ensembles/ensembles.hpp"
#include "sfree/ncalg/polynomial.hpp"
#include "sfree/ncalg/text.hpp"
#include "sfree/spectral/decomposition.hpp"

using namespace sfree;
using namespace sfree::ncalg;
using sfree::ensembles::Seed;

namespace {

StarLetter x(int i) { return {i, false}; }
StarLetter xs(int i) { return {i, true}; }

std::vector<SquareMatrix> ginibres(int p, Eigen::Index n, std::uint64_t s) {
  std::vector<SquareMatrix> v;
  for (int i = 0; i < p; ++i) {
    v.push_back(ensembles::sample_ginibre(n, ensembles::Field::complex, Seed{s, std::uint64_t(i)}));
  }
  return v;
}

std::vector<SquareMatrix> haars(int p, Eigen::Index n, std::uint64_t s) {
  std::vector<SquareMatrix> v;
  for (int i = 0; i < p; ++i) v.push_back(ensembles::sample_haar_unitary(n, Seed{s, std::uint64_t(i)}));
  return v;
}

NcPolynomial random_polynomial(int p, Eigen::Index k, int terms, std::uint64_t s) {
  ensembles::PhiloxEngine eng(Seed{s, 77});
  NcPolynomial r(p, k);
  for (int t = 0; t < terms; ++t) {
    const int d = int(eng.below(4));
    std::vector<StarLetter> letters;
    for (int i = 0; i < d; ++i) letters.push_back({1 + int(eng.below(std::uint64_t(p))), eng.below(2) == 1});
    CMatrix c(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) c(a, b) = Complex(eng.normal(), eng.normal());
    }
    r.add_term(StarMonomial(letters), c);
  }
  return r;
}

}  // namespace

TEST(StarMonomial, AdjointReversesAndFlips) {
  const auto w = word({x(1), xs(2), x(3)});
  EXPECT_EQ(w.adjoint(), word({xs(3), x(2), xs(1)}));
  EXPECT_EQ(w.adjoint().adjoint(), w);
  EXPECT_EQ(w.degree(), 3u);
  EXPECT_TRUE(StarMonomial().is_unit());
  EXPECT_THROW(StarMonomial({{0, false}}), std::invalid_argument);
}

TEST(NcPolynomial, NoZeroTermsAndFixedK) {
  NcPolynomial p(2, 1);
  p.add_term(word({x(1)}), 2.0);
  p.add_term(word({x(1)}), -2.0);
  EXPECT_TRUE(p.is_zero());
  EXPECT_THROW(p.add_term(word({x(3)}), 1.0), std::invalid_argument);
  EXPECT_THROW(p.add_term(word({x(1)}), CMatrix::Identity(2, 2)), std::invalid_argument);
  EXPECT_THROW(NcPolynomial(2, 1) + NcPolynomial(2, 2), std::invalid_argument);
  EXPECT_THROW(NcPolynomial(2, 0), std::invalid_argument);
}

TEST(Evaluate, SingleLetterAndUnit) {
  const auto in = ginibres(1, 6, 1);
  const auto px = NcPolynomial::term(1, word({x(1)}));
  EXPECT_EQ(evaluate(px, in, 6).entries(), in[0].entries());
  const auto unit = NcPolynomial::term(1, StarMonomial(), Complex(3.0, 1.0));
  EXPECT_EQ(evaluate(unit, in, 6).entries(), CMatrix::Identity(6, 6) * Complex(3.0, 1.0));
  EXPECT_THROW(evaluate(px, {}, 6), std::invalid_argument);
  EXPECT_THROW(evaluate(px, in, 5), std::invalid_argument);
}

TEST(Evaluate, UnitaryTimesAdjointIsIdentity) {
  const auto in = haars(1, 50, 2);
  const auto m = evaluate(NcPolynomial::term(1, word({x(1), xs(1)})), in, 50);
  EXPECT_LE(max_abs(m.entries() - CMatrix::Identity(50, 50)), 1e-10);
  EXPECT_TRUE(m.is(MatrixFlag::hermitian));
}

TEST(Evaluate, KroneckerLayout) {
  const auto in = ginibres(2, 4, 3);
  CMatrix c(2, 2);
  c << 1.0, Complex(0, 2), 3.0, 4.0;
  const auto m = evaluate(NcPolynomial::term(2, word({x(1), x(2)}), c), in, 4).entries();
  const CMatrix w = in[0].entries() * in[1].entries();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) EXPECT_LE(max_abs(m.block(4 * a, 4 * b, 4, 4) - c(a, b) * w), 1e-14);
  }
}

TEST(Evaluate, SumOfThreeHaarUnitariesNearFreeValue) {
  NcPolynomial p(3, 1);
  for (int i = 1; i <= 3; ++i) p.add_term(word({x(i)}), 1.0);
  const double norm = spectral::operator_norm(evaluate(p, haars(3, 1000, 4), 1000));
  EXPECT_NEAR(norm, 2.0 * std::sqrt(2.0), 0.1);
}

TEST(Evaluate, LinearAndMultiplicative) {
  const auto in = ginibres(3, 8, 5);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_polynomial(3, 2, 5, s);
    const auto q = random_polynomial(3, 2, 4, s + 100);
    const Complex a(0.3, -1.2);
    const CMatrix lhs = evaluate(p + q * a, in, 8).entries();
    const CMatrix rhs = evaluate(p, in, 8).entries() + a * evaluate(q, in, 8).entries();
    EXPECT_LE(max_abs(lhs - rhs), 1e-10);
    const CMatrix prod = evaluate(p * q, in, 8).entries();
    const CMatrix direct = evaluate(p, in, 8).entries() * evaluate(q, in, 8).entries();
    EXPECT_LE(max_abs(prod - direct), 1e-9 * std::max(1.0, max_abs(direct)));
  }
  const auto w1 = word({x(1), xs(2)});
  const auto w2 = word({x(3), x(1)});
  const CMatrix cat = evaluate_word(w1 * w2, in, 8);
  EXPECT_LE(max_abs(cat - evaluate_word(w1, in, 8) * evaluate_word(w2, in, 8)), 1e-12);
}

TEST(Evaluate, NormInvariantUnderSimultaneousConjugation) {
  const auto in = ginibres(2, 30, 6);
  const CMatrix w = ensembles::sample_haar_unitary(30, Seed{6, 99}).entries();
  std::vector<SquareMatrix> conj;
  for (const auto& m : in) conj.emplace_back(w * m.entries() * w.adjoint());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = random_polynomial(2, 2, 6, s);
    EXPECT_NEAR(spectral::operator_norm(evaluate(p, in, 30)), spectral::operator_norm(evaluate(p, conj, 30)), 1e-9);
  }
}

TEST(Adjoint, Examples) {
  EXPECT_EQ(adjoint(NcPolynomial::term(1, word({x(1)}))), NcPolynomial::term(1, word({xs(1)})));
  const Complex a(2.0, 3.0);
  EXPECT_EQ(adjoint(NcPolynomial::term(2, word({x(1), x(2)}), a)),
            NcPolynomial::term(2, word({xs(2), xs(1)}), std::conj(a)));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = random_polynomial(3, 2, 6, s);
    EXPECT_EQ(adjoint(adjoint(p)), p);
  }
}

TEST(Adjoint, EvaluatesToMatrixAdjoint) {
  const auto in = ginibres(3, 7, 7);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = random_polynomial(3, 3, 6, s);
    EXPECT_LE(max_abs(evaluate(adjoint(p), in, 7).entries() - evaluate(p, in, 7).entries().adjoint()), 1e-10);
  }
}

TEST(HermitianParts, Examples) {
  NcPolynomial sa(1, 1);
  sa.add_term(word({x(1)}), 1.0).add_term(word({xs(1)}), 1.0);
  const auto [q0, r0] = hermitian_parts(sa);
  EXPECT_EQ(q0, sa);
  EXPECT_TRUE(r0.is_zero());

  const auto [q, r] = hermitian_parts(NcPolynomial::term(1, word({x(1)})));
  NcPolynomial eq(1, 1), er(1, 1);
  eq.add_term(word({x(1)}), 0.5).add_term(word({xs(1)}), 0.5);
  er.add_term(word({x(1)}), Complex(0, -0.5)).add_term(word({xs(1)}), Complex(0, 0.5));
  EXPECT_EQ(q, eq);
  EXPECT_EQ(r, er);
}

TEST(HermitianParts, RecombineOnRandomInputs) {
  const auto in = ginibres(2, 9, 8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_polynomial(2, 2, 6, s);
    const auto [q, r] = hermitian_parts(p);
    EXPECT_TRUE(is_selfadjoint(q));
    EXPECT_TRUE(is_selfadjoint(r));
    const CMatrix diff = evaluate(p, in, 9).entries() - evaluate(q, in, 9).entries() -
                         Complex(0, 1) * evaluate(r, in, 9).entries();
    EXPECT_LE(max_abs(diff), 1e-10);
  }
}

TEST(ReducedWords, Examples) {
  const auto h = reduced_words(2, 2, true);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0], word({x(1), x(2)}));
  EXPECT_EQ(h[1], word({x(2), x(1)}));
  EXPECT_TRUE(reduced_words(1, 2, true).empty());
  const auto f = reduced_words(2, 1, false);
  const std::set<StarMonomial> got(f.begin(), f.end());
  const std::set<StarMonomial> expected{word({x(1)}), word({xs(1)}), word({x(2)}), word({xs(2)})};
  EXPECT_EQ(got, expected);
  EXPECT_THROW(reduced_words(0, 1, true), std::invalid_argument);
}

// Oracle: filter all p^d index strings for adjacent-distinct ones.
TEST(ReducedWords, CountsMatchBruteForce) {
  for (int p = 1; p <= 4; ++p) {
    for (int d = 1; d <= 4; ++d) {
      int brute = 0;
      int total = 1;
      for (int i = 0; i < d; ++i) total *= p;
      for (int code = 0; code < total; ++code) {
        int c = code, prev = -1;
        bool ok = true;
        for (int i = 0; i < d; ++i) {
          const int j = c % p;
          c /= p;
          ok = ok && j != prev;
          prev = j;
        }
        brute += ok ? 1 : 0;
      }
      const auto hol = reduced_words(p, d, true);
      const auto full = reduced_words(p, d, false);
      EXPECT_EQ(int(hol.size()), brute);
      EXPECT_EQ(int(full.size()), brute * (1 << d));
      const std::set<StarMonomial> unique(full.begin(), full.end());
      EXPECT_EQ(unique.size(), full.size());
      for (const auto& w : full) {
        for (std::size_t i = 1; i < w.letters().size(); ++i) EXPECT_NE(w.letters()[i].index, w.letters()[i - 1].index);
      }
      for (const auto& w : hol) {
        for (const auto& l : w.letters()) EXPECT_FALSE(l.starred);
      }
    }
  }
}

TEST(L2Norm, Examples) {
  EXPECT_EQ(l2_coefficient_norm({1.0, 0.0, 0.0}), 1.0);
  EXPECT_EQ(l2_coefficient_norm({3.0, 4.0}), 5.0);
  EXPECT_NEAR(l2_coefficient_norm(std::vector<Complex>(7, 1.0)), std::sqrt(7.0), 1e-15);
  EXPECT_EQ(l2_coefficient_norm({}), 0.0);
}

TEST(Text, ParsesHandWrittenForms) {
  const auto p = parse_polynomial("x1 + x2 + x3");
  EXPECT_EQ(p.alphabet_size(), 3);
  EXPECT_EQ(p.terms().size(), 3u);
  const auto q = parse_polynomial("(2,-1) * x1 x2' x1 + (0.5,0) * 1");
  EXPECT_EQ(q.coefficient(word({x(1), xs(2), x(1)}))(0, 0), Complex(2, -1));
  EXPECT_EQ(q.coefficient(StarMonomial())(0, 0), Complex(0.5, 0));
  const auto m = parse_polynomial("p=3,k=2: [(0,0),(1,0);(1,0),(0,0)] * x1 + (2,0) x3'");
  EXPECT_EQ(m.alphabet_size(), 3);
  EXPECT_EQ(m.coefficient_dimension(), 2);
  EXPECT_EQ(m.coefficient(word({xs(3)})), CMatrix::Identity(2, 2) * 2.0);
  EXPECT_TRUE(parse_polynomial("p=2,k=1: 0").is_zero());
  EXPECT_THROW(parse_polynomial("x0"), std::invalid_argument);
  EXPECT_THROW(parse_polynomial("(1,0) *"), std::invalid_argument);
  EXPECT_THROW(parse_polynomial("[(1,0),(2,0)] x1"), std::invalid_argument);
  EXPECT_THROW(parse_polynomial("x1 x2 garbage"), std::invalid_argument);
  EXPECT_THROW(parse_polynomial("p=1,k=1: x2"), std::invalid_argument);
}

TEST(Text, RoundTripIsExact) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = random_polynomial(3, 1 + Eigen::Index(s % 3), 6, s);
    const std::string t = format_polynomial(p);
    const auto back = parse_polynomial(t);
    EXPECT_EQ(back, p) << t;
    EXPECT_EQ(format_polynomial(back), t);
  }
  const NcPolynomial zero(4, 2);
  EXPECT_EQ(parse_polynomial(format_polynomial(zero)), zero);
}
