#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "sfree/ncalg/polynomial.hpp"

// Text form of an NcPolynomial:
//
//   poly   := [ "p=" INT "," "k=" INT ":" ] ( "0" | term { "+" term } )
//   term   := [ coeff [ "*" ] ] word
//   coeff  := scalar | "[" row { ";" row } "]"
//   row    := scalar { "," scalar }
//   scalar := "(" REAL "," REAL ")"
//   word   := "1" | letter { letter }
//   letter := "x" INT [ "'" ]
//
// A scalar coefficient c on a k > 1 polynomial means c times the identity.
// Without a header, p is the largest letter index and k the coefficient size.
// The printer writes shortest round-trip decimal forms, so print/parse is exact.

namespace sfree::ncalg {

namespace text_detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_scalar(Complex c) {
  return "(" + format_double(c.real()) + "," + format_double(c.imag()) + ")";
}

struct RawTerm {
  CMatrix coeff;
  bool scalar = true;
  StarMonomial w;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NcPolynomial parse() {
    int p = -1;
    Eigen::Index k = -1;
    skip_ws();
    if (peek_word("p=")) {
      pos_ += 2;
      p = static_cast<int>(parse_int());
      expect(',');
      skip_ws();
      if (!peek_word("k=")) fail("expected k=");
      pos_ += 2;
      k = parse_int();
      expect(':');
    }
    std::vector<RawTerm> raw;
    skip_ws();
    if (peek() == '0') {
      ++pos_;
    } else {
      for (;;) {
        raw.push_back(parse_term());
        skip_ws();
        if (pos_ >= s_.size()) break;
        expect('+');
      }
    }
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");

    int max_index = 0;
    Eigen::Index kk = 1;
    for (const auto& r : raw) {
      max_index = std::max(max_index, r.w.max_index());
      if (!r.scalar) kk = r.coeff.rows();
    }
    if (p < 0) p = max_index;
    if (k < 0) k = kk;
    NcPolynomial out(p, k);
    for (const auto& r : raw) {
      if (r.scalar) {
        out.add_term(r.w, r.coeff(0, 0));
      } else {
        out.add_term(r.w, r.coeff);
      }
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("polynomial text, position " + std::to_string(pos_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[nodiscard]] char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  [[nodiscard]] bool peek_word(std::string_view w) const { return s_.substr(pos_, w.size()) == w; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  long long parse_int() {
    skip_ws();
    long long v = 0;
    const auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (res.ec != std::errc()) fail("expected integer");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }

  double parse_double() {
    skip_ws();
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (res.ec != std::errc()) fail("expected number");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }

  Complex parse_scalar() {
    expect('(');
    const double re = parse_double();
    expect(',');
    const double im = parse_double();
    expect(')');
    return {re, im};
  }

  CMatrix parse_matrix() {
    expect('[');
    std::vector<std::vector<Complex>> rows(1);
    for (;;) {
      rows.back().push_back(parse_scalar());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() == ';') {
        ++pos_;
        rows.emplace_back();
      } else if (peek() == ']') {
        ++pos_;
        break;
      } else {
        fail("expected ',', ';' or ']'");
      }
    }
    const auto k = static_cast<Eigen::Index>(rows.size());
    CMatrix m(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != k) fail("coefficient is not square");
      for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
  }

  StarMonomial parse_word() {
    skip_ws();
    if (peek() == '1') {
      ++pos_;
      return {};
    }
    std::vector<StarLetter> letters;
    while (peek() == 'x') {
      ++pos_;
      const long long idx = parse_int();
      if (idx < 1) fail("letter index must be >= 1");
      bool starred = false;
      if (peek() == '\'') {
        starred = true;
        ++pos_;
      }
      letters.push_back({static_cast<int>(idx), starred});
      skip_ws();
    }
    if (letters.empty()) fail("expected word");
    return StarMonomial(std::move(letters));
  }

  RawTerm parse_term() {
    skip_ws();
    RawTerm t{CMatrix::Constant(1, 1, 1.0), true, {}};
    if (peek() == '(') {
      t.coeff(0, 0) = parse_scalar();
    } else if (peek() == '[') {
      t.coeff = parse_matrix();
      t.scalar = false;
    }
    skip_ws();
    if (peek() == '*') ++pos_;
    t.w = parse_word();
    return t;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace text_detail

inline NcPolynomial parse_polynomial(std::string_view text) { return text_detail::Parser(text).parse(); }

inline std::string format_word(const StarMonomial& w) {
  if (w.is_unit()) return "1";
  std::string out;
  for (std::size_t i = 0; i < w.letters().size(); ++i) {
    if (i > 0) out += ' ';
    out += 'x' + std::to_string(w.letters()[i].index);
    if (w.letters()[i].starred) out += '\'';
  }
  return out;
}

/// Header plus terms in monomial order; matrix coefficients are written in full.
inline std::string format_polynomial(const NcPolynomial& p) {
  std::string out = "p=" + std::to_string(p.alphabet_size()) + ",k=" + std::to_string(p.coefficient_dimension()) + ": ";
  if (p.is_zero()) return out + "0";
  bool first = true;
  for (const auto& [w, c] : p.terms()) {
    if (!first) out += " + ";
    first = false;
    if (c.rows() == 1) {
      out += text_detail::format_scalar(c(0, 0));
    } else {
      out += '[';
      for (Eigen::Index i = 0; i < c.rows(); ++i) {
        if (i > 0) out += ';';
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
          if (j > 0) out += ',';
          out += text_detail::format_scalar(c(i, j));
        }
      }
      out += ']';
    }
    out += " * " + format_word(w);
  }
  return out;
}

}  // namespace sfree::ncalg
