#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/rational.hpp"

namespace twistlab {

/// Exponent vector over all coordinates, factors concatenated:
/// (z_{0,0}..z_{0,n_0}, z_{1,0}.., ..).
using Exponents = std::vector<unsigned>;

/// Multihomogeneous polynomial with exact rational coefficients over
/// grouped variable blocks. factor_dims holds the projective dimension
/// n_f of each factor (n_f + 1 coordinates). The single-factor case
/// models ordinary homogeneous polynomials.
class MultiHomogeneousPolynomial {
 public:
  std::vector<int> factor_dims;
  std::map<Exponents, Rational> terms;
  std::vector<int> multidegree;

  int factor_count() const { return static_cast<int>(factor_dims.size()); }

  int total_vars() const {
    int t = 0;
    for (int d : factor_dims) t += d + 1;
    return t;
  }

  int var_offset(int factor) const {
    int off = 0;
    for (int f = 0; f < factor; ++f) off += factor_dims[f] + 1;
    return off;
  }

  int var_index(int factor, int i) const { return var_offset(factor) + i; }

  bool is_zero() const { return terms.empty(); }

  std::vector<int> degree_of(const Exponents& e) const {
    std::vector<int> deg(factor_count(), 0);
    int v = 0;
    for (int f = 0; f < factor_count(); ++f) {
      for (int i = 0; i <= factor_dims[f]; ++i, ++v) deg[f] += static_cast<int>(e[v]);
    }
    return deg;
  }

  void add_term(const Exponents& e, const Rational& coeff) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (coeff != 0) terms[e] = coeff;
    } else {
      it->second += coeff;
      if (it->second == 0) terms.erase(it);
    }
  }

  /// Recompute the multidegree and reject inhomogeneous or zero input.
  void finalize() {
    if (terms.empty()) {
      throw Error(ErrorCode::ZeroPolynomial, "polynomial has no surviving terms");
    }
    multidegree = degree_of(terms.begin()->first);
    for (const auto& [e, c] : terms) {
      if (degree_of(e) != multidegree) {
        throw Error(ErrorCode::NotHomogeneous,
                    "term " + monomial_string(e) + " breaks multihomogeneity");
      }
    }
  }

  template <typename CT>
  CT evaluate(const std::vector<CT>& point) const {
    CT acc{};
    for (const auto& [e, c] : terms) {
      CT term = coefficient_as<CT>(c);
      for (int v = 0; v < total_vars(); ++v) {
        for (unsigned k = 0; k < e[v]; ++k) term = term * point[v];
      }
      acc = acc + term;
    }
    return acc;
  }

  MultiHomogeneousPolynomial partial(int var) const {
    MultiHomogeneousPolynomial out;
    out.factor_dims = factor_dims;
    for (const auto& [e, c] : terms) {
      if (e[var] == 0) continue;
      Exponents d = e;
      d[var] -= 1;
      out.add_term(d, c * static_cast<int>(e[var]));
    }
    if (!out.terms.empty()) out.multidegree = out.degree_of(out.terms.begin()->first);
    return out;
  }

  std::string monomial_string(const Exponents& e) const {
    std::string s;
    int v = 0;
    for (int f = 0; f < factor_count(); ++f) {
      for (int i = 0; i <= factor_dims[f]; ++i, ++v) {
        if (e[v] == 0) continue;
        if (!s.empty()) s += "*";
        s += "z";
        if (factor_count() > 1) {
          s += std::to_string(f) + "_" + std::to_string(i);
        } else {
          s += std::to_string(i);
        }
        if (e[v] > 1) s += "^" + std::to_string(e[v]);
      }
    }
    return s;
  }

  /// Canonical form: terms in descending lexicographic exponent order;
  /// parse of the canonical form reproduces the polynomial exactly.
  std::string to_string() const {
    if (terms.empty()) return "0";
    std::string out;
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
      const Rational& c = it->second;
      bool negative = c < 0;
      Rational mag = negative ? Rational(-c) : c;
      if (out.empty()) {
        if (negative) out += "-";
      } else {
        out += negative ? " - " : " + ";
      }
      std::string mono = monomial_string(it->first);
      if (mono.empty()) {
        out += rational_to_string(mag);
      } else if (mag == 1) {
        out += mono;
      } else {
        out += rational_to_string(mag) + "*" + mono;
      }
    }
    return out;
  }

  bool operator==(const MultiHomogeneousPolynomial& o) const {
    return factor_dims == o.factor_dims && terms == o.terms;
  }

 private:
  template <typename CT>
  static CT coefficient_as(const Rational& c);
};

template <>
inline std::complex<double> MultiHomogeneousPolynomial::coefficient_as<std::complex<double>>(
    const Rational& c) {
  return {to_double(c), 0.0};
}

template <>
inline GaussianRational MultiHomogeneousPolynomial::coefficient_as<GaussianRational>(
    const Rational& c) {
  return GaussianRational(c);
}

namespace detail {

struct PolyLexer {
  const std::string& text;
  std::size_t pos = 0;

  explicit PolyLexer(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool accept(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw Error(ErrorCode::SyntaxError, what + " at position " + std::to_string(pos));
  }

  BigInt integer() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail("expected an integer");
    return BigInt(text.substr(start, pos - start));
  }
};

}  // namespace detail

/// Parse one polynomial in the grammar
///   expr  := ['+'|'-'] term (('+'|'-') term)*
///   term  := coeff ('*' monom)* | monom ('*' monom)*
///   monom := 'z' INT ('_' INT)? ('^' INT)?
///   coeff := INT | INT '/' INT
/// Single-factor variables are written zI; with several factors they must
/// be written zF_I. Whitespace is insignificant.
inline MultiHomogeneousPolynomial parse_poly(const std::string& text,
                                             const std::vector<int>& factor_dims) {
  if (factor_dims.empty()) throw Error(ErrorCode::BadShape, "factor_dims must be nonempty");
  MultiHomogeneousPolynomial poly;
  poly.factor_dims = factor_dims;
  detail::PolyLexer lex(text);

  auto parse_monomial = [&](Exponents& expo) {
    if (!lex.accept('z')) lex.fail("expected a variable");
    BigInt first = lex.integer();
    int factor = 0, index = 0;
    if (lex.accept('_')) {
      factor = static_cast<int>(first);
      index = static_cast<int>(lex.integer());
    } else {
      if (poly.factor_count() > 1) {
        lex.fail("multi-factor systems need zF_I variables");
      }
      index = static_cast<int>(first);
    }
    if (factor < 0 || factor >= poly.factor_count()) lex.fail("factor index out of range");
    if (index < 0 || index > factor_dims[factor]) lex.fail("variable index out of range");
    unsigned power = 1;
    if (lex.accept('^')) power = static_cast<unsigned>(lex.integer());
    expo[poly.var_index(factor, index)] += power;
  };

  bool first_term = true;
  while (true) {
    int sign = 1;
    if (lex.accept('+')) {
      sign = 1;
    } else if (lex.accept('-')) {
      sign = -1;
    } else if (!first_term) {
      if (lex.eof()) break;
      lex.fail("expected '+' or '-'");
    }
    if (lex.eof()) lex.fail("expected a term");
    first_term = false;

    Rational coeff(sign);
    Exponents expo(poly.total_vars(), 0u);
    if (std::isdigit(static_cast<unsigned char>(lex.peek()))) {
      BigInt num = lex.integer();
      if (lex.accept('/')) {
        BigInt den = lex.integer();
        if (den == 0) lex.fail("zero denominator");
        coeff *= Rational(num, den);
      } else {
        coeff *= Rational(num);
      }
      while (lex.accept('*')) parse_monomial(expo);
    } else if (lex.peek() == 'z') {
      parse_monomial(expo);
      while (lex.accept('*')) parse_monomial(expo);
    } else {
      lex.fail("expected a coefficient or a variable");
    }
    poly.add_term(expo, coeff);
    if (lex.eof()) break;
  }

  poly.finalize();
  return poly;
}

/// System of multihomogeneous polynomials sharing one variable layout.
struct PolySystem {
  std::vector<MultiHomogeneousPolynomial> polys;

  int m() const { return static_cast<int>(polys.size()); }
  const std::vector<int>& factor_dims() const { return polys.at(0).factor_dims; }
  int n() const {  // sum of projective dimensions
    int t = 0;
    for (int d : factor_dims()) t += d;
    return t;
  }
  int total_vars() const { return polys.at(0).total_vars(); }
};

inline PolySystem make_system(std::vector<MultiHomogeneousPolynomial> polys) {
  if (polys.empty()) throw Error(ErrorCode::BadShape, "system needs at least one polynomial");
  PolySystem sys;
  sys.polys = std::move(polys);
  for (const auto& p : sys.polys) {
    if (p.factor_dims != sys.factor_dims()) {
      throw Error(ErrorCode::BadShape, "polynomials disagree on factor dimensions");
    }
    for (int d : p.multidegree) {
      if (d <= 0)
        throw Error(ErrorCode::BadDegrees, "multidegrees must have no zero entries");
    }
  }
  if (sys.m() >= sys.n()) {
    throw Error(ErrorCode::BadShape,
                "need m < n for a positive-dimensional complete intersection");
  }
  return sys;
}

/// One polynomial per line; '#' starts a comment; blank lines ignored.
inline PolySystem parse_poly_file(const std::string& contents,
                                  const std::vector<int>& factor_dims) {
  std::vector<MultiHomogeneousPolynomial> polys;
  std::size_t start = 0;
  while (start <= contents.size()) {
    std::size_t end = contents.find('\n', start);
    std::string line = contents.substr(
        start, end == std::string::npos ? std::string::npos : end - start);
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (!blank) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      polys.push_back(parse_poly(line, factor_dims));
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return make_system(std::move(polys));
}

}  // namespace twistlab
