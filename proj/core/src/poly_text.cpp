#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>

#include "s2ctl/sphere_poly.hpp"

namespace s2ctl {

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  bool AtEnd() {
    SkipSpace();
    return pos_ >= text_.size();
  }
  char Peek() {
    SkipSpace();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  char Take() {
    SkipSpace();
    return text_[pos_++];
  }
  bool PeekDigit() {
    const char c = Peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  std::string Digits() {
    SkipSpace();
    std::string out;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_])))
      out.push_back(text_[pos_++]);
    return out;
  }

  // Integer, decimal ("0.25") or fraction ("3/2"), converted exactly.
  Rational Number() {
    std::string whole = Digits();
    Rational value = whole.empty() ? Rational(0) : Rational(mpz_class(whole));
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      std::string frac;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        frac.push_back(text_[pos_++]);
      if (whole.empty() && frac.empty()) Fail("expected digits");
      if (!frac.empty()) {
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        Rational f(mpz_class(frac), scale);
        f.canonicalize();
        value += f;
      }
    } else if (whole.empty()) {
      Fail("expected a number");
    }
    if (Peek() == '/') {
      Take();
      std::string den = Digits();
      if (den.empty()) Fail("expected denominator after '/'");
      mpz_class d(den);
      if (d == 0) Fail("zero denominator");
      value /= Rational(d);
    }
    return value;
  }

  [[noreturn]] void Fail(const std::string& what) const {
    std::ostringstream msg;
    msg << "polynomial parse error at offset " << pos_ << ": " << what
        << " in \"" << text_ << "\"";
    throw std::invalid_argument(msg.str());
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

bool IsVariable(char c) { return c == 'x' || c == 'y' || c == 'z'; }

}  // namespace

AmbientPolynomial ParseAmbient(std::string_view text) {
  Lexer lex(text);
  AmbientPolynomial out;
  if (lex.AtEnd()) lex.Fail("empty input");
  bool first = true;
  while (!lex.AtEnd()) {
    int sign = 1;
    if (lex.Peek() == '+' || lex.Peek() == '-') {
      sign = lex.Take() == '-' ? -1 : 1;
    } else if (!first) {
      lex.Fail("expected '+' or '-'");
    }
    first = false;

    Rational coeff(sign);
    Monomial mono;
    bool any_factor = false;
    while (!lex.AtEnd()) {
      const char c = lex.Peek();
      if (c == '*') {
        if (!any_factor) lex.Fail("unexpected '*'");
        lex.Take();
        continue;
      }
      if (lex.PeekDigit()) {
        coeff *= lex.Number();
      } else if (IsVariable(c)) {
        lex.Take();
        int exponent = 1;
        if (lex.Peek() == '^') {
          lex.Take();
          std::string e = lex.Digits();
          if (e.empty()) lex.Fail("expected exponent after '^'");
          exponent = std::stoi(e);
        }
        if (c == 'x') mono.x += exponent;
        else if (c == 'y') mono.y += exponent;
        else mono.z += exponent;
      } else {
        break;
      }
      any_factor = true;
    }
    if (!any_factor) lex.Fail("expected a term");
    out.AddTerm(mono, coeff);
  }
  return out;
}

SpherePolynomial ParsePolynomial(std::string_view text) {
  return Reduce(ParseAmbient(text));
}

std::string ToString(const Monomial& m) {
  std::string out;
  auto factor = [&out](char var, int e) {
    if (e == 0) return;
    if (!out.empty()) out.push_back(' ');
    out.push_back(var);
    if (e > 1) out += "^" + std::to_string(e);
  };
  factor('x', m.x);
  factor('y', m.y);
  factor('z', m.z);
  return out;
}

namespace {

std::string FormatTerms(const TermMap& terms) {
  if (terms.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms) {
    const bool negative = c < 0;
    Rational magnitude = negative ? Rational(-c) : c;
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    const std::string mono = ToString(m);
    if (mono.empty()) {
      out += magnitude.get_str();
    } else {
      if (magnitude != 1) out += magnitude.get_str() + " ";
      out += mono;
    }
  }
  return out;
}

}  // namespace

std::string ToString(const SpherePolynomial& p) { return FormatTerms(p.terms()); }

std::string ToString(const AmbientPolynomial& p) {
  return FormatTerms(p.terms());
}

}  // namespace s2ctl
