#pragma once

// Exact polynomial algebra on the unit sphere x^2 + y^2 + z^2 = 1.
//
// Polynomials are stored in the canonical form of the quotient ring
// Q[x, y, z] / (x^2 + y^2 + z^2 - 1): every z^2 is rewritten as 1 - x^2 - y^2,
// so each monomial has z-exponent 0 or 1. Two SpherePolynomials agree as
// functions on S^2 iff their term maps are identical.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace s2ctl {

/// Arbitrary-precision rational, always in lowest terms with positive
/// denominator (GMP canonicalizes after every arithmetic operation).
using Rational = mpq_class;

Rational MakeRational(long numerator, long denominator = 1);

struct Monomial {
  int x = 0;
  int y = 0;
  int z = 0;

  constexpr int degree() const { return x + y + z; }
  constexpr bool operator==(const Monomial&) const = default;
};

/// Graded lexicographic order with x > y > z, largest first. Maps keyed with
/// this comparator iterate from the leading monomial down.
struct GrlexDescending {
  bool operator()(const Monomial& a, const Monomial& b) const {
    if (a.degree() != b.degree()) return a.degree() > b.degree();
    if (a.x != b.x) return a.x > b.x;
    if (a.y != b.y) return a.y > b.y;
    return a.z > b.z;
  }
};

using TermMap = std::map<Monomial, Rational, GrlexDescending>;

/// Polynomial in three ambient variables with no sphere relation applied.
/// Used for representatives, derivatives and homogeneous splitting.
class AmbientPolynomial {
 public:
  AmbientPolynomial() = default;
  explicit AmbientPolynomial(TermMap terms);

  static AmbientPolynomial Constant(const Rational& c);
  static AmbientPolynomial Variable(int axis);  // 0 = x, 1 = y, 2 = z
  static AmbientPolynomial Term(const Monomial& m, const Rational& c);
  /// x^2 + y^2 + z^2 - 1.
  static AmbientPolynomial SphereRelation();

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  AmbientPolynomial& operator+=(const AmbientPolynomial& other);
  AmbientPolynomial& operator-=(const AmbientPolynomial& other);
  AmbientPolynomial& operator*=(const Rational& c);
  friend AmbientPolynomial operator+(AmbientPolynomial a,
                                     const AmbientPolynomial& b) {
    return a += b;
  }
  friend AmbientPolynomial operator-(AmbientPolynomial a,
                                     const AmbientPolynomial& b) {
    return a -= b;
  }
  friend AmbientPolynomial operator*(const AmbientPolynomial& a,
                                     const AmbientPolynomial& b);
  friend AmbientPolynomial operator*(AmbientPolynomial a, const Rational& c) {
    return a *= c;
  }
  bool operator==(const AmbientPolynomial& other) const {
    return terms_ == other.terms_;
  }

  AmbientPolynomial Derivative(int axis) const;
  /// Flat Laplacian d^2/dx^2 + d^2/dy^2 + d^2/dz^2.
  AmbientPolynomial FlatLaplacian() const;
  /// Terms of total degree exactly n.
  AmbientPolynomial HomogeneousPart(int n) const;

  void AddTerm(const Monomial& m, const Rational& c);

 private:
  TermMap terms_;
};

class SpherePolynomial;

/// Canonical form modulo the sphere relation: z^(2k+r) -> (1-x^2-y^2)^k z^r.
SpherePolynomial Reduce(const AmbientPolynomial& raw);

class SpherePolynomial {
 public:
  SpherePolynomial() = default;

  static SpherePolynomial Constant(const Rational& c);
  static SpherePolynomial X();
  static SpherePolynomial Y();
  static SpherePolynomial Z();
  /// x^a y^b z^c, reduced.
  static SpherePolynomial FromMonomial(const Monomial& m,
                                       const Rational& c = Rational(1));

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Max total degree over stored terms; 0 for the zero polynomial.
  int degree() const;
  /// Leading monomial in graded-lex order. Precondition: !is_zero().
  const Monomial& leading_monomial() const { return terms_.begin()->first; }
  Rational coefficient(const Monomial& m) const;

  /// The canonical representative as an ambient polynomial.
  AmbientPolynomial representative() const { return AmbientPolynomial(terms_); }

  SpherePolynomial& operator+=(const SpherePolynomial& other);
  SpherePolynomial& operator-=(const SpherePolynomial& other);
  SpherePolynomial& operator*=(const Rational& c);
  SpherePolynomial operator-() const;
  friend SpherePolynomial operator+(SpherePolynomial a,
                                    const SpherePolynomial& b) {
    return a += b;
  }
  friend SpherePolynomial operator-(SpherePolynomial a,
                                    const SpherePolynomial& b) {
    return a -= b;
  }
  friend SpherePolynomial operator*(SpherePolynomial a, const Rational& c) {
    return a *= c;
  }
  friend SpherePolynomial operator*(const Rational& c, SpherePolynomial a) {
    return a *= c;
  }
  friend SpherePolynomial operator*(const SpherePolynomial& a,
                                    const SpherePolynomial& b);
  bool operator==(const SpherePolynomial& other) const {
    return terms_ == other.terms_;
  }

 private:
  friend SpherePolynomial Reduce(const AmbientPolynomial& raw);
  void AddCanonical(const Monomial& m, const Rational& c);

  TermMap terms_;
};

SpherePolynomial Add(const SpherePolynomial& p, const SpherePolynomial& q);
SpherePolynomial Scale(const SpherePolynomial& p, const Rational& c);
SpherePolynomial Multiply(const SpherePolynomial& p, const SpherePolynomial& q);

/// Tangential gradient as three ambient components; tangent to the sphere.
struct TangentField {
  std::array<SpherePolynomial, 3> components;

  /// x V1 + y V2 + z V3, which is zero for every field returned by
  /// TangentialGradient.
  SpherePolynomial normal_component() const;
};

/// Component i is reduce(sum_j dp/dx_j (delta_ij - x_i x_j)), with the
/// derivatives taken on the canonical representative.
TangentField TangentialGradient(const SpherePolynomial& p);
/// Same operator on an arbitrary representative; the result does not depend
/// on which representative is chosen.
TangentField TangentialGradient(const AmbientPolynomial& representative);

/// Riemannian inner product g(grad p, grad q), computed as the R^3 dot
/// product of the tangential gradients.
SpherePolynomial GradInner(const SpherePolynomial& p, const SpherePolynomial& q);

/// Laplace-Beltrami operator: sum over homogeneous parts P_n of the
/// representative of (flat Laplacian P_n - n(n+1) P_n), reduced.
SpherePolynomial LaplaceBeltrami(const SpherePolynomial& p);
SpherePolynomial LaplaceBeltrami(const AmbientPolynomial& representative);

/// [phi, [phi, H0]] h with H0 = -LaplaceBeltrami, expanded through three
/// Laplacians: -(Lap(phi^2 h) - 2 phi Lap(phi h) + phi^2 Lap h).
SpherePolynomial Ad2H0(const SpherePolynomial& phi, const SpherePolynomial& h);

/// [phi, ad^2_phi(H0)] h = phi * Ad2H0(phi, h) - Ad2H0(phi, phi h).
SpherePolynomial Ad3H0(const SpherePolynomial& phi, const SpherePolynomial& h);

struct UnitVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Floating-point evaluation at a point on the sphere. Throws
/// std::domain_error when | |point| - 1 | exceeds 1e-12.
double Evaluate(const SpherePolynomial& p, const UnitVector& point);

/// Mean value over the sphere, (1 / 4 pi) * integral of p dsigma, exactly.
/// Odd exponents integrate to zero; x^2a y^2b z^2c gives
/// (2a-1)!! (2b-1)!! (2c-1)!! / (2(a+b+c)+1)!!.
Rational SphereMean(const SpherePolynomial& p);

/// All canonical monomials (z-exponent <= 1) of total degree <= n, in
/// graded-lex descending order. There are (n+1)^2 of them.
std::vector<Monomial> CanonicalMonomials(int max_degree);

// Text form: terms separated by + or -, variables x, y, z with optional
// ^exponent, optional '*' between factors, rational coefficients p/q or
// decimals. Examples: "3/2 x^2 y - z + 1", "4xz", "1 - z^2".

/// Throws std::invalid_argument on malformed input.
AmbientPolynomial ParseAmbient(std::string_view text);
SpherePolynomial ParsePolynomial(std::string_view text);
std::string ToString(const SpherePolynomial& p);
std::string ToString(const AmbientPolynomial& p);
std::string ToString(const Monomial& m);

namespace testing {

/// While alive, Reduce on the current thread applies the corrupted rule
/// z^2 -> 1 - x^2 + y^2. Negative control for the identity suites.
class ScopedCorruptRewrite {
 public:
  ScopedCorruptRewrite();
  ~ScopedCorruptRewrite();
  ScopedCorruptRewrite(const ScopedCorruptRewrite&) = delete;
  ScopedCorruptRewrite& operator=(const ScopedCorruptRewrite&) = delete;

 private:
  bool previous_;
};

}  // namespace testing

}  // namespace s2ctl
