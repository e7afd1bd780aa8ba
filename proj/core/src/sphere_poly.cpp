#include "s2ctl/sphere_poly.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace s2ctl {

namespace {

thread_local bool corrupt_rewrite = false;

Rational Binomial(int n, int k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n),
               static_cast<unsigned long>(k));
  return Rational(r);
}

// (2n-1)!! with (-1)!! = 1.
mpz_class DoubleFactorialOdd(int n) {
  mpz_class r = 1;
  for (int k = 2 * n - 1; k > 1; k -= 2) r *= k;
  return r;
}

void Accumulate(TermMap& terms, const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms.erase(it);
  }
}

}  // namespace

Rational MakeRational(long numerator, long denominator) {
  if (denominator == 0) throw std::invalid_argument("zero denominator");
  Rational r(numerator, denominator);
  r.canonicalize();
  return r;
}

// ---------------------------------------------------------------------------
// AmbientPolynomial

AmbientPolynomial::AmbientPolynomial(TermMap terms) : terms_(std::move(terms)) {
  std::erase_if(terms_, [](const auto& kv) { return kv.second == 0; });
}

AmbientPolynomial AmbientPolynomial::Constant(const Rational& c) {
  return Term(Monomial{}, c);
}

AmbientPolynomial AmbientPolynomial::Variable(int axis) {
  Monomial m;
  if (axis == 0) m.x = 1;
  else if (axis == 1) m.y = 1;
  else if (axis == 2) m.z = 1;
  else throw std::out_of_range("axis must be 0, 1 or 2");
  return Term(m, Rational(1));
}

AmbientPolynomial AmbientPolynomial::Term(const Monomial& m,
                                          const Rational& c) {
  AmbientPolynomial p;
  p.AddTerm(m, c);
  return p;
}

AmbientPolynomial AmbientPolynomial::SphereRelation() {
  AmbientPolynomial p;
  p.AddTerm({2, 0, 0}, 1);
  p.AddTerm({0, 2, 0}, 1);
  p.AddTerm({0, 0, 2}, 1);
  p.AddTerm({0, 0, 0}, -1);
  return p;
}

int AmbientPolynomial::degree() const {
  return terms_.empty() ? 0 : terms_.begin()->first.degree();
}

void AmbientPolynomial::AddTerm(const Monomial& m, const Rational& c) {
  if (m.x < 0 || m.y < 0 || m.z < 0)
    throw std::invalid_argument("negative exponent");
  Accumulate(terms_, m, c);
}

AmbientPolynomial& AmbientPolynomial::operator+=(
    const AmbientPolynomial& other) {
  for (const auto& [m, c] : other.terms_) Accumulate(terms_, m, c);
  return *this;
}

AmbientPolynomial& AmbientPolynomial::operator-=(
    const AmbientPolynomial& other) {
  for (const auto& [m, c] : other.terms_) Accumulate(terms_, m, -c);
  return *this;
}

AmbientPolynomial& AmbientPolynomial::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, v] : terms_) v *= c;
  return *this;
}

AmbientPolynomial operator*(const AmbientPolynomial& a,
                            const AmbientPolynomial& b) {
  AmbientPolynomial out;
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      Accumulate(out.terms_, {ma.x + mb.x, ma.y + mb.y, ma.z + mb.z}, ca * cb);
    }
  }
  return out;
}

AmbientPolynomial AmbientPolynomial::Derivative(int axis) const {
  AmbientPolynomial out;
  for (const auto& [m, c] : terms_) {
    Monomial d = m;
    int e = 0;
    if (axis == 0) e = d.x--;
    else if (axis == 1) e = d.y--;
    else e = d.z--;
    if (e == 0) continue;
    Accumulate(out.terms_, d, c * e);
  }
  return out;
}

AmbientPolynomial AmbientPolynomial::FlatLaplacian() const {
  AmbientPolynomial out;
  for (const auto& [m, c] : terms_) {
    if (m.x >= 2) Accumulate(out.terms_, {m.x - 2, m.y, m.z}, c * (m.x * (m.x - 1)));
    if (m.y >= 2) Accumulate(out.terms_, {m.x, m.y - 2, m.z}, c * (m.y * (m.y - 1)));
    if (m.z >= 2) Accumulate(out.terms_, {m.x, m.y, m.z - 2}, c * (m.z * (m.z - 1)));
  }
  return out;
}

AmbientPolynomial AmbientPolynomial::HomogeneousPart(int n) const {
  AmbientPolynomial out;
  for (const auto& [m, c] : terms_) {
    if (m.degree() == n) out.terms_.emplace(m, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduction

SpherePolynomial Reduce(const AmbientPolynomial& raw) {
  SpherePolynomial out;
  // Sign of y^2 in the rewrite; the corrupted rule flips it.
  const int y_sign = corrupt_rewrite ? 1 : -1;
  for (const auto& [m, c] : raw.terms()) {
    const int k = m.z / 2;
    const int r = m.z % 2;
    if (k == 0) {
      out.AddCanonical(m, c);
      continue;
    }
    // (1 - x^2 - y^2)^k = sum k!/(i! j! (k-i-j)!) (-x^2)^i (-y^2)^j
    for (int i = 0; i <= k; ++i) {
      for (int j = 0; i + j <= k; ++j) {
        Rational coeff = Binomial(k, i) * Binomial(k - i, j) * c;
        if (i % 2 == 1) coeff = -coeff;
        if (j % 2 == 1 && y_sign < 0) coeff = -coeff;
        out.AddCanonical({m.x + 2 * i, m.y + 2 * j, r}, coeff);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SpherePolynomial

void SpherePolynomial::AddCanonical(const Monomial& m, const Rational& c) {
  Accumulate(terms_, m, c);
}

SpherePolynomial SpherePolynomial::Constant(const Rational& c) {
  SpherePolynomial p;
  p.AddCanonical({}, c);
  return p;
}

SpherePolynomial SpherePolynomial::X() { return FromMonomial({1, 0, 0}); }
SpherePolynomial SpherePolynomial::Y() { return FromMonomial({0, 1, 0}); }
SpherePolynomial SpherePolynomial::Z() { return FromMonomial({0, 0, 1}); }

SpherePolynomial SpherePolynomial::FromMonomial(const Monomial& m,
                                                const Rational& c) {
  return Reduce(AmbientPolynomial::Term(m, c));
}

int SpherePolynomial::degree() const {
  return terms_.empty() ? 0 : terms_.begin()->first.degree();
}

Rational SpherePolynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

SpherePolynomial& SpherePolynomial::operator+=(const SpherePolynomial& other) {
  for (const auto& [m, c] : other.terms_) Accumulate(terms_, m, c);
  return *this;
}

SpherePolynomial& SpherePolynomial::operator-=(const SpherePolynomial& other) {
  for (const auto& [m, c] : other.terms_) Accumulate(terms_, m, -c);
  return *this;
}

SpherePolynomial& SpherePolynomial::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, v] : terms_) v *= c;
  return *this;
}

SpherePolynomial SpherePolynomial::operator-() const {
  SpherePolynomial out = *this;
  for (auto& [m, v] : out.terms_) v = -v;
  return out;
}

SpherePolynomial operator*(const SpherePolynomial& a,
                           const SpherePolynomial& b) {
  return Reduce(a.representative() * b.representative());
}

SpherePolynomial Add(const SpherePolynomial& p, const SpherePolynomial& q) {
  return p + q;
}

SpherePolynomial Scale(const SpherePolynomial& p, const Rational& c) {
  return p * c;
}

SpherePolynomial Multiply(const SpherePolynomial& p,
                          const SpherePolynomial& q) {
  return p * q;
}

// ---------------------------------------------------------------------------
// Differential operators

SpherePolynomial TangentField::normal_component() const {
  return SpherePolynomial::X() * components[0] +
         SpherePolynomial::Y() * components[1] +
         SpherePolynomial::Z() * components[2];
}

TangentField TangentialGradient(const SpherePolynomial& p) {
  return TangentialGradient(p.representative());
}

TangentField TangentialGradient(const AmbientPolynomial& rep) {
  std::array<AmbientPolynomial, 3> partial;
  for (int j = 0; j < 3; ++j) partial[j] = rep.Derivative(j);
  // sum_j x_j dp/dx_j
  AmbientPolynomial radial;
  for (int j = 0; j < 3; ++j)
    radial += AmbientPolynomial::Variable(j) * partial[j];
  TangentField field;
  for (int i = 0; i < 3; ++i) {
    field.components[i] =
        Reduce(partial[i] - AmbientPolynomial::Variable(i) * radial);
  }
  return field;
}

SpherePolynomial GradInner(const SpherePolynomial& p,
                           const SpherePolynomial& q) {
  const TangentField gp = TangentialGradient(p);
  const TangentField gq = TangentialGradient(q);
  AmbientPolynomial sum;
  for (int i = 0; i < 3; ++i) {
    sum += gp.components[i].representative() * gq.components[i].representative();
  }
  return Reduce(sum);
}

SpherePolynomial LaplaceBeltrami(const SpherePolynomial& p) {
  return LaplaceBeltrami(p.representative());
}

SpherePolynomial LaplaceBeltrami(const AmbientPolynomial& rep) {
  AmbientPolynomial out;
  for (int n = 0; n <= rep.degree(); ++n) {
    AmbientPolynomial part = rep.HomogeneousPart(n);
    if (part.is_zero()) continue;
    out += part.FlatLaplacian();
    out -= part * Rational(n * (n + 1));
  }
  return Reduce(out);
}

SpherePolynomial Ad2H0(const SpherePolynomial& phi,
                       const SpherePolynomial& h) {
  const SpherePolynomial phi_h = phi * h;
  const SpherePolynomial phi2 = phi * phi;
  SpherePolynomial inner = LaplaceBeltrami(phi2 * h);
  inner -= Rational(2) * (phi * LaplaceBeltrami(phi_h));
  inner += phi2 * LaplaceBeltrami(h);
  return -inner;
}

SpherePolynomial Ad3H0(const SpherePolynomial& phi,
                       const SpherePolynomial& h) {
  return phi * Ad2H0(phi, h) - Ad2H0(phi, phi * h);
}

double Evaluate(const SpherePolynomial& p, const UnitVector& point) {
  const double r = std::sqrt(point.x * point.x + point.y * point.y +
                             point.z * point.z);
  if (!(std::abs(r - 1.0) <= 1e-12))
    throw std::domain_error("evaluation point is not on the unit sphere");
  double sum = 0.0;
  for (const auto& [m, c] : p.terms()) {
    sum += c.get_d() * std::pow(point.x, m.x) * std::pow(point.y, m.y) *
           std::pow(point.z, m.z);
  }
  return sum;
}

Rational SphereMean(const SpherePolynomial& p) {
  Rational total = 0;
  for (const auto& [m, c] : p.terms()) {
    if (m.x % 2 || m.y % 2 || m.z % 2) continue;
    const int a = m.x / 2, b = m.y / 2, cz = m.z / 2;
    Rational mean(DoubleFactorialOdd(a) * DoubleFactorialOdd(b) *
                      DoubleFactorialOdd(cz),
                  DoubleFactorialOdd(a + b + cz + 1));
    mean.canonicalize();
    total += c * mean;
  }
  return total;
}

std::vector<Monomial> CanonicalMonomials(int max_degree) {
  std::vector<Monomial> out;
  for (int d = max_degree; d >= 0; --d) {
    for (int a = d; a >= 0; --a) {
      for (int c = 0; c <= 1; ++c) {
        const int b = d - a - c;
        if (b < 0) continue;
        out.push_back({a, b, c});
      }
    }
  }
  return out;
}

namespace testing {

ScopedCorruptRewrite::ScopedCorruptRewrite() : previous_(corrupt_rewrite) {
  corrupt_rewrite = true;
}

ScopedCorruptRewrite::~ScopedCorruptRewrite() { corrupt_rewrite = previous_; }

}  // namespace testing

}  // namespace s2ctl
