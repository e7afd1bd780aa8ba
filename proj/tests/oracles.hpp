#pragma once

// Reference computations used by the tests. None of them call into the
// library's algebra or transforms: they work from closed forms, floating
// point finite differences, or textbook formulas.

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

namespace oracle {

/// Ambient polynomial with double coefficients, keyed by (a, b, c) for
/// x^a y^b z^c.
using Poly = std::map<std::tuple<int, int, int>, double>;

inline double Eval(const Poly& p, double x, double y, double z) {
  double s = 0.0;
  for (const auto& [e, c] : p) {
    const auto [a, b, d] = e;
    s += c * std::pow(x, a) * std::pow(y, b) * std::pow(z, d);
  }
  return s;
}

/// Integral over the unit sphere of x^a y^b z^c:
/// 2 Gamma((a+1)/2) Gamma((b+1)/2) Gamma((c+1)/2) / Gamma((a+b+c+3)/2),
/// zero when any exponent is odd.
inline double MonomialIntegral(int a, int b, int c) {
  if (a % 2 || b % 2 || c % 2) return 0.0;
  return 2.0 * std::tgamma((a + 1) / 2.0) * std::tgamma((b + 1) / 2.0) *
         std::tgamma((c + 1) / 2.0) / std::tgamma((a + b + c + 3) / 2.0);
}

inline double Integral(const Poly& p) {
  double s = 0.0;
  for (const auto& [e, c] : p) {
    const auto [a, b, d] = e;
    s += c * MonomialIntegral(a, b, d);
  }
  return s;
}

/// Tangential gradient at a unit vector by central differences of the
/// ambient function, then projection onto the tangent plane.
inline std::array<double, 3> NumericTangentGradient(const Poly& p, double x, double y,
                                                     double z, double h = 1e-6) {
  const double g[3] = {
      (Eval(p, x + h, y, z) - Eval(p, x - h, y, z)) / (2 * h),
      (Eval(p, x, y + h, z) - Eval(p, x, y - h, z)) / (2 * h),
      (Eval(p, x, y, z + h) - Eval(p, x, y, z - h)) / (2 * h)};
  const double r[3] = {x, y, z};
  const double radial = g[0] * x + g[1] * y + g[2] * z;
  return {g[0] - radial * r[0], g[1] - radial * r[1], g[2] - radial * r[2]};
}

/// Laplace-Beltrami by finite differences in (beta, alpha), with
/// x = sin b cos a, y = sin b sin a, z = cos b.
inline double NumericLaplaceBeltrami(const Poly& p, double beta, double alpha,
                                     double h = 1e-4) {
  auto f = [&](double b, double a) {
    return Eval(p, std::sin(b) * std::cos(a), std::sin(b) * std::sin(a), std::cos(b));
  };
  const double s = std::sin(beta);
  const double d_bb = (f(beta + h, alpha) - 2 * f(beta, alpha) + f(beta - h, alpha)) / (h * h);
  const double d_b = (f(beta + h, alpha) - f(beta - h, alpha)) / (2 * h);
  const double d_aa =
      (f(beta, alpha + h) - 2 * f(beta, alpha) + f(beta, alpha - h)) / (h * h);
  return d_bb + std::cos(beta) / s * d_b + d_aa / (s * s);
}

inline double Factorial(int n) { return std::tgamma(n + 1.0); }

/// Condon-Shortley associated Legendre P_l^m(x), m >= 0, by the textbook
/// upward recurrence in l.
inline double AssocLegendre(int l, int m, double x) {
  double pmm = 1.0;
  const double s = std::sqrt((1 - x) * (1 + x));
  for (int i = 1; i <= m; ++i) pmm *= -(2 * i - 1) * s;
  if (l == m) return pmm;
  double pmm1 = x * (2 * m + 1) * pmm;
  if (l == m + 1) return pmm1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = ((2 * ll - 1) * x * pmm1 - (ll + m - 1) * pmm) / (ll - m);
    pmm = pmm1;
    pmm1 = pll;
  }
  return pll;
}

/// Orthonormal complex harmonic with the Condon-Shortley phase.
inline std::complex<double> Ylm(int l, int m, double beta, double alpha) {
  const int am = std::abs(m);
  const double norm = std::sqrt((2 * l + 1) / (4 * std::numbers::pi) *
                                Factorial(l - am) / Factorial(l + am));
  std::complex<double> v = norm * AssocLegendre(l, am, std::cos(beta)) *
                           std::exp(std::complex<double>(0.0, am * alpha));
  if (m < 0) v = std::conj(v) * ((am % 2) ? -1.0 : 1.0);
  return v;
}

}  // namespace oracle
