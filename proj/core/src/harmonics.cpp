#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "s2ctl/spectral.hpp"

namespace s2ctl {

namespace detail {

// values[j (j+1)/2 + m] = normalized P_j^m at cos(beta) = x, sin(beta) = s.
void NormalizedLegendre(int j_max, double x, double s,
                        std::vector<double>& values) {
  const auto tri = [](int j, int m) {
    return static_cast<std::size_t>(j * (j + 1) / 2 + m);
  };
  values.assign(tri(j_max + 1, 0), 0.0);
  double diag = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int m = 0; m <= j_max; ++m) {
    if (m > 0) diag *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    values[tri(m, m)] = diag;
    if (m + 1 > j_max) break;
    values[tri(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * diag;
    for (int j = m + 2; j <= j_max; ++j) {
      const double jj = j;
      const double a = std::sqrt((4.0 * jj * jj - 1.0) / (jj * jj - 1.0 * m * m));
      const double b = std::sqrt(((jj - 1.0) * (jj - 1.0) - 1.0 * m * m) /
                                 (4.0 * (jj - 1.0) * (jj - 1.0) - 1.0));
      values[tri(j, m)] =
          a * (x * values[tri(j - 1, m)] - b * values[tri(j - 2, m)]);
    }
  }
}

}  // namespace detail

HarmonicIndex FromFlatIndex(int k) {
  if (k < 0) throw std::out_of_range("negative harmonic index");
  int j = static_cast<int>(std::sqrt(static_cast<double>(k)));
  while (j * j > k) --j;
  while ((j + 1) * (j + 1) <= k) ++j;
  return {j, k - j * j - j};
}

WaveFunction WaveFunction::Zero(int j_max) {
  if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  WaveFunction psi;
  psi.j_max = j_max;
  psi.coeffs = Eigen::VectorXcd::Zero(BasisSize(j_max));
  return psi;
}

WaveFunction WaveFunction::Harmonic(int j_max, int j, int m) {
  if (j < 0 || j > j_max || m < -j || m > j) {
    throw std::out_of_range("harmonic (" + std::to_string(j) + ", " +
                            std::to_string(m) + ") outside band " +
                            std::to_string(j_max));
  }
  WaveFunction psi = Zero(j_max);
  psi.at(j, m) = 1.0;
  return psi;
}

void GaussLegendre(int n, std::vector<double>& nodes,
                   std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre needs n >= 1");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
      }
      derivative = n * (z * p1 - p2) / (z * z - 1.0);
      const double previous = z;
      z = previous - p1 / derivative;
      if (std::abs(z - previous) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p1 = 1.0;
    double p2 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
    }
    derivative = n * (z * p1 - p2) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * derivative * derivative);
    nodes[static_cast<std::size_t>(i)] = -z;
    nodes[static_cast<std::size_t>(n - 1 - i)] = z;
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

double SphereGrid::weight(int ib) const {
  return gl_weights[static_cast<std::size_t>(ib)] * 2.0 * std::numbers::pi /
         n_alpha;
}

UnitVector SphereGrid::point(int ib, int ia) const {
  const double c = cos_beta[static_cast<std::size_t>(ib)];
  const double s = std::sin(beta[static_cast<std::size_t>(ib)]);
  const double a = alpha[static_cast<std::size_t>(ia)];
  return {std::cos(a) * s, std::sin(a) * s, c};
}

int SphereGrid::exact_degree() const {
  return std::min(2 * n_beta - 1, n_alpha - 1);
}

SphereGrid MakeGridWithNodes(int n_beta, int n_alpha) {
  if (n_beta < 1 || n_alpha < 1)
    throw std::invalid_argument("grid needs at least one node per direction");
  SphereGrid grid;
  grid.n_beta = n_beta;
  grid.n_alpha = n_alpha;
  GaussLegendre(n_beta, grid.cos_beta, grid.gl_weights);
  grid.beta.resize(grid.cos_beta.size());
  for (std::size_t i = 0; i < grid.cos_beta.size(); ++i)
    grid.beta[i] = std::acos(grid.cos_beta[i]);
  grid.alpha.resize(static_cast<std::size_t>(n_alpha));
  for (int a = 0; a < n_alpha; ++a)
    grid.alpha[static_cast<std::size_t>(a)] = 2.0 * std::numbers::pi * a / n_alpha;
  return grid;
}

SphereGrid MakeGrid(int j_max, int oversample) {
  if (oversample < 1) throw std::invalid_argument("oversample must be >= 1");
  if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  SphereGrid grid = MakeGridWithNodes(oversample * j_max + 1,
                                      2 * oversample * j_max + 1);
  grid.j_max = j_max;
  grid.oversample = oversample;
  return grid;
}

SphereGrid MakeGridForDegree(int degree) {
  if (degree < 0) throw std::invalid_argument("degree must be >= 0");
  return MakeGridWithNodes((degree + 2) / 2, degree + 1);
}

void NormalizedLegendre(int j_max, double x, std::vector<double>& values) {
  detail::NormalizedLegendre(j_max, x, std::sqrt(std::max(0.0, 1.0 - x * x)),
                             values);
}

Complex EvalHarmonic(int j, int m, double beta, double alpha) {
  if (j < 0 || m < -j || m > j) {
    throw std::out_of_range("invalid harmonic index (" + std::to_string(j) +
                            ", " + std::to_string(m) + ")");
  }
  std::vector<double> values;
  detail::NormalizedLegendre(j, std::cos(beta), std::abs(std::sin(beta)),
                             values);
  const int am = std::abs(m);
  double p = values[static_cast<std::size_t>(j * (j + 1) / 2 + am)];
  if (m < 0 && am % 2 == 1) p = -p;
  return p * std::polar(1.0, m * alpha);
}

std::vector<Complex> EvalHarmonic(
    int j, int m, const std::vector<std::pair<double, double>>& beta_alpha_points) {
  std::vector<Complex> out;
  out.reserve(beta_alpha_points.size());
  for (const auto& [beta, alpha] : beta_alpha_points)
    out.push_back(EvalHarmonic(j, m, beta, alpha));
  return out;
}

}  // namespace s2ctl
