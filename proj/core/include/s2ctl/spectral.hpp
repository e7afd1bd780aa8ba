#pragma once

// Truncated spherical-harmonic representation of states and operators on S^2.
//
// Complex harmonics with the Condon-Shortley phase. Coefficients are stored
// j-major with m running from -j to j, so index(j, m) = j^2 + j + m and a band
// limit j_max gives (j_max + 1)^2 coefficients. Grids are Gauss-Legendre in
// cos(beta) times uniform azimuth alpha; x = cos(alpha) sin(beta),
// y = sin(alpha) sin(beta), z = cos(beta).

#include <complex>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "s2ctl/sphere_poly.hpp"

namespace s2ctl {

using Complex = std::complex<double>;

struct HarmonicIndex {
  int j = 0;
  int m = 0;
};

constexpr int FlatIndex(int j, int m) { return j * j + j + m; }
constexpr int BasisSize(int j_max) { return (j_max + 1) * (j_max + 1); }
HarmonicIndex FromFlatIndex(int k);

struct WaveFunction {
  int j_max = 0;
  Eigen::VectorXcd coeffs;

  static WaveFunction Zero(int j_max);
  /// The single harmonic Y^j_m. Throws std::out_of_range when |m| > j or
  /// j > j_max.
  static WaveFunction Harmonic(int j_max, int j, int m);

  double norm() const { return coeffs.norm(); }
  Complex& at(int j, int m) { return coeffs(FlatIndex(j, m)); }
  Complex at(int j, int m) const { return coeffs(FlatIndex(j, m)); }
};

/// Hermitian operator on the truncated basis, stored diagonally when it is
/// diagonal in the harmonic basis.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  static OperatorMatrix Diagonal(Eigen::VectorXd diagonal);
  static OperatorMatrix Dense(Eigen::MatrixXcd matrix);

  bool is_diagonal() const { return diagonal_storage_; }
  int dimension() const;
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  /// Precondition: !is_diagonal().
  const Eigen::MatrixXcd& dense() const { return dense_; }
  Eigen::MatrixXcd ToDense() const;
  Eigen::VectorXcd Apply(const Eigen::VectorXcd& v) const;

  /// max |A - A^H| / max(1, max |A|).
  double HermiticityError() const;

  friend OperatorMatrix operator+(const OperatorMatrix& a,
                                  const OperatorMatrix& b);
  friend OperatorMatrix operator*(double s, const OperatorMatrix& a);

 private:
  bool diagonal_storage_ = true;
  Eigen::VectorXd diagonal_;
  Eigen::MatrixXcd dense_;
};

/// Gauss-Legendre nodes in cos(beta) times uniform azimuth nodes.
struct SphereGrid {
  int n_beta = 0;
  int n_alpha = 0;
  int j_max = 0;       // band limit the grid was designed for (0 if explicit)
  int oversample = 0;  // 0 for explicitly sized grids
  std::vector<double> cos_beta;
  std::vector<double> beta;
  std::vector<double> gl_weights;  // sum to 2
  std::vector<double> alpha;

  int size() const { return n_beta * n_alpha; }
  /// Quadrature weight of node (ib, ia); the weights sum to 4 pi.
  double weight(int ib) const;
  UnitVector point(int ib, int ia) const;
  /// Largest polynomial degree (in x, y, z) integrated exactly.
  int exact_degree() const;
};

/// n_beta = oversample * j_max + 1, n_alpha = 2 * oversample * j_max + 1.
/// Throws std::invalid_argument when oversample < 1 or j_max < 0.
SphereGrid MakeGrid(int j_max, int oversample);
/// Grid with explicit node counts.
SphereGrid MakeGridWithNodes(int n_beta, int n_alpha);
/// Smallest grid integrating polynomials of the given degree exactly.
SphereGrid MakeGridForDegree(int degree);

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
void GaussLegendre(int n, std::vector<double>& nodes,
                   std::vector<double>& weights);

/// Real / complex samples on a SphereGrid, rows = beta, columns = alpha.
using GridValues = Eigen::ArrayXXcd;
using RealGridValues = Eigen::ArrayXXd;

/// Samples p on the grid.
RealGridValues SamplePolynomial(const SpherePolynomial& p, const SphereGrid& grid);
/// Quadrature of sampled values, sum of weight * value.
Complex Integrate(const GridValues& values, const SphereGrid& grid);
double Integrate(const RealGridValues& values, const SphereGrid& grid);

/// Spherical-harmonic transform pair between a grid and band limit j_max.
class HarmonicTransform {
 public:
  /// Throws std::invalid_argument when the grid cannot resolve the band:
  /// n_beta < j_max + 1 or n_alpha < 2 j_max + 1.
  HarmonicTransform(SphereGrid grid, int j_max);

  const SphereGrid& grid() const { return grid_; }
  int j_max() const { return j_max_; }

  GridValues Synthesize(const WaveFunction& psi) const;
  WaveFunction Analyze(const GridValues& values) const;

  /// Normalized associated Legendre value, with Y^j_m = value * e^{i m alpha}.
  double Legendre(int ib, int j, int m) const;

 private:
  SphereGrid grid_;
  int j_max_ = 0;
  // legendre_[ib * triangle + j (j + 1) / 2 + m] for 0 <= m <= j.
  std::vector<double> legendre_;
  std::size_t triangle_ = 0;
  Eigen::MatrixXcd twiddle_;  // (n_alpha, 2 j_max + 1), e^{i m alpha_a}
};

/// Fills values[j (j+1)/2 + m] with the normalized associated Legendre
/// functions for 0 <= m <= j <= j_max at cos(beta) = x (Condon-Shortley).
void NormalizedLegendre(int j_max, double x, std::vector<double>& values);

/// Y^j_m(beta, alpha). Throws std::out_of_range when |m| > j or j < 0.
Complex EvalHarmonic(int j, int m, double beta, double alpha);
std::vector<Complex> EvalHarmonic(int j, int m,
                                  const std::vector<std::pair<double, double>>&
                                      beta_alpha_points);

/// -Laplace-Beltrami on the truncated basis: entry j(j+1) at (j, m).
OperatorMatrix LaplacianDiag(int j_max);

/// Multiplication by p, entries by exact quadrature on a grid sized for
/// degree(p) + 2 j_max.
OperatorMatrix PolyOperatorMatrix(const SpherePolynomial& p, int j_max);

struct DipoleOperators {
  OperatorMatrix x;
  OperatorMatrix y;
  OperatorMatrix z;
};

/// Multiplication by x, y, z. Throws std::invalid_argument if j_max < 1.
DipoleOperators DipoleMatrices(int j_max);

struct PhaseResult {
  WaveFunction psi;
  /// Grid norm of the part of e^{i scale phi} psi removed by the band-limit
  /// projection.
  double residual = 0.0;
};

/// Band-limit projection of e^{i scale phi} psi on the given transform's grid.
PhaseResult ApplyPhase(const RealGridValues& phi, double scale,
                       const WaveFunction& psi, const HarmonicTransform& transform);
/// As above with phi sampled on MakeGrid(psi.j_max, oversample).
PhaseResult ApplyPhase(const SpherePolynomial& phi, double scale,
                       const WaveFunction& psi, int oversample = 2);

/// Least-squares fit of a real grid function by polynomials of degree <= d,
/// represented by its harmonic coefficients (band d).
struct PhaseFit {
  int degree = 0;
  WaveFunction coefficients;
  /// Quadrature L2 norm of target minus fit.
  double residual = 0.0;

  /// Real samples of the fitted polynomial on a grid.
  RealGridValues Values(const SphereGrid& grid) const;
};

/// The transform's band limit must be >= degree. Throws std::invalid_argument
/// when degree < 0 or exceeds the transform's band limit.
PhaseFit L2FitPhase(const RealGridValues& target, const HarmonicTransform& transform,
                    int degree);

/// Raised when the monomial normal equations lose rank.
class IllConditionedFit : public std::runtime_error {
 public:
  IllConditionedFit(int rank, int columns);
  int rank() const { return rank_; }
  int columns() const { return columns_; }

 private:
  int rank_;
  int columns_;
};

struct MonomialFit {
  std::vector<std::pair<Monomial, double>> terms;
  int rank = 0;
  double residual = 0.0;
};

/// Least squares in the canonical monomial basis of degree <= d using a
/// column-pivoted QR. Throws IllConditionedFit when the numerical rank is
/// below the number of monomials.
MonomialFit FitMonomials(const RealGridValues& target, const SphereGrid& grid,
                         int degree);

/// Rounds floating coefficients to the nearest multiple of 1 / denominator.
SpherePolynomial Rationalize(const MonomialFit& fit, long denominator);

// Text records "j m re im", one per line, j_max on the first line.
void WriteWaveFunction(std::ostream& out, const WaveFunction& psi);
/// Throws std::invalid_argument on malformed input.
WaveFunction ReadWaveFunction(std::istream& in);
/// CSV rows "beta_index,alpha_index,re,im" with a header line.
void WriteGridCsv(std::ostream& out, const GridValues& values);

}  // namespace s2ctl
