#include "s2ctl/spectral.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace s2ctl {

namespace detail {
void NormalizedLegendre(int j_max, double x, double s,
                        std::vector<double>& values);
}  // namespace detail

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t Tri(int j, int m) {
  return static_cast<std::size_t>(j * (j + 1) / 2 + m);
}

// Legendre table for every ring of a grid, 0 <= m <= j <= j_max.
struct LegendreTable {
  int j_max = 0;
  std::size_t triangle = 0;
  std::vector<double> values;

  LegendreTable(const SphereGrid& grid, int band) : j_max(band) {
    triangle = Tri(band + 1, 0);
    values.resize(triangle * static_cast<std::size_t>(grid.n_beta));
    std::vector<double> ring;
    for (int ib = 0; ib < grid.n_beta; ++ib) {
      const auto i = static_cast<std::size_t>(ib);
      detail::NormalizedLegendre(band, grid.cos_beta[i], std::sin(grid.beta[i]),
                                 ring);
      std::copy(ring.begin(), ring.end(),
                values.begin() + static_cast<std::ptrdiff_t>(i * triangle));
    }
  }

  double operator()(int ib, int j, int m) const {
    const int am = std::abs(m);
    const double p = values[static_cast<std::size_t>(ib) * triangle + Tri(j, am)];
    return (m < 0 && am % 2 == 1) ? -p : p;
  }
};

Eigen::MatrixXcd Twiddle(const SphereGrid& grid, int band) {
  Eigen::MatrixXcd t(grid.n_alpha, 2 * band + 1);
  for (int a = 0; a < grid.n_alpha; ++a) {
    for (int m = -band; m <= band; ++m)
      t(a, m + band) = std::polar(1.0, m * grid.alpha[static_cast<std::size_t>(a)]);
  }
  return t;
}

GridValues SynthesizeWith(const LegendreTable& table, const Eigen::MatrixXcd& twiddle,
                          const SphereGrid& grid, const WaveFunction& psi) {
  const int band = table.j_max;
  Eigen::MatrixXcd rings = Eigen::MatrixXcd::Zero(grid.n_beta, 2 * band + 1);
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    for (int m = -band; m <= band; ++m) {
      Complex sum = 0.0;
      for (int j = std::abs(m); j <= band; ++j)
        sum += psi.coeffs(FlatIndex(j, m)) * table(ib, j, m);
      rings(ib, m + band) = sum;
    }
  }
  return (rings * twiddle.transpose()).array();
}

void CheckShape(const Eigen::Index rows, const Eigen::Index cols,
                const SphereGrid& grid) {
  if (rows != grid.n_beta || cols != grid.n_alpha)
    throw std::invalid_argument("grid values do not match the grid shape");
}

}  // namespace

// ---------------------------------------------------------------------------
// OperatorMatrix

OperatorMatrix OperatorMatrix::Diagonal(Eigen::VectorXd diagonal) {
  OperatorMatrix op;
  op.diagonal_storage_ = true;
  op.diagonal_ = std::move(diagonal);
  return op;
}

OperatorMatrix OperatorMatrix::Dense(Eigen::MatrixXcd matrix) {
  if (matrix.rows() != matrix.cols())
    throw std::invalid_argument("operator matrix must be square");
  OperatorMatrix op;
  op.diagonal_storage_ = false;
  op.dense_ = std::move(matrix);
  return op;
}

int OperatorMatrix::dimension() const {
  return static_cast<int>(diagonal_storage_ ? diagonal_.size() : dense_.rows());
}

Eigen::MatrixXcd OperatorMatrix::ToDense() const {
  if (!diagonal_storage_) return dense_;
  return diagonal_.cast<Complex>().asDiagonal();
}

Eigen::VectorXcd OperatorMatrix::Apply(const Eigen::VectorXcd& v) const {
  if (v.size() != dimension())
    throw std::invalid_argument("operator and vector dimensions differ");
  if (diagonal_storage_) return diagonal_.cast<Complex>().cwiseProduct(v);
  return dense_ * v;
}

double OperatorMatrix::HermiticityError() const {
  if (diagonal_storage_) return 0.0;
  const double scale = std::max(1.0, dense_.cwiseAbs().maxCoeff());
  return (dense_ - dense_.adjoint()).cwiseAbs().maxCoeff() / scale;
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument("operator dimensions differ");
  if (a.is_diagonal() && b.is_diagonal())
    return OperatorMatrix::Diagonal(a.diagonal() + b.diagonal());
  return OperatorMatrix::Dense(a.ToDense() + b.ToDense());
}

OperatorMatrix operator*(double s, const OperatorMatrix& a) {
  if (a.is_diagonal()) return OperatorMatrix::Diagonal(s * a.diagonal());
  return OperatorMatrix::Dense(s * a.dense());
}

// ---------------------------------------------------------------------------
// Sampling and quadrature

RealGridValues SamplePolynomial(const SpherePolynomial& p, const SphereGrid& grid) {
  RealGridValues out(grid.n_beta, grid.n_alpha);
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    for (int ia = 0; ia < grid.n_alpha; ++ia)
      out(ib, ia) = Evaluate(p, grid.point(ib, ia));
  }
  return out;
}

Complex Integrate(const GridValues& values, const SphereGrid& grid) {
  CheckShape(values.rows(), values.cols(), grid);
  Complex sum = 0.0;
  for (int ib = 0; ib < grid.n_beta; ++ib)
    sum += grid.weight(ib) * values.row(ib).sum();
  return sum;
}

double Integrate(const RealGridValues& values, const SphereGrid& grid) {
  CheckShape(values.rows(), values.cols(), grid);
  double sum = 0.0;
  for (int ib = 0; ib < grid.n_beta; ++ib)
    sum += grid.weight(ib) * values.row(ib).sum();
  return sum;
}

// ---------------------------------------------------------------------------
// HarmonicTransform

HarmonicTransform::HarmonicTransform(SphereGrid grid, int j_max)
    : grid_(std::move(grid)), j_max_(j_max) {
  if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  if (grid_.n_beta < j_max + 1 || grid_.n_alpha < 2 * j_max + 1) {
    std::ostringstream msg;
    msg << "grid " << grid_.n_beta << "x" << grid_.n_alpha
        << " cannot resolve band limit " << j_max;
    throw std::invalid_argument(msg.str());
  }
  LegendreTable table(grid_, j_max);
  legendre_ = std::move(table.values);
  triangle_ = table.triangle;
  twiddle_ = Twiddle(grid_, j_max);
}

double HarmonicTransform::Legendre(int ib, int j, int m) const {
  const int am = std::abs(m);
  const double p = legendre_[static_cast<std::size_t>(ib) * triangle_ + Tri(j, am)];
  return (m < 0 && am % 2 == 1) ? -p : p;
}

GridValues HarmonicTransform::Synthesize(const WaveFunction& psi) const {
  if (psi.j_max != j_max_)
    throw std::invalid_argument("wave function band differs from transform");
  Eigen::MatrixXcd rings = Eigen::MatrixXcd::Zero(grid_.n_beta, 2 * j_max_ + 1);
  for (int ib = 0; ib < grid_.n_beta; ++ib) {
    for (int m = -j_max_; m <= j_max_; ++m) {
      Complex sum = 0.0;
      for (int j = std::abs(m); j <= j_max_; ++j)
        sum += psi.coeffs(FlatIndex(j, m)) * Legendre(ib, j, m);
      rings(ib, m + j_max_) = sum;
    }
  }
  return (rings * twiddle_.transpose()).array();
}

WaveFunction HarmonicTransform::Analyze(const GridValues& values) const {
  CheckShape(values.rows(), values.cols(), grid_);
  const Eigen::MatrixXcd rings =
      values.matrix() * twiddle_.conjugate() * (kTwoPi / grid_.n_alpha);
  WaveFunction psi = WaveFunction::Zero(j_max_);
  for (int ib = 0; ib < grid_.n_beta; ++ib) {
    const double w = grid_.gl_weights[static_cast<std::size_t>(ib)];
    for (int m = -j_max_; m <= j_max_; ++m) {
      const Complex g = w * rings(ib, m + j_max_);
      for (int j = std::abs(m); j <= j_max_; ++j)
        psi.coeffs(FlatIndex(j, m)) += g * Legendre(ib, j, m);
    }
  }
  return psi;
}

// ---------------------------------------------------------------------------
// Operators

OperatorMatrix LaplacianDiag(int j_max) {
  if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  Eigen::VectorXd d(BasisSize(j_max));
  for (int j = 0; j <= j_max; ++j) {
    for (int m = -j; m <= j; ++m) d(FlatIndex(j, m)) = j * (j + 1.0);
  }
  return OperatorMatrix::Diagonal(std::move(d));
}

OperatorMatrix PolyOperatorMatrix(const SpherePolynomial& p, int j_max) {
  if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  const int d = std::max(0, p.degree());
  const SphereGrid grid = MakeGridForDegree(2 * j_max + d);
  const LegendreTable table(grid, j_max);
  const RealGridValues values = SamplePolynomial(p, grid);

  // Azimuthal Fourier modes of p on each ring, |k| <= d.
  Eigen::MatrixXcd modes(grid.n_beta, 2 * d + 1);
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    for (int k = -d; k <= d; ++k) {
      Complex sum = 0.0;
      for (int ia = 0; ia < grid.n_alpha; ++ia)
        sum += values(ib, ia) *
               std::polar(1.0, -k * grid.alpha[static_cast<std::size_t>(ia)]);
      modes(ib, k + d) = sum / static_cast<double>(grid.n_alpha);
    }
  }

  const int n = BasisSize(j_max);
  Eigen::MatrixXcd matrix = Eigen::MatrixXcd::Zero(n, n);
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    const double w = kTwoPi * grid.gl_weights[static_cast<std::size_t>(ib)];
    for (int mr = -j_max; mr <= j_max; ++mr) {
      for (int mc = std::max(-j_max, mr - d); mc <= std::min(j_max, mr + d); ++mc) {
        const Complex pk = w * modes(ib, mr - mc + d);
        if (pk == 0.0) continue;
        for (int jr = std::abs(mr); jr <= j_max; ++jr) {
          const Complex left = pk * table(ib, jr, mr);
          for (int jc = std::abs(mc); jc <= j_max; ++jc)
            matrix(FlatIndex(jr, mr), FlatIndex(jc, mc)) += left * table(ib, jc, mc);
        }
      }
    }
  }
  return OperatorMatrix::Dense(std::move(matrix));
}

DipoleOperators DipoleMatrices(int j_max) {
  if (j_max < 1) throw std::invalid_argument("dipole matrices need j_max >= 1");
  return {PolyOperatorMatrix(SpherePolynomial::X(), j_max),
          PolyOperatorMatrix(SpherePolynomial::Y(), j_max),
          PolyOperatorMatrix(SpherePolynomial::Z(), j_max)};
}

// ---------------------------------------------------------------------------
// Phases

PhaseResult ApplyPhase(const RealGridValues& phi, double scale,
                       const WaveFunction& psi, const HarmonicTransform& transform) {
  const SphereGrid& grid = transform.grid();
  CheckShape(phi.rows(), phi.cols(), grid);
  if (scale == 0.0) return {psi, 0.0};

  const GridValues samples = transform.Synthesize(psi);
  GridValues kicked(grid.n_beta, grid.n_alpha);
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    for (int ia = 0; ia < grid.n_alpha; ++ia)
      kicked(ib, ia) = samples(ib, ia) * std::polar(1.0, scale * phi(ib, ia));
  }
  PhaseResult result;
  result.psi = transform.Analyze(kicked);
  const GridValues lost = kicked - transform.Synthesize(result.psi);
  result.residual = std::sqrt(std::max(0.0, Integrate(RealGridValues(lost.abs2()), grid)));
  return result;
}

PhaseResult ApplyPhase(const SpherePolynomial& phi, double scale,
                       const WaveFunction& psi, int oversample) {
  if (scale == 0.0) return {psi, 0.0};
  HarmonicTransform transform(MakeGrid(psi.j_max, oversample), psi.j_max);
  return ApplyPhase(SamplePolynomial(phi, transform.grid()), scale, psi, transform);
}

RealGridValues PhaseFit::Values(const SphereGrid& grid) const {
  const LegendreTable table(grid, degree);
  return SynthesizeWith(table, Twiddle(grid, degree), grid, coefficients).real();
}

PhaseFit L2FitPhase(const RealGridValues& target, const HarmonicTransform& transform,
                    int degree) {
  if (degree < 0) throw std::invalid_argument("fit degree must be >= 0");
  if (degree > transform.j_max())
    throw std::invalid_argument("fit degree exceeds the transform band limit");
  const SphereGrid& grid = transform.grid();
  CheckShape(target.rows(), target.cols(), grid);

  const WaveFunction full = transform.Analyze(target.cast<Complex>());
  PhaseFit fit;
  fit.degree = degree;
  fit.coefficients = WaveFunction::Zero(degree);
  fit.coefficients.coeffs = full.coeffs.head(BasisSize(degree));
  const RealGridValues error = target - fit.Values(grid);
  fit.residual = std::sqrt(std::max(0.0, Integrate(RealGridValues(error.square()), grid)));
  return fit;
}

IllConditionedFit::IllConditionedFit(int rank, int columns)
    : std::runtime_error("monomial fit is rank deficient: rank " +
                         std::to_string(rank) + " of " + std::to_string(columns)),
      rank_(rank),
      columns_(columns) {}

MonomialFit FitMonomials(const RealGridValues& target, const SphereGrid& grid,
                         int degree) {
  if (degree < 0) throw std::invalid_argument("fit degree must be >= 0");
  CheckShape(target.rows(), target.cols(), grid);
  const std::vector<Monomial> monomials = CanonicalMonomials(degree);
  const auto cols = static_cast<Eigen::Index>(monomials.size());
  Eigen::MatrixXd design(grid.size(), cols);
  Eigen::VectorXd rhs(grid.size());
  Eigen::Index row = 0;
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    const double sw = std::sqrt(grid.weight(ib));
    for (int ia = 0; ia < grid.n_alpha; ++ia, ++row) {
      const UnitVector u = grid.point(ib, ia);
      for (Eigen::Index c = 0; c < cols; ++c) {
        const Monomial& m = monomials[static_cast<std::size_t>(c)];
        design(row, c) = sw * std::pow(u.x, m.x) * std::pow(u.y, m.y) *
                         std::pow(u.z, m.z);
      }
      rhs(row) = sw * target(ib, ia);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const int rank = static_cast<int>(qr.rank());
  if (rank < cols) throw IllConditionedFit(rank, static_cast<int>(cols));
  const Eigen::VectorXd coef = qr.solve(rhs);
  MonomialFit fit;
  fit.rank = rank;
  fit.residual = (design * coef - rhs).norm();
  for (Eigen::Index c = 0; c < cols; ++c)
    fit.terms.emplace_back(monomials[static_cast<std::size_t>(c)], coef(c));
  return fit;
}

SpherePolynomial Rationalize(const MonomialFit& fit, long denominator) {
  if (denominator < 1) throw std::invalid_argument("denominator must be >= 1");
  SpherePolynomial out;
  for (const auto& [m, c] : fit.terms) {
    const long num = std::lround(c * static_cast<double>(denominator));
    if (num == 0) continue;
    out += SpherePolynomial::FromMonomial(m) * MakeRational(num, denominator);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void WriteWaveFunction(std::ostream& out, const WaveFunction& psi) {
  out << "j_max " << psi.j_max << "\n" << std::setprecision(17);
  for (int j = 0; j <= psi.j_max; ++j) {
    for (int m = -j; m <= j; ++m) {
      const Complex c = psi.at(j, m);
      out << j << " " << m << " " << c.real() << " " << c.imag() << "\n";
    }
  }
}

WaveFunction ReadWaveFunction(std::istream& in) {
  std::string key;
  int j_max = -1;
  if (!(in >> key >> j_max) || key != "j_max" || j_max < 0)
    throw std::invalid_argument("wave function record must start with 'j_max N'");
  WaveFunction psi = WaveFunction::Zero(j_max);
  int j = 0;
  int m = 0;
  double re = 0.0;
  double im = 0.0;
  while (in >> j >> m >> re >> im) {
    if (j < 0 || j > j_max || m < -j || m > j)
      throw std::invalid_argument("wave function record index out of range");
    psi.at(j, m) = Complex(re, im);
  }
  if (!in.eof()) throw std::invalid_argument("malformed wave function record");
  return psi;
}

void WriteGridCsv(std::ostream& out, const GridValues& values) {
  out << "beta_index,alpha_index,re,im\n" << std::setprecision(17);
  for (Eigen::Index ib = 0; ib < values.rows(); ++ib) {
    for (Eigen::Index ia = 0; ia < values.cols(); ++ia) {
      out << ib << "," << ia << "," << values(ib, ia).real() << ","
          << values(ib, ia).imag() << "\n";
    }
  }
}

}  // namespace s2ctl
