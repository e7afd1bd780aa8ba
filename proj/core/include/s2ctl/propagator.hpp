#pragma once

// Time evolution of i d/dt psi = (-Lap + V + u1 x + u2 y + u3 z) psi on the
// truncated harmonic basis, with piecewise-constant controls and idealized
// phase kicks psi -> exp(i s phi) psi.

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "s2ctl/saturation.hpp"
#include "s2ctl/spectral.hpp"

namespace s2ctl {

using Controls = std::array<double, 3>;

/// Negative durations are adjoint (backward) evolution; they are permitted
/// and reported as nonphysical.
struct ControlSegment {
  double duration = 0.0;
  Controls u{};

  bool nonphysical() const { return duration < 0.0; }
};

struct PhaseKick {
  SpherePolynomial phi;
  double scale = 0.0;
};

using ScheduleStep = std::variant<ControlSegment, PhaseKick>;

struct Schedule {
  std::vector<ScheduleStep> steps;

  /// Throws std::invalid_argument for zero or non-finite durations.
  Schedule& Segment(double duration, const Controls& u);
  Schedule& Kick(const SpherePolynomial& phi, double scale);
};

struct EvolutionDiagnostics {
  int segments = 0;
  int nonphysical_segments = 0;
  int kicks = 0;
  /// Sum of the band-limit residuals of all phase kicks.
  double kick_residual = 0.0;
  /// Largest |scale| of any phase kick.
  double max_kick_scale = 0.0;
  /// Largest relative norm change across a single control segment.
  double max_norm_drift = 0.0;
  /// Sum of |duration| over segments.
  double total_time = 0.0;

  void Merge(const EvolutionDiagnostics& other);
};

/// Evolution engine for one band limit. Operators are built lazily and
/// shared; eigendecompositions are cached per distinct control vector.
/// All member functions are safe to call concurrently.
class Propagator {
 public:
  /// Largest band limit for which a dense Hamiltonian is assembled.
  static constexpr int kMaxDenseBand = 48;

  explicit Propagator(int j_max, int oversample = 2,
                      std::optional<SpherePolynomial> potential = std::nullopt);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  int j_max() const { return j_max_; }
  int oversample() const { return oversample_; }
  const HarmonicTransform& transform() const { return transform_; }

  /// -Lap + V + u . (X, Y, Z). Diagonal storage when u = 0 and V is absent.
  OperatorMatrix Hamiltonian(const Controls& u) const;
  const DipoleOperators& Dipoles() const;

  /// exp(-i t H(u)) psi; t may be negative.
  WaveFunction Step(const WaveFunction& psi, const Controls& u, double t) const;
  PhaseResult Kick(const WaveFunction& psi, const SpherePolynomial& phi,
                   double scale) const;

  WaveFunction Evolve(const WaveFunction& psi0, const Schedule& schedule,
                      EvolutionDiagnostics* diagnostics = nullptr) const;

  /// Kick(phi, +delta^{-1/2}), segment (delta, u / delta), Kick(phi,
  /// -delta^{-1/2}). Throws std::invalid_argument when delta == 0.
  WaveFunction ThreeExponential(const WaveFunction& psi0, const SpherePolynomial& phi,
                                const Controls& u, double delta,
                                EvolutionDiagnostics* diagnostics = nullptr) const;

  /// exp(-i (g(grad phi, grad phi) + u . (x, y, z))) psi0.
  PhaseResult LimitTarget(const WaveFunction& psi0, const SpherePolynomial& phi,
                          const Controls& u) const;

  std::size_t cached_decompositions() const;

 private:
  struct Decomposition;
  std::shared_ptr<const Decomposition> DecompositionFor(const Controls& u) const;
  const RealGridValues& Samples(const SpherePolynomial& phi) const;
  bool IsFree(const Controls& u) const;

  int j_max_;
  int oversample_;
  std::optional<SpherePolynomial> potential_;
  HarmonicTransform transform_;
  OperatorMatrix laplacian_;

  mutable std::mutex mutex_;
  mutable std::unique_ptr<DipoleOperators> dipoles_;
  mutable std::unique_ptr<OperatorMatrix> potential_matrix_;
  mutable std::map<Controls, std::shared_ptr<const Decomposition>> decompositions_;
  mutable std::map<std::string, std::unique_ptr<RealGridValues>> samples_;
};

// ---------------------------------------------------------------------------
// Convergence studies

struct ConvergenceRow {
  double delta = 0.0;
  double error = 0.0;
  double kick_residual = 0.0;
  bool flagged = false;
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;
  double intercept = 0.0;  // log(error) = intercept + slope * log(delta)
  int fitted_rows = 0;
  int j_max = 0;
  int oversample = 0;
  /// Errors strictly decrease across the unflagged rows.
  bool monotone_above_floor = false;
};

class InsufficientRows : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 13 geometric points from 1e-1 down to 1e-4.
std::vector<double> DefaultDeltaSchedule();
std::vector<double> GeometricSchedule(double first, double last, int points);

/// A row is flagged once its kick residual reaches 5% of its error; every
/// later row is flagged too. Monotonicity is checked separately by FitSlope.
void FlagTruncationFloor(std::vector<ConvergenceRow>& rows);

/// Least-squares line through (log delta, log error) of the unflagged rows.
/// Throws InsufficientRows when fewer than three rows are usable.
void FitSlope(ConvergenceRecord& record);

/// Error of ThreeExponential against LimitTarget for each delta, evaluated
/// concurrently. Throws std::invalid_argument unless deltas are positive and
/// strictly decreasing, and InsufficientRows from the fit.
ConvergenceRecord ConvergenceStudy(const WaveFunction& psi0, const SpherePolynomial& phi,
                                   const Controls& u, const std::vector<double>& deltas,
                                   int j_max, int oversample,
                                   const std::optional<SpherePolynomial>& potential = {});

// ---------------------------------------------------------------------------
// Synthesis plans

enum class KickMode {
  kIdealized,    // Conjugate kicks applied as exact phase multiplications
  kSynthesized,  // Conjugate kicks realized by executing the child plan
};

struct PlanExecutionOptions {
  KickMode mode = KickMode::kIdealized;
  /// Inner step for synthesized kicks, as delta^inner_exponent.
  double inner_exponent = 2.0;
  /// Kick scales beyond this many band limits make the grid phase
  /// unreliable; exceeding it sets PlanDiagnostics::accuracy_warning.
  double max_scale_per_band = 1.0;
};

struct PlanDiagnostics {
  EvolutionDiagnostics evolution;
  bool accuracy_warning = false;
};

/// Runs the plan with step delta. The result approaches exp(-i target) psi0
/// as delta -> 0. Throws std::invalid_argument unless delta > 0.
WaveFunction ExecutePlan(const Propagator& propagator, const WaveFunction& psi0,
                         const SynthesisPlan& plan, double delta,
                         const PlanExecutionOptions& options = {},
                         PlanDiagnostics* diagnostics = nullptr);

/// The same plan with every realized phase multiplied by s.
PlanNode ScalePlan(const PlanNode& node, double s);

// ---------------------------------------------------------------------------
// Transfer Y^j_{-j} -> (-1)^j Y^j_{+j}

struct Fidelity {
  double overlap = 0.0;   // |<target, psi>|
  double distance = 0.0;  // ||psi - target||
};

/// Throws std::invalid_argument when the band limits differ.
Fidelity Compare(const WaveFunction& psi, const WaveFunction& target);

enum class TransferMode {
  kExactPhase,   // the discontinuous phase 2 j alpha on the grid
  kIdealized,    // degree-d L2 fit applied as one phase
  kSynthesized,  // degree-d fit, rationalized, executed through a plan
};

struct TransferOptions {
  int j_max = 16;
  int oversample = 2;
  /// Band limit of the grid used for the L2 fits.
  int fit_band = 64;
  /// Step for synthesized mode.
  double delta = 1e-3;
  /// Rational rounding of fitted coefficients in synthesized mode.
  long denominator = 1000;
};

struct TransferResult {
  int j = 0;
  int degree = -1;  // -1 for the exact phase
  TransferMode mode = TransferMode::kExactPhase;
  double delta = 0.0;  // 0 unless synthesized
  double overlap = 0.0;
  double distance = 0.0;
  double residual = 0.0;
  double fit_residual = 0.0;
  double mirror_overlap = 0.0;
  double mirror_distance = 0.0;
};

/// Throws std::invalid_argument when j < 1, j > j_max, or degree is out of
/// range for the mode.
TransferResult TransferExperiment(int j, int degree, TransferMode mode,
                                  const TransferOptions& options = {});

/// Degree sweep of the idealized fit, one result per degree, computed
/// concurrently and returned in input order.
std::vector<TransferResult> TransferSweep(int j, const std::vector<int>& degrees,
                                          const TransferOptions& options = {});

// ---------------------------------------------------------------------------
// Commutator check on the truncated basis

struct BchReport {
  int j_max = 0;
  int interior_band = 0;           // test states have j <= interior_band
  std::array<double, 3> commutator_w{};  // max |[S, W] psi|, W = X, Y, Z
  double ad2_error = 0.0;          // max |ad^2_S(H0) psi + 2 M(g) psi|
  double ad3_max = 0.0;            // max |ad^3_S(H0) psi|
  double tolerance = 1e-8;
  bool passed = false;
};

/// Throws std::invalid_argument when j_max - 3 deg(phi) < 0.
BchReport BchMatrixCheck(const SpherePolynomial& phi, int j_max,
                         double tolerance = 1e-8);

}  // namespace s2ctl
