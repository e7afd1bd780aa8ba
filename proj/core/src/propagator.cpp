#include "s2ctl/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

namespace s2ctl {

namespace {

double ToDouble(const Rational& r) { return r.get_d(); }

bool AllZero(const Controls& u) {
  return u[0] == 0.0 && u[1] == 0.0 && u[2] == 0.0;
}

// Upper bound for sup |p| on the sphere.
double SupBound(const SpherePolynomial& p) {
  double sum = 0.0;
  for (const auto& [m, c] : p.terms()) sum += std::abs(ToDouble(c));
  return sum;
}

SpherePolynomial LinearPotential(const Controls& u) {
  return SpherePolynomial::X() * Rational(u[0]) +
         SpherePolynomial::Y() * Rational(u[1]) +
         SpherePolynomial::Z() * Rational(u[2]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedule

Schedule& Schedule::Segment(double duration, const Controls& u) {
  if (duration == 0.0 || !std::isfinite(duration))
    throw std::invalid_argument("segment duration must be finite and nonzero");
  for (double v : u) {
    if (!std::isfinite(v)) throw std::invalid_argument("controls must be finite");
  }
  steps.emplace_back(ControlSegment{duration, u});
  return *this;
}

Schedule& Schedule::Kick(const SpherePolynomial& phi, double scale) {
  if (!std::isfinite(scale)) throw std::invalid_argument("kick scale must be finite");
  steps.emplace_back(PhaseKick{phi, scale});
  return *this;
}

void EvolutionDiagnostics::Merge(const EvolutionDiagnostics& other) {
  segments += other.segments;
  nonphysical_segments += other.nonphysical_segments;
  kicks += other.kicks;
  kick_residual += other.kick_residual;
  max_kick_scale = std::max(max_kick_scale, other.max_kick_scale);
  max_norm_drift = std::max(max_norm_drift, other.max_norm_drift);
  total_time += other.total_time;
}

// ---------------------------------------------------------------------------
// Propagator

struct Propagator::Decomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd vectors;
};

Propagator::Propagator(int j_max, int oversample,
                       std::optional<SpherePolynomial> potential)
    : j_max_(j_max),
      oversample_(oversample),
      potential_(std::move(potential)),
      transform_(MakeGrid(j_max, oversample), j_max),
      laplacian_(LaplacianDiag(j_max)) {
  if (potential_ && potential_->is_zero()) potential_.reset();
}

Propagator::~Propagator() = default;

bool Propagator::IsFree(const Controls& u) const {
  return AllZero(u) && !potential_;
}

const DipoleOperators& Propagator::Dipoles() const {
  std::lock_guard lock(mutex_);
  if (!dipoles_) {
    if (j_max_ > kMaxDenseBand) {
      throw std::invalid_argument("dense operators are limited to j_max <= " +
                                  std::to_string(kMaxDenseBand));
    }
    dipoles_ = std::make_unique<DipoleOperators>(DipoleMatrices(std::max(1, j_max_)));
  }
  return *dipoles_;
}

OperatorMatrix Propagator::Hamiltonian(const Controls& u) const {
  OperatorMatrix h = laplacian_;
  if (potential_) {
    const OperatorMatrix* v = nullptr;
    {
      std::lock_guard lock(mutex_);
      if (!potential_matrix_) {
        if (j_max_ > kMaxDenseBand) {
          throw std::invalid_argument("dense operators are limited to j_max <= " +
                                      std::to_string(kMaxDenseBand));
        }
        potential_matrix_ =
            std::make_unique<OperatorMatrix>(PolyOperatorMatrix(*potential_, j_max_));
      }
      v = potential_matrix_.get();
    }
    h = h + *v;
  }
  if (!AllZero(u)) {
    if (j_max_ == 0) return h;
    const DipoleOperators& d = Dipoles();
    const OperatorMatrix* parts[3] = {&d.x, &d.y, &d.z};
    for (int k = 0; k < 3; ++k) {
      if (u[static_cast<std::size_t>(k)] != 0.0)
        h = h + u[static_cast<std::size_t>(k)] * *parts[k];
    }
  }
  return h;
}

std::shared_ptr<const Propagator::Decomposition> Propagator::DecompositionFor(
    const Controls& u) const {
  {
    std::lock_guard lock(mutex_);
    auto it = decompositions_.find(u);
    if (it != decompositions_.end()) return it->second;
  }
  const Eigen::MatrixXcd h = Hamiltonian(u).ToDense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("Hamiltonian eigendecomposition failed");
  auto decomposition = std::make_shared<Decomposition>();
  decomposition->eigenvalues = solver.eigenvalues();
  decomposition->vectors = solver.eigenvectors();

  std::lock_guard lock(mutex_);
  if (decompositions_.size() >= 64) decompositions_.clear();
  auto [it, inserted] = decompositions_.emplace(u, std::move(decomposition));
  return it->second;
}

std::size_t Propagator::cached_decompositions() const {
  std::lock_guard lock(mutex_);
  return decompositions_.size();
}

WaveFunction Propagator::Step(const WaveFunction& psi, const Controls& u,
                              double t) const {
  if (psi.j_max != j_max_)
    throw std::invalid_argument("wave function band differs from propagator");
  if (t == 0.0) return psi;
  WaveFunction out = psi;
  if (IsFree(u)) {
    const Eigen::VectorXd& d = laplacian_.diagonal();
    for (Eigen::Index k = 0; k < d.size(); ++k)
      out.coeffs(k) *= std::polar(1.0, -t * d(k));
    return out;
  }
  const auto dec = DecompositionFor(u);
  Eigen::VectorXcd modal = dec->vectors.adjoint() * psi.coeffs;
  for (Eigen::Index k = 0; k < modal.size(); ++k)
    modal(k) *= std::polar(1.0, -t * dec->eigenvalues(k));
  out.coeffs = dec->vectors * modal;
  return out;
}

const RealGridValues& Propagator::Samples(const SpherePolynomial& phi) const {
  const std::string key = ToString(phi);
  {
    std::lock_guard lock(mutex_);
    auto it = samples_.find(key);
    if (it != samples_.end()) return *it->second;
  }
  auto values = std::make_unique<RealGridValues>(SamplePolynomial(phi, transform_.grid()));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = samples_.emplace(key, std::move(values));
  return *it->second;
}

PhaseResult Propagator::Kick(const WaveFunction& psi, const SpherePolynomial& phi,
                             double scale) const {
  if (psi.j_max != j_max_)
    throw std::invalid_argument("wave function band differs from propagator");
  if (scale == 0.0 || phi.is_zero()) return {psi, 0.0};
  return ApplyPhase(Samples(phi), scale, psi, transform_);
}

WaveFunction Propagator::Evolve(const WaveFunction& psi0, const Schedule& schedule,
                                EvolutionDiagnostics* diagnostics) const {
  EvolutionDiagnostics local;
  WaveFunction psi = psi0;
  for (const ScheduleStep& step : schedule.steps) {
    if (const auto* segment = std::get_if<ControlSegment>(&step)) {
      const double before = psi.norm();
      psi = Step(psi, segment->u, segment->duration);
      if (before > 0.0) {
        local.max_norm_drift =
            std::max(local.max_norm_drift, std::abs(psi.norm() - before) / before);
      }
      ++local.segments;
      if (segment->nonphysical()) ++local.nonphysical_segments;
      local.total_time += std::abs(segment->duration);
    } else {
      const auto& kick = std::get<PhaseKick>(step);
      PhaseResult r = Kick(psi, kick.phi, kick.scale);
      psi = std::move(r.psi);
      ++local.kicks;
      local.kick_residual += r.residual;
      local.max_kick_scale = std::max(local.max_kick_scale, std::abs(kick.scale));
    }
  }
  if (diagnostics) diagnostics->Merge(local);
  return psi;
}

WaveFunction Propagator::ThreeExponential(const WaveFunction& psi0,
                                          const SpherePolynomial& phi,
                                          const Controls& u, double delta,
                                          EvolutionDiagnostics* diagnostics) const {
  if (delta == 0.0 || !std::isfinite(delta))
    throw std::invalid_argument("three-exponential step needs delta != 0");
  const double c = 1.0 / std::sqrt(std::abs(delta));
  Schedule schedule;
  if (!phi.is_zero()) schedule.Kick(phi, c);
  schedule.Segment(delta, {u[0] / delta, u[1] / delta, u[2] / delta});
  if (!phi.is_zero()) schedule.Kick(phi, -c);
  return Evolve(psi0, schedule, diagnostics);
}

PhaseResult Propagator::LimitTarget(const WaveFunction& psi0,
                                    const SpherePolynomial& phi,
                                    const Controls& u) const {
  const SpherePolynomial exponent = GradInner(phi, phi) + LinearPotential(u);
  return Kick(psi0, exponent, -1.0);
}

// ---------------------------------------------------------------------------
// Convergence studies

std::vector<double> GeometricSchedule(double first, double last, int points) {
  if (points < 2 || first <= 0.0 || last <= 0.0)
    throw std::invalid_argument("geometric schedule needs two positive endpoints");
  std::vector<double> out;
  const double ratio = std::log(last / first) / (points - 1);
  for (int k = 0; k < points; ++k) out.push_back(first * std::exp(ratio * k));
  out.back() = last;
  return out;
}

std::vector<double> DefaultDeltaSchedule() { return GeometricSchedule(1e-1, 1e-4, 13); }

void FlagTruncationFloor(std::vector<ConvergenceRow>& rows) {
  bool floor = false;
  for (ConvergenceRow& row : rows) {
    if (!floor && row.kick_residual >= 0.05 * row.error) floor = true;
    row.flagged = floor;
  }
}

void FitSlope(ConvergenceRecord& record) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (const ConvergenceRow& row : record.rows) {
    if (row.flagged || row.error <= 0.0) continue;
    const double x = std::log(row.delta);
    const double y = std::log(row.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) {
    throw InsufficientRows("convergence fit needs at least 3 usable rows, got " +
                           std::to_string(n));
  }
  record.fitted_rows = n;
  record.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  record.intercept = (sy - record.slope * sx) / n;

  record.monotone_above_floor = true;
  double previous = std::numeric_limits<double>::infinity();
  for (const ConvergenceRow& row : record.rows) {
    if (row.flagged) continue;
    if (!(row.error < previous)) record.monotone_above_floor = false;
    previous = row.error;
  }
}

ConvergenceRecord ConvergenceStudy(const WaveFunction& psi0, const SpherePolynomial& phi,
                                   const Controls& u, const std::vector<double>& deltas,
                                   int j_max, int oversample,
                                   const std::optional<SpherePolynomial>& potential) {
  if (deltas.empty()) throw std::invalid_argument("empty delta schedule");
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 0.0))
      throw std::invalid_argument("delta schedule must be positive");
    if (k > 0 && !(deltas[k] < deltas[k - 1]))
      throw std::invalid_argument("delta schedule must be strictly decreasing");
  }
  if (psi0.j_max != j_max)
    throw std::invalid_argument("initial state band differs from j_max");

  const Propagator propagator(j_max, oversample, potential);
  const PhaseResult target = propagator.LimitTarget(psi0, phi, u);

  std::vector<std::future<ConvergenceRow>> futures;
  futures.reserve(deltas.size());
  for (double delta : deltas) {
    futures.push_back(std::async(std::launch::async, [&, delta] {
      EvolutionDiagnostics diag;
      const WaveFunction out = propagator.ThreeExponential(psi0, phi, u, delta, &diag);
      ConvergenceRow row;
      row.delta = delta;
      row.error = (out.coeffs - target.psi.coeffs).norm();
      row.kick_residual = diag.kick_residual;
      return row;
    }));
  }
  ConvergenceRecord record;
  record.j_max = j_max;
  record.oversample = oversample;
  for (auto& f : futures) record.rows.push_back(f.get());
  FlagTruncationFloor(record.rows);
  FitSlope(record);
  return record;
}

// ---------------------------------------------------------------------------
// Plan execution

PlanNode ScalePlan(const PlanNode& node, double s) {
  const Rational rs(s);
  switch (node.kind) {
    case PlanNode::Kind::kPulse:
      return PlanNode::Pulse({node.u[0] * rs, node.u[1] * rs, node.u[2] * rs});
    case PlanNode::Kind::kConjugate: {
      if (s == 0.0) return PlanNode::Phase(SpherePolynomial(), {});
      const Rational magnitude = s < 0 ? Rational(-rs) : rs;
      return PlanNode::Conjugate(node.phi, node.weight * magnitude,
                                 s < 0 ? -node.sign : node.sign, node.children.front());
    }
    case PlanNode::Kind::kPhase: {
      std::vector<PlanNode> children;
      if (s != 0.0) {
        for (const auto& c : node.children) children.push_back(ScalePlan(c, s));
      }
      return PlanNode::Phase(node.phase * rs, std::move(children));
    }
  }
  return {};
}

namespace {

class PlanRunner {
 public:
  PlanRunner(const Propagator& propagator, const PlanExecutionOptions& options,
             PlanDiagnostics& diagnostics)
      : propagator_(propagator), options_(options), diagnostics_(diagnostics) {}

  WaveFunction Run(const PlanNode& node, WaveFunction psi, double delta) {
    switch (node.kind) {
      case PlanNode::Kind::kPulse: {
        const Controls u{ToDouble(node.u[0]) / delta, ToDouble(node.u[1]) / delta,
                         ToDouble(node.u[2]) / delta};
        Schedule s;
        s.Segment(delta, u);
        return propagator_.Evolve(psi, s, &diagnostics_.evolution);
      }
      case PlanNode::Kind::kPhase:
        for (const auto& child : node.children) psi = Run(child, std::move(psi), delta);
        return psi;
      case PlanNode::Kind::kConjugate: {
        const double weight = ToDouble(node.weight);
        if (weight == 0.0 || node.phi.is_zero()) return psi;
        const double c = std::sqrt(weight / delta);
        if (c * SupBound(node.phi) >
            options_.max_scale_per_band * std::max(1, propagator_.j_max()))
          diagnostics_.accuracy_warning = true;
        psi = KickBy(node, c, std::move(psi), delta);
        Schedule drift;
        drift.Segment(node.sign * delta, {0.0, 0.0, 0.0});
        psi = propagator_.Evolve(psi, drift, &diagnostics_.evolution);
        return KickBy(node, -c, std::move(psi), delta);
      }
    }
    return psi;
  }

 private:
  // exp(i scale phi) psi, either exactly or through the child plan.
  WaveFunction KickBy(const PlanNode& conjugate, double scale, WaveFunction psi,
                      double delta) {
    if (options_.mode == KickMode::kIdealized) {
      Schedule s;
      s.Kick(conjugate.phi, scale);
      return propagator_.Evolve(psi, s, &diagnostics_.evolution);
    }
    const PlanNode scaled = ScalePlan(conjugate.children.front(), -scale);
    return Run(scaled, std::move(psi), std::pow(delta, options_.inner_exponent));
  }

  const Propagator& propagator_;
  const PlanExecutionOptions& options_;
  PlanDiagnostics& diagnostics_;
};

}  // namespace

WaveFunction ExecutePlan(const Propagator& propagator, const WaveFunction& psi0,
                         const SynthesisPlan& plan, double delta,
                         const PlanExecutionOptions& options,
                         PlanDiagnostics* diagnostics) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("plan execution needs delta > 0");
  PlanDiagnostics local;
  PlanRunner runner(propagator, options, local);
  WaveFunction out = runner.Run(plan.root, psi0, delta);
  if (diagnostics) {
    diagnostics->evolution.Merge(local.evolution);
    diagnostics->accuracy_warning = diagnostics->accuracy_warning || local.accuracy_warning;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transfer

Fidelity Compare(const WaveFunction& psi, const WaveFunction& target) {
  if (psi.j_max != target.j_max)
    throw std::invalid_argument("compared states have different band limits");
  return {std::abs(target.coeffs.dot(psi.coeffs)), (psi.coeffs - target.coeffs).norm()};
}

namespace {

struct TransferSetup {
  int j;
  TransferOptions options;
  HarmonicTransform fit;    // band fit_band on the fit grid
  HarmonicTransform apply;  // band j_max on the same grid
  RealGridValues phase;     // 2 j alpha
  WaveFunction start;
  WaveFunction target;
  WaveFunction mirror_start;
  WaveFunction mirror_target;

  static HarmonicTransform FitTransform(const TransferOptions& o) {
    return HarmonicTransform(MakeGrid(std::max(o.fit_band, o.j_max), o.oversample),
                             std::max(o.fit_band, o.j_max));
  }

  TransferSetup(int j_, const TransferOptions& o)
      : j(j_), options(o), fit(FitTransform(o)), apply(fit.grid(), o.j_max) {
    const SphereGrid& grid = fit.grid();
    phase.resize(grid.n_beta, grid.n_alpha);
    for (int ia = 0; ia < grid.n_alpha; ++ia)
      phase.col(ia) = 2.0 * j * grid.alpha[static_cast<std::size_t>(ia)];
    const double sign = j % 2 == 0 ? 1.0 : -1.0;
    start = WaveFunction::Harmonic(o.j_max, j, -j);
    target = WaveFunction::Harmonic(o.j_max, j, j);
    target.coeffs *= sign;
    mirror_start = WaveFunction::Harmonic(o.j_max, j, j);
    mirror_target = WaveFunction::Harmonic(o.j_max, j, -j);
    mirror_target.coeffs *= sign;
  }
};

void Validate(int j, const TransferOptions& o) {
  if (j < 1) throw std::invalid_argument("transfer needs j >= 1");
  if (j > o.j_max) throw std::invalid_argument("transfer needs j <= j_max");
  if (o.oversample < 1) throw std::invalid_argument("oversample must be >= 1");
}

void Record(TransferResult& r, const WaveFunction& out, const WaveFunction& target,
            const WaveFunction& mirror_out, const WaveFunction& mirror_target) {
  const Fidelity f = Compare(out, target);
  const Fidelity m = Compare(mirror_out, mirror_target);
  r.overlap = f.overlap;
  r.distance = f.distance;
  r.mirror_overlap = m.overlap;
  r.mirror_distance = m.distance;
}

TransferResult RunTransfer(const TransferSetup& s, int degree, TransferMode mode) {
  TransferResult r;
  r.j = s.j;
  r.degree = degree;
  r.mode = mode;
  switch (mode) {
    case TransferMode::kExactPhase: {
      r.degree = -1;
      const PhaseResult out = ApplyPhase(s.phase, 1.0, s.start, s.apply);
      const PhaseResult mirror = ApplyPhase(s.phase, -1.0, s.mirror_start, s.apply);
      r.residual = out.residual;
      Record(r, out.psi, s.target, mirror.psi, s.mirror_target);
      return r;
    }
    case TransferMode::kIdealized: {
      if (degree < 0 || degree > s.fit.j_max())
        throw std::invalid_argument("fit degree outside [0, fit_band]");
      const PhaseFit fit = L2FitPhase(s.phase, s.fit, degree);
      const RealGridValues values = fit.Values(s.fit.grid());
      const PhaseResult out = ApplyPhase(values, 1.0, s.start, s.apply);
      const PhaseResult mirror = ApplyPhase(values, -1.0, s.mirror_start, s.apply);
      r.fit_residual = fit.residual;
      r.residual = out.residual;
      Record(r, out.psi, s.target, mirror.psi, s.mirror_target);
      return r;
    }
    case TransferMode::kSynthesized: {
      if (degree < 0 || degree > 2)
        throw std::invalid_argument("synthesized transfer supports degree <= 2");
      const MonomialFit fit = FitMonomials(s.phase, s.fit.grid(), degree);
      const SpherePolynomial p = Rationalize(fit, s.options.denominator);
      const auto chain = Saturate(DipolePotentials(), 2, 2);
      // Plans realize exp(-i target), so the forward run plans -p.
      const SynthesisPlan forward = BuildSynthesisPlan(p * Rational(-1), chain);
      const SynthesisPlan backward = BuildSynthesisPlan(p, chain);
      const Propagator propagator(s.options.j_max, s.options.oversample);
      PlanDiagnostics diag;
      const WaveFunction out =
          ExecutePlan(propagator, s.start, forward, s.options.delta, {}, &diag);
      const WaveFunction mirror =
          ExecutePlan(propagator, s.mirror_start, backward, s.options.delta, {}, &diag);
      r.delta = s.options.delta;
      r.fit_residual = fit.residual;
      r.residual = diag.evolution.kick_residual;
      Record(r, out, s.target, mirror, s.mirror_target);
      return r;
    }
  }
  return r;
}

}  // namespace

TransferResult TransferExperiment(int j, int degree, TransferMode mode,
                                  const TransferOptions& options) {
  Validate(j, options);
  const TransferSetup setup(j, options);
  return RunTransfer(setup, degree, mode);
}

std::vector<TransferResult> TransferSweep(int j, const std::vector<int>& degrees,
                                          const TransferOptions& options) {
  Validate(j, options);
  const TransferSetup setup(j, options);
  std::vector<std::future<TransferResult>> futures;
  for (int d : degrees) {
    futures.push_back(std::async(std::launch::async, [&setup, d] {
      return RunTransfer(setup, d, TransferMode::kIdealized);
    }));
  }
  std::vector<TransferResult> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

// ---------------------------------------------------------------------------
// Commutators

BchReport BchMatrixCheck(const SpherePolynomial& phi, int j_max, double tolerance) {
  const int degree = std::max(0, phi.degree());
  BchReport report;
  report.j_max = j_max;
  report.tolerance = tolerance;
  report.interior_band = j_max - 3 * degree;
  if (j_max < 1 || report.interior_band < 0) {
    std::ostringstream msg;
    msg << "band margin too small: j_max " << j_max << " - 3 * degree " << degree
        << " < 0";
    throw std::invalid_argument(msg.str());
  }
  const Eigen::Index cols = BasisSize(report.interior_band);
  const Eigen::MatrixXcd s = PolyOperatorMatrix(phi, j_max).ToDense();
  const Eigen::MatrixXcd h0 = LaplacianDiag(j_max).ToDense();
  const Eigen::MatrixXcd g = PolyOperatorMatrix(GradInner(phi, phi), j_max).ToDense();
  const DipoleOperators dipoles = DipoleMatrices(j_max);

  auto commutator = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return Eigen::MatrixXcd(a * b - b * a);
  };
  const Eigen::MatrixXcd ad1 = commutator(s, h0);
  const Eigen::MatrixXcd ad2 = commutator(s, ad1);
  const Eigen::MatrixXcd ad3 = commutator(s, ad2);

  const OperatorMatrix* w[3] = {&dipoles.x, &dipoles.y, &dipoles.z};
  for (int k = 0; k < 3; ++k) {
    report.commutator_w[static_cast<std::size_t>(k)] =
        commutator(s, w[k]->ToDense()).leftCols(cols).cwiseAbs().maxCoeff();
  }
  report.ad2_error = (ad2 + 2.0 * g).leftCols(cols).cwiseAbs().maxCoeff();
  report.ad3_max = ad3.leftCols(cols).cwiseAbs().maxCoeff();
  report.passed = report.ad2_error <= tolerance && report.ad3_max <= tolerance &&
                  *std::max_element(report.commutator_w.begin(),
                                    report.commutator_w.end()) <= tolerance;
  return report;
}

}  // namespace s2ctl
