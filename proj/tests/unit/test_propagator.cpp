#include <cmath>
#include <random>

#include "doctest.h"
#include "s2ctl/propagator.hpp"

using namespace s2ctl;

namespace {

SpherePolynomial P(const char* text) { return ParsePolynomial(text); }

WaveFunction RandomState(int j_max, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n;
  WaveFunction psi = WaveFunction::Zero(j_max);
  for (int k = 0; k < psi.coeffs.size(); ++k) psi.coeffs(k) = {n(rng), n(rng)};
  psi.coeffs.normalize();
  return psi;
}

double Distance(const WaveFunction& a, const WaveFunction& b) {
  return (a.coeffs - b.coeffs).norm();
}

}  // namespace

TEST_SUITE("propagator") {

TEST_CASE("free evolution multiplies by exp(-i j(j+1) t)") {
  const Propagator prop(6);
  const WaveFunction psi = WaveFunction::Harmonic(6, 3, -2);
  const WaveFunction out = prop.Step(psi, {0, 0, 0}, 0.37);
  CHECK(std::abs(out.at(3, -2) - std::exp(Complex(0, -12 * 0.37))) < 1e-14);
  CHECK(prop.Hamiltonian({0, 0, 0}).is_diagonal());
}

TEST_CASE("unitarity of control schedules") {
  const Propagator prop(12);
  const WaveFunction psi = RandomState(12, 1);
  Schedule s;
  s.Segment(0.3, {1, 0, -2}).Segment(-0.2, {0, 3, 0}).Segment(0.05, {4, 4, 4});
  EvolutionDiagnostics diag;
  const WaveFunction out = prop.Evolve(psi, s, &diag);
  CHECK(std::abs(out.norm() - 1.0) < 1e-10);
  CHECK(diag.max_norm_drift < 1e-10);
  CHECK(diag.nonphysical_segments == 1);
  CHECK(diag.total_time == doctest::Approx(0.55));
  CHECK_THROWS_AS(s.Segment(0.0, {0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(s.Segment(std::nan(""), {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("group law") {
  const Propagator prop(10);
  const WaveFunction psi = RandomState(10, 2);
  const Controls u{0.5, -1.5, 2.0};
  const WaveFunction a = prop.Step(prop.Step(psi, u, 0.21), u, -0.08);
  const WaveFunction b = prop.Step(psi, u, 0.13);
  CHECK(Distance(a, b) < 1e-10);
  CHECK(prop.cached_decompositions() >= 1);
}

TEST_CASE("Hamiltonian is Hermitian with and without a potential") {
  const Propagator plain(8);
  CHECK(plain.Hamiltonian({1, 2, 3}).HermiticityError() < 1e-12);
  const Propagator with_v(8, 2, P("x y - z^2"));
  CHECK(with_v.Hamiltonian({0, 0, 0}).HermiticityError() < 1e-12);
  CHECK_FALSE(with_v.Hamiltonian({0, 0, 0}).is_diagonal());
}

TEST_CASE("strong pulse limit") {
  const int j_max = 16;
  const Propagator prop(j_max);
  const WaveFunction psi0 = WaveFunction::Harmonic(j_max, 0, 0);
  const PhaseResult target = prop.LimitTarget(psi0, SpherePolynomial(), {1, 0, 0});
  double previous = 1.0;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const double err =
        Distance(prop.ThreeExponential(psi0, SpherePolynomial(), {1, 0, 0}, delta),
                 target.psi);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous < 1e-3);
  CHECK_THROWS_AS(prop.ThreeExponential(psi0, P("z"), {0, 0, 0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("convergence for phi = z matches the frozen record") {
  const WaveFunction psi0 = WaveFunction::Harmonic(16, 0, 0);
  const ConvergenceRecord r =
      ConvergenceStudy(psi0, P("z"), {0, 0, 0}, DefaultDeltaSchedule(), 16, 2);
  REQUIRE(r.rows.size() == 13);
  CHECK(r.fitted_rows == 5);
  CHECK(r.monotone_above_floor);
  CHECK(r.slope == doctest::Approx(0.5013).epsilon(1e-3));
  CHECK(r.rows[0].error == doctest::Approx(0.40656).epsilon(1e-4));
  CHECK(r.rows[4].error == doctest::Approx(0.12832).epsilon(1e-4));
  CHECK(r.rows[5].flagged);
  for (std::size_t k = 5; k < r.rows.size(); ++k) CHECK(r.rows[k].flagged);
}

TEST_CASE("convergence for a pure pulse has slope one") {
  const WaveFunction psi0 = WaveFunction::Harmonic(16, 0, 0);
  const ConvergenceRecord r =
      ConvergenceStudy(psi0, SpherePolynomial(), {1, 0, 0}, DefaultDeltaSchedule(), 16, 2);
  CHECK(r.slope == doctest::Approx(0.9998).epsilon(1e-3));
  CHECK(r.rows.back().error == doctest::Approx(6.266e-5).epsilon(1e-3));
}

TEST_CASE("truncation flagging and slope fit") {
  std::vector<ConvergenceRow> rows = {
      {1e-1, 1.0, 0.0, false}, {1e-2, 0.3, 0.0, false}, {1e-3, 0.1, 0.006, false},
      {1e-4, 0.09, 0.0, false}};
  FlagTruncationFloor(rows);
  CHECK_FALSE(rows[1].flagged);
  CHECK(rows[2].flagged);
  CHECK(rows[3].flagged);

  ConvergenceRecord rec;
  rec.rows = rows;
  CHECK_THROWS_AS(FitSlope(rec), InsufficientRows);

  ConvergenceRecord line;
  for (double d : {1e-1, 1e-2, 1e-3}) line.rows.push_back({d, 2 * std::sqrt(d), 0.0, false});
  FitSlope(line);
  CHECK(line.slope == doctest::Approx(0.5));
  CHECK(line.intercept == doctest::Approx(std::log(2.0)));
  CHECK(line.monotone_above_floor);

  const WaveFunction psi0 = WaveFunction::Harmonic(4, 0, 0);
  CHECK_THROWS_AS(ConvergenceStudy(psi0, P("z"), {0, 0, 0}, {1e-2, 1e-1, 1e-3}, 4, 2),
                  std::invalid_argument);
}

TEST_CASE("geometric schedule") {
  const auto d = DefaultDeltaSchedule();
  CHECK(d.size() == 13);
  CHECK(d.front() == doctest::Approx(1e-1));
  CHECK(d.back() == doctest::Approx(1e-4));
  for (std::size_t k = 1; k < d.size(); ++k) CHECK(d[k] < d[k - 1]);
}

TEST_CASE("plan execution approaches the idealized phase") {
  const auto chain = Saturate(DipolePotentials(), 2, 2);

  // A Pulse leaf needs the dense Hamiltonian; a small band keeps it cheap.
  const Propagator small(16);
  const WaveFunction s0 = WaveFunction::Harmonic(16, 0, 0);
  const SynthesisPlan leaf = BuildSynthesisPlan(P("z"), chain);
  const PhaseResult leaf_target = small.Kick(s0, P("z"), -1.0);
  const double e1 = Distance(ExecutePlan(small, s0, leaf, 1e-2), leaf_target.psi);
  const double e2 = Distance(ExecutePlan(small, s0, leaf, 1e-3), leaf_target.psi);
  CHECK(e2 < e1);
  CHECK(e2 < 1e-3);

  // Conjugations with idealized kicks only drift freely, so a wide band is cheap.
  const Propagator wide(64);
  const WaveFunction w0 = WaveFunction::Harmonic(64, 0, 0);
  const SynthesisPlan g = BuildSynthesisPlan(P("1 - z^2"), chain);
  const PhaseResult g_target = wide.Kick(w0, P("1 - z^2"), -1.0);
  PlanDiagnostics diag;
  const double a = Distance(ExecutePlan(wide, w0, g, 1e-2), g_target.psi);
  const double b = Distance(ExecutePlan(wide, w0, g, 1e-3, {}, &diag), g_target.psi);
  CHECK(b < a);
  CHECK_FALSE(diag.accuracy_warning);
  CHECK_THROWS_AS(ExecutePlan(wide, w0, g, 0.0), std::invalid_argument);
}

TEST_CASE("negative weights run adjoint segments") {
  const Propagator prop(32);
  const WaveFunction psi0 = WaveFunction::Harmonic(32, 1, 0);
  const auto chain = Saturate(DipolePotentials(), 2, 2);
  const SynthesisPlan plan = BuildSynthesisPlan(P("z^2 - 1"), chain);
  PlanDiagnostics diag;
  ExecutePlan(prop, psi0, plan, 1e-2, {}, &diag);
  CHECK(diag.evolution.nonphysical_segments >= 1);
}

TEST_CASE("scaled plans realize scaled phases") {
  const auto chain = Saturate(DipolePotentials(), 2, 2);
  const SynthesisPlan plan = BuildSynthesisPlan(P("4 x z + y"), chain);
  CHECK(ScalePlan(plan.root, -2.0).Accumulated() == P("-8 x z - 2 y"));
}

TEST_CASE("transfer by the exact phase") {
  for (int j : {1, 2, 3}) {
    const TransferResult r = TransferExperiment(j, -1, TransferMode::kExactPhase);
    CHECK(r.distance < 1e-6 + r.residual);
    CHECK(r.overlap == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(TransferExperiment(0, -1, TransferMode::kExactPhase),
                  std::invalid_argument);
  CHECK_THROWS_AS(TransferExperiment(17, -1, TransferMode::kExactPhase),
                  std::invalid_argument);
}

TEST_CASE("transfer and its mirror have equal overlaps") {
  for (int d : {1, 4, 12}) {
    const TransferResult r = TransferExperiment(2, d, TransferMode::kIdealized);
    CHECK(std::abs(r.overlap - r.mirror_overlap) < 1e-8);
    CHECK(r.overlap >= 0.0);
    CHECK(r.overlap <= 1.0 + 1e-12);
    CHECK(r.distance <= 2.0);
  }
}

TEST_CASE("start and target share the degenerate eigenvalue") {
  const OperatorMatrix lap = LaplacianDiag(16);
  for (int j = 1; j <= 16; ++j)
    CHECK(lap.diagonal()(FlatIndex(j, -j)) == lap.diagonal()(FlatIndex(j, j)));
}

TEST_CASE("frozen j = 1 degree sweep") {
  const std::vector<int> degrees = {1, 2, 4, 8, 16};
  const auto rows = TransferSweep(1, degrees);
  REQUIRE(rows.size() == degrees.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].degree == degrees[k]);
    if (k > 0) CHECK(rows[k].overlap > rows[k - 1].overlap);
  }
  CHECK(rows.back().overlap == doctest::Approx(0.916727).epsilon(1e-5));
}

TEST_CASE("synthesized transfer at low degree") {
  // The rationalized degree-2 fit of 2 alpha has weights near 5, so the kick
  // scale sqrt(weight / delta) outruns small bands quickly; this only checks
  // the mode end to end.
  TransferOptions options;
  options.delta = 1e-2;
  const TransferResult r = TransferExperiment(1, 2, TransferMode::kSynthesized, options);
  CHECK(r.mode == TransferMode::kSynthesized);
  CHECK(r.delta == 1e-2);
  CHECK(r.overlap >= 0.0);
  CHECK(r.overlap <= 1.0 + 1e-12);
  CHECK(r.fit_residual > 0.0);
  CHECK_THROWS_AS(TransferExperiment(1, 3, TransferMode::kSynthesized, options),
                  std::invalid_argument);
}

TEST_CASE("commutator check on the truncated basis") {
  for (const char* phi : {"z", "x", "x + y"}) {
    const BchReport r = BchMatrixCheck(P(phi), 12);
    CHECK(r.passed);
    CHECK(r.interior_band == 9);
    CHECK(r.ad2_error < 1e-8);
    CHECK(r.ad3_max < 1e-8);
    CHECK(r.commutator_w[0] < 1e-10);
  }
  CHECK_THROWS_AS(BchMatrixCheck(P("x^3"), 8), std::invalid_argument);
}

TEST_CASE("fidelity") {
  const WaveFunction a = WaveFunction::Harmonic(3, 1, 1);
  WaveFunction b = a;
  b.coeffs *= Complex(0, 1);
  const Fidelity f = Compare(b, a);
  CHECK(f.overlap == doctest::Approx(1.0));
  CHECK(f.distance == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(Compare(a, WaveFunction::Zero(4)), std::invalid_argument);
}

}  // TEST_SUITE
