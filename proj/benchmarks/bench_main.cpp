#include <benchmark/benchmark.h>

#include "s2ctl/propagator.hpp"
#include "s2ctl/saturation.hpp"

using namespace s2ctl;

static void BM_Saturate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Saturate(DipolePotentials(), n, n));
}
BENCHMARK(BM_Saturate)->DenseRange(2, 6)->Unit(benchmark::kMillisecond);

static void BM_GradInner(benchmark::State& state) {
  const SpherePolynomial p = ParsePolynomial("3/2 x^2 y - z + x y z - 2 y^3 + 1");
  for (auto _ : state) benchmark::DoNotOptimize(GradInner(p, p));
}
BENCHMARK(BM_GradInner);

static void BM_TransformRoundTrip(benchmark::State& state) {
  const int j_max = static_cast<int>(state.range(0));
  const HarmonicTransform t(MakeGrid(j_max, 2), j_max);
  const WaveFunction psi = WaveFunction::Harmonic(j_max, j_max / 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(t.Analyze(t.Synthesize(psi)));
}
BENCHMARK(BM_TransformRoundTrip)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_ControlledStep(benchmark::State& state) {
  const int j_max = static_cast<int>(state.range(0));
  const Propagator prop(j_max);
  const WaveFunction psi = WaveFunction::Harmonic(j_max, 0, 0);
  prop.Step(psi, {1, 0.5, -0.25}, 0.1);  // warm the decomposition cache
  for (auto _ : state) benchmark::DoNotOptimize(prop.Step(psi, {1, 0.5, -0.25}, 0.1));
}
BENCHMARK(BM_ControlledStep)->Arg(8)->Arg(16)->Arg(24)->Unit(benchmark::kMicrosecond);

static void BM_ThreeExponential(benchmark::State& state) {
  const Propagator prop(16);
  const WaveFunction psi = WaveFunction::Harmonic(16, 0, 0);
  const SpherePolynomial z = SpherePolynomial::Z();
  for (auto _ : state)
    benchmark::DoNotOptimize(prop.ThreeExponential(psi, z, {0, 0, 0}, 1e-3));
}
BENCHMARK(BM_ThreeExponential)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
