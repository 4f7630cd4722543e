#include <benchmark/benchmark.h>

#include <random>

#include "cit/beltrami.hpp"
#include "cit/convex_integration.hpp"
#include "cit/noise.hpp"
#include "cit/spectral.hpp"
#include "cit/transport.hpp"

using namespace cit;

namespace {

SpectralVectorField random_field(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GridVector g(n);
  for (auto& comp : g.v)
    for (double& x : comp) x = nd(rng);
  SpectralVectorField u = to_spectral(g);
  for (auto& comp : u.c) comp[0] = 0;
  strip_nyquist(u);
  return u;
}

const BeltramiSystem& desk_system() {
  static const BeltramiSystem sys = build_direction_sets("345a", "345b");
  return sys;
}

}  // namespace

static void BM_FftRoundTrip(benchmark::State& state) {
  const SpectralVectorField u = random_field(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(to_spectral(to_physical(u)));
}
BENCHMARK(BM_FftRoundTrip)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_InverseDivergence(benchmark::State& state) {
  const SpectralVectorField u = random_field(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(inverse_divergence(u));
}
BENCHMARK(BM_InverseDivergence)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_PaddedOuterProduct(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SpectralVectorField u = random_field(n, 3), w = random_field(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(sym_outer(u, w));
}
BENCHMARK(BM_PaddedOuterProduct)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_GammaSolve(benchmark::State& state) {
  Sym3 R = Sym3::Identity();
  R(0, 1) = R(1, 0) = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(gamma_solve(desk_system(), R, 0));
}
BENCHMARK(BM_GammaSolve);

static void BM_OuPath(benchmark::State& state) {
  CovarianceSpec spec;
  spec.amplitude = 2e-4;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_ou_path(spec, 1.0, 0.25, 32, 0.0, 0.05, 5e-4, NoiseStreams{7}));
}
BENCHMARK(BM_OuPath)->Unit(benchmark::kMillisecond);

static void BM_FlowMap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  VelocityPath u;
  u.dt = 5e-4;
  std::vector<cplx> coeffs(12);
  for (int p = 0; p < 6; ++p) {
    coeffs[p] = cplx(0.3, -0.1 * p);
    coeffs[p + 6] = std::conj(coeffs[p]);
  }
  const SpectralVectorField base = beltrami_flow(desk_system().sets[0], coeffs, 5, n);
  for (int i = 0; i < 20; ++i) u.samples.push_back(base);
  for (auto _ : state) benchmark::DoNotOptimize(solve_flow_map(u, 0.0, 19));
}
BENCHMARK(BM_FlowMap)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_AmplitudesAndPerturbation(benchmark::State& state) {
  const int n = 32;
  SymTensorField R(n);
  R.c[0][0] = 0.4;
  R.c[3][0] = -0.4;
  const std::vector<WindowFlow> windows{{0, 1.0, nullptr}};
  const int lambda = realized_lambda(desk_system(), n);
  for (auto _ : state) {
    const AmplitudeSet amps = amplitude_fields(R, 0.03, 1.0, desk_system(), windows);
    benchmark::DoNotOptimize(build_perturbation(amps, windows, desk_system(), lambda));
  }
}
BENCHMARK(BM_AmplitudesAndPerturbation)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
