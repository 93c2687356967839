#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gpamp/clock_state.hpp"
#include "gpamp/geodesic.hpp"
#include "gpamp/interferogram.hpp"
#include "gpamp/noise.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

gpamp::InterferogramParams bench_params() {
  gpamp::InterferogramParams p;
  p.amplitude = 5000.0 / (p.sigma_z * std::sqrt(2.0 * kPi));
  p.visibility = 0.5;
  p.phase = 1.0;
  return p;
}

void BM_TotalPhaseSweep(benchmark::State& state) {
  const auto mapping = gpamp::PhaseMapping::experimental();
  const double theta = gpamp::theta_from_population(0.514);
  for (auto _ : state) {
    double acc = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double phi = 2.0 * kPi * (k + 0.5) / 1000.0;
      acc += gpamp::total_phase(mapping.state_at(theta, phi));
    }
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_TotalPhaseSweep);

void BM_EnclosedSolidAngle(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto loop = gpamp::latitude_arc(1.1, 1.7 * kPi, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gpamp::enclosed_solid_angle(loop));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_EnclosedSolidAngle)->Arg(1024)->Arg(4096)->Arg(65536);

void BM_SampleAtoms(benchmark::State& state) {
  const auto params = bench_params();
  std::uint64_t seed = 42;
  for (auto _ : state) {
    auto positions = gpamp::sample_atoms(params, 5000, seed++);
    benchmark::DoNotOptimize(positions.data());
  }
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_SampleAtoms);

void BM_FitInterferogram(benchmark::State& state) {
  const auto params = bench_params();
  const auto grid = gpamp::CameraGrid::centered(params);
  const auto image =
      gpamp::bin_to_image(gpamp::sample_atoms(params, 5000, 7), grid);
  const gpamp::FitOptions options;
  for (auto _ : state) {
    auto fit = gpamp::fit_interferogram_multistart(image, params, options);
    benchmark::DoNotOptimize(fit.params.phase);
  }
}
BENCHMARK(BM_FitInterferogram);

void BM_GainCurve(benchmark::State& state) {
  gpamp::GainCurveConfig config;
  for (int k = 0; k <= 240; ++k)
    config.phi.push_back(2.0 * kPi * (k + 0.5) / 241.0);
  for (auto _ : state) {
    auto curve = gpamp::gain_curve(config);
    benchmark::DoNotOptimize(curve.data());
  }
}
BENCHMARK(BM_GainCurve);

}  // namespace

BENCHMARK_MAIN();
