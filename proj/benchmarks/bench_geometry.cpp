#include "conclab/catalog.hpp"
#include "conclab/geodesic.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

using namespace conclab;

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

void BM_ShootHyperbolic(benchmark::State& state) {
  const auto spec = geometry::make_hyperbolic(2);
  const auto frame = geometry::make_frame(spec, vec2(0.3, 1.2));
  const Vec xi = vec2(0.4, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::shoot(spec, frame, xi));
}
BENCHMARK(BM_ShootHyperbolic);

void BM_LogHyperbolic(benchmark::State& state) {
  const auto spec = geometry::make_hyperbolic(2);
  const auto frame = geometry::make_frame(spec, vec2(0.3, 1.2));
  const Vec y = geometry::shoot(spec, frame, vec2(0.4, -0.2));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::log_map(spec, frame, y));
}
BENCHMARK(BM_LogHyperbolic);

// Sweep of nearby targets with a shared warm start.
void BM_LogSweepWarm(benchmark::State& state) {
  const auto spec = geometry::make_perturbed_flat(2, 0.2, 2.0, vec2(0.0, 0.0));
  const auto frame = geometry::make_frame(spec, vec2(1.0, 0.5));
  const int n = 32;
  for (auto _ : state) {
    geometry::LogWarmStart warm;
    for (int i = 0; i < n; ++i) {
      const double t = 2.0 * M_PI * i / n;
      benchmark::DoNotOptimize(geometry::log_map(spec, frame, vec2(1.0 + 0.5 * std::cos(t), 0.5 + 0.5 * std::sin(t)), warm));
    }
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LogSweepWarm);

void BM_PullbackMetric(benchmark::State& state) {
  const auto spec = geometry::make_perturbed_flat(2, 0.2, 2.0, vec2(0.0, 0.0));
  const auto frame = geometry::make_frame(spec, vec2(1.0, 0.5));
  const Vec xi = vec2(0.3, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::pullback_metric(spec, frame, xi));
}
BENCHMARK(BM_PullbackMetric);

}  // namespace
