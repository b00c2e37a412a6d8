#include "conclab/catalog.hpp"
#include "conclab/discretization.hpp"
#include "conclab/partition.hpp"
#include "conclab/sequences.hpp"
#include "conclab/spotlight.hpp"

#include <benchmark/benchmark.h>

#include <nlohmann/json.hpp>

namespace {

using namespace conclab;

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

constexpr double kRho = 8.0 / 12.0;

void BM_GreedyBuild(benchmark::State& state) {
  const auto spec = geometry::make_flat(2);
  const double half = static_cast<double>(state.range(0));
  const auto region = discretization::Region::box(vec2(-half, -half), vec2(half, half));
  discretization::BuildOptions opts;
  opts.compute_multiplicity = false;
  for (auto _ : state) benchmark::DoNotOptimize(discretization::build(spec, region, 1.0, kRho, opts));
}
BENCHMARK(BM_GreedyBuild)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

struct Setup {
  geometry::ManifoldSpec spec = geometry::make_flat(2);
  discretization::Discretization disc =
      discretization::build(spec, discretization::Region::box(vec2(-2, -2), vec2(2, 2)), 0.75 * kRho, kRho);
  profiles::PartitionOfUnity pou = profiles::build_partition(spec, disc, kRho, -1.0);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

// Chart construction (lattice, exp images, pullback metrics) on a cold sampler.
void BM_ChartBuild(benchmark::State& state) {
  const auto& s = setup();
  const double h = kRho / static_cast<double>(state.range(0));
  for (auto _ : state) {
    spotlight::ChartSampler sampler(s.pou, h);
    benchmark::DoNotOptimize(sampler.chart(0));
  }
}
BENCHMARK(BM_ChartBuild)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_BankPairings(benchmark::State& state) {
  const auto& s = setup();
  const double h = kRho / static_cast<double>(state.range(0));
  spotlight::ChartSampler sampler(s.pou, h);
  const spotlight::TestBank bank(sampler.lattice(), kRho, 4.0);
  const auto family = sequences::make_family("traveling_bump", 2, {{"center", {0.0, 0.0}}, {"radius", 0.6}});
  const auto values = sampler.sample(0, [&](const Vec& x) { return family.generator(1, x); });
  for (auto _ : state)
    benchmark::DoNotOptimize(spotlight::bank_pairings(sampler.lattice(), values, bank));
  state.counters["bank"] = static_cast<double>(bank.size());
}
BENCHMARK(BM_BankPairings)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace
