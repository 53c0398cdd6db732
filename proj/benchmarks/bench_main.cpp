#include <benchmark/benchmark.h>

#include <random>

#include "ategb/bounds.hpp"
#include "ategb/game.hpp"
#include "ategb/mvn.hpp"
#include "ategb/oracle.hpp"
#include "ategb/regions.hpp"
#include "ategb/simulator.hpp"

using namespace ategb;

namespace {

RegionSet random_set(std::mt19937_64& rng, int dim, int boxes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RegionSet out = RegionSet::empty(dim);
  for (int k = 0; k < boxes; ++k) {
    std::vector<Interval> sides;
    for (int s = 0; s < dim; ++s) {
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      sides.push_back({a, b});
    }
    out = unite(out, RegionSet::of(Box(std::move(sides))));
  }
  return out;
}

void BM_RegionUnion(benchmark::State& st) {
  std::mt19937_64 rng(1);
  const int dim = static_cast<int>(st.range(0));
  const auto a = random_set(rng, dim, 6);
  const auto b = random_set(rng, dim, 6);
  for (auto _ : st) benchmark::DoNotOptimize(unite(a, b));
}
BENCHMARK(BM_RegionUnion)->Arg(2)->Arg(3)->Arg(4);

void BM_EquilibriumRegions(benchmark::State& st) {
  std::mt19937_64 rng(2);
  const auto g = random_game(rng, {static_cast<int>(st.range(0)), true});
  for (auto _ : st) benchmark::DoNotOptimize(equilibrium_regions(g, 0));
}
BENCHMARK(BM_EquilibriumRegions)->Arg(2)->Arg(3)->Arg(4)->Arg(6);

void BM_Bvn(benchmark::State& st) {
  double acc = 0.0;
  for (auto _ : st) {
    acc += mvn::bvn_cdf(0.3, -0.7, 0.5);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_Bvn);

void BM_Generate(benchmark::State& st) {
  const auto p = default_params();
  const auto n = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(generate(p, n, 3));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Generate)->Arg(10000)->Arg(200000)->Unit(benchmark::kMillisecond);

void BM_PopulationProbs(benchmark::State& st) {
  const auto p = default_params();
  for (auto _ : st) benchmark::DoNotOptimize(oracle::population_probs(p, p.selection));
}
BENCHMARK(BM_PopulationProbs)->Unit(benchmark::kMillisecond);

void BM_ComputeBounds(benchmark::State& st) {
  const auto p = default_params(static_cast<int>(st.range(0)));
  const auto ct = oracle::population_probs(p, p.selection).table;
  BoundsTarget t;
  t.ate = {{0b11, 0b00}};
  for (auto _ : st) benchmark::DoNotOptimize(compute_bounds(ct, t, {}));
}
BENCHMARK(BM_ComputeBounds)->Arg(3)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& st) {
  const auto ds = generate(default_params(), 20000, 4);
  BootstrapTarget bt;
  for (auto _ : st) benchmark::DoNotOptimize(bootstrap_ci(ds, bt, 0.95, 100, 5));
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
