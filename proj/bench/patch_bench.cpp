#include <benchmark/benchmark.h>

#include <map>
#include <utility>

#include "mdepth/patchkernel.hpp"
#include "mdepth/rng.hpp"

using namespace mdepth;

namespace {

struct Fixture {
  Grid<double> pred, gt;
  ValidityMask mask;
  PatchWorkPlan plan;
};

const Fixture& fixture(int patch_size, int count) {
  static std::map<std::pair<int, int>, Fixture> cache;
  auto [it, fresh] = cache.try_emplace({patch_size, count});
  if (!fresh) return it->second;
  Fixture& f = it->second;
  const int side = 1024;
  Rng rng(7);
  f.pred = Grid<double>(side, side);
  f.gt = Grid<double>(side, side);
  f.mask = ValidityMask(side, side, 1);
  for (std::size_t i = 0; i < f.pred.size(); ++i) {
    f.pred[i] = uniform(rng, 0.05, 1.0);
    f.gt[i] = uniform(rng, 0.05, 1.0);
  }
  PatchSet set;
  for (int k = 0; k < count; ++k) {
    const int x0 = static_cast<int>(uniform_index(rng, side - patch_size + 1));
    const int y0 = static_cast<int>(uniform_index(rng, side - patch_size + 1));
    set.entries.push_back({x0 + patch_size / 2, y0 + patch_size / 2, patch_size});
  }
  f.plan = make_plan(set, side, side);
  return f;
}

void BM_Serial(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_patch_loss_serial(f.plan, f.pred, f.gt, f.mask));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_Parallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const int threads = static_cast<int>(state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_patch_loss(f.plan, f.pred, f.gt, f.mask, threads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_Serial)->Args({32, 1024})->Args({64, 1024})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)
    ->ArgsProduct({{32, 64}, {1024}, {1, 2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
