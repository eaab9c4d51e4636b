#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>

#include "mdepth/patchkernel.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

std::vector<BenchRow> bench_kernel(const BenchConfig& config) {
  Rng rng(config.seed);
  const int w = config.grid_width;
  const int h = config.grid_height;
  Grid<double> pred(w, h);
  Grid<double> gt(w, h);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    gt[i] = uniform(rng, 0.05, 1.0);
    pred[i] = gt[i] * uniform(rng, 0.8, 1.25);
  }
  const ValidityMask mask(w, h, 1);

  std::vector<BenchRow> rows;
  for (int size : config.sizes) {
    for (std::size_t count : config.counts) {
      PatchSet set;
      const int s = std::clamp(size, 1, std::min(w, h));
      for (std::size_t k = 0; k < count; ++k) {
        const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w - s + 1)));
        const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(h - s + 1)));
        set.entries.push_back({x0 + s / 2, y0 + s / 2, s});
      }
      const auto plan = make_plan(set, w, h);
      for (int t : config.threads) {
        BenchRow row{s, count, resolve_threads(t), 0.0, 0.0, 0.0};
        if (count > 0) {
          const auto run = [&] { (void)run_patch_loss(plan, pred, gt, mask, row.threads); };
          for (int i = 0; i < config.warmup; ++i) run();
          double best = std::numeric_limits<double>::infinity();
          for (int i = 0; i < std::max(1, config.repeats); ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            run();
            const auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
          }
          row.seconds = best;
          row.patches_per_s = static_cast<double>(count) / best;
          row.pixels_per_s = static_cast<double>(count) * s * s / best;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_bench_report(std::ostream& os, std::span<const BenchRow> rows, char delimiter) {
  std::string header = kBenchHeader;
  if (delimiter != ',') std::replace(header.begin(), header.end(), ',', delimiter);
  os << header << '\n';
  for (const auto& r : rows) {
    os << r.patch_size << delimiter << r.patch_count << delimiter << r.threads << delimiter
       << r.seconds << delimiter << r.patches_per_s << delimiter << r.pixels_per_s << '\n';
  }
}

}  // namespace mdepth
