#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdepth/grid.hpp"

namespace mdepth {

// Square patch; covers [x0, x0 + size) x [y0, y0 + size).
struct Patch {
  int cx = 0;
  int cy = 0;
  int size = 0;

  int x0() const noexcept { return cx - size / 2; }
  int y0() const noexcept { return cy - size / 2; }
  friend bool operator==(const Patch&, const Patch&) = default;
};

struct PatchSet {
  std::vector<Patch> entries;
  std::uint64_t seed = 0;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
};

struct EgSsiOptions {
  std::size_t min_valid = 16;  // GT pixels a patch needs to contribute
  double mad_floor = 1e-6;     // on both prediction and GT
};

struct PatchJob {
  int x0 = 0;
  int y0 = 0;
  int size = 0;
};

// Jobs run in any order; results are combined by a fixed pairwise tree over
// patch indices so the output does not depend on the thread count.
struct PatchWorkPlan {
  int width = 0;
  int height = 0;
  std::vector<PatchJob> jobs;
};

PatchWorkPlan make_plan(const PatchSet& patches, int width, int height);

struct PatchLossResult {
  double value = 0.0;             // mean over contributing patches
  std::size_t used = 0;           // contributing patches
  std::vector<double> per_patch;  // NaN for skipped patches
  Grid<double> gradient;          // d value / d prediction; empty if not requested
};

// OpenMP kernel. Throws DegenerateInputError when every patch is skipped.
PatchLossResult run_patch_loss(const PatchWorkPlan& plan, const Grid<double>& pred,
                               const Grid<double>& gt, const ValidityMask& gt_mask,
                               int threads, const EgSsiOptions& options = {},
                               bool with_grad = true);

// Single-threaded reference with full sorts instead of selection.
PatchLossResult run_patch_loss_serial(const PatchWorkPlan& plan, const Grid<double>& pred,
                                      const Grid<double>& gt, const ValidityMask& gt_mask,
                                      const EgSsiOptions& options = {},
                                      bool with_grad = true);

// Fixed-shape pairwise summation: split at the largest power of two below n.
double pairwise_sum(std::span<const double> values);

struct BenchRow {
  int patch_size = 0;
  std::size_t patch_count = 0;
  int threads = 0;
  double seconds = 0.0;
  double patches_per_s = 0.0;
  double pixels_per_s = 0.0;
};

struct BenchConfig {
  std::vector<int> sizes{64};
  std::vector<std::size_t> counts{1024};
  std::vector<int> threads{1};
  int grid_width = 1024;
  int grid_height = 1024;
  int warmup = 1;
  int repeats = 3;  // best-of
  std::uint64_t seed = 0;
};

std::vector<BenchRow> bench_kernel(const BenchConfig& config);
void write_bench_report(std::ostream& os, std::span<const BenchRow> rows, char delimiter = ',');
inline constexpr const char* kBenchHeader =
    "patch_size,patch_count,threads,seconds,patches_per_s,pixels_per_s";

// Number of threads the kernel would use for `requested` (0 = runtime default).
int resolve_threads(int requested);

}  // namespace mdepth
