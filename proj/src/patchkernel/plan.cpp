#include <bit>

#include "mdepth/patchkernel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdepth {

PatchWorkPlan make_plan(const PatchSet& patches, int width, int height) {
  PatchWorkPlan plan;
  plan.width = width;
  plan.height = height;
  plan.jobs.reserve(patches.size());
  for (const auto& p : patches.entries) {
    const PatchJob job{p.x0(), p.y0(), p.size};
    if (job.size < 1 || job.x0 < 0 || job.y0 < 0 || job.x0 + job.size > width ||
        job.y0 + job.size > height) {
      throw UsageError("patch plan: patch at (" + std::to_string(p.cx) + ", " +
                       std::to_string(p.cy) + ") size " + std::to_string(p.size) +
                       " is not inside the " + std::to_string(width) + "x" +
                       std::to_string(height) + " grid");
    }
    plan.jobs.push_back(job);
  }
  return plan;
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n == 1) return values[0];
  const std::size_t half = std::bit_floor(n - 1);
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mdepth
