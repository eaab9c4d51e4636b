#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mdepth/errors.hpp"
#include "patch_math.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdepth {
namespace {

// Selection on a scratch copy; the input order is kept for the per-pixel pass.
detail::MiddlePair middle_by_select(std::span<const double> v, std::vector<double>& work) {
  work.assign(v.begin(), v.end());
  const std::size_t n = work.size();
  const auto upper = work.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(work.begin(), upper, work.end());
  const double hi = *upper;
  const double lo = (n % 2 == 1) ? hi : *std::max_element(work.begin(), upper);
  return {lo, hi};
}

struct PatchOutput {
  double contribution = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> pixels;
  std::vector<double> grad;
};

}  // namespace

PatchLossResult run_patch_loss(const PatchWorkPlan& plan, const Grid<double>& pred,
                               const Grid<double>& gt, const ValidityMask& gt_mask,
                               int threads, const EgSsiOptions& options, bool with_grad) {
  detail::validate_inputs(plan, pred, gt, gt_mask);
  const int nthreads = resolve_threads(threads);
  const auto njobs = static_cast<std::ptrdiff_t>(plan.jobs.size());
  std::vector<PatchOutput> outputs(plan.jobs.size());

#pragma omp parallel num_threads(nthreads)
  {
    std::vector<double> x;
    std::vector<double> g;
    std::vector<double> work;
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t p = 0; p < njobs; ++p) {
      const auto& job = plan.jobs[static_cast<std::size_t>(p)];
      auto& out = outputs[static_cast<std::size_t>(p)];
      x.clear();
      g.clear();
      out.pixels.clear();
      for (int y = job.y0; y < job.y0 + job.size; ++y) {
        const std::size_t row = pred.index(0, y);
        for (int xx = job.x0; xx < job.x0 + job.size; ++xx) {
          const std::size_t i = row + static_cast<std::size_t>(xx);
          if (!gt_mask[i]) continue;
          out.pixels.push_back(i);
          x.push_back(pred[i]);
          g.push_back(gt[i]);
        }
      }
      if (x.empty()) continue;
      const auto mx = middle_by_select(x, work);
      const auto mg = middle_by_select(g, work);
      if (with_grad) out.grad.assign(x.size(), 0.0);
      const auto term = detail::standardized_l1(x, g, mx, mg, options, out.grad);
      if (term.used) out.contribution = term.contribution;
    }
  }

  PatchLossResult result;
  result.per_patch.resize(outputs.size());
  std::vector<double> used_values;
  used_values.reserve(outputs.size());
  for (std::size_t p = 0; p < outputs.size(); ++p) {
    result.per_patch[p] = outputs[p].contribution;
    if (!std::isnan(outputs[p].contribution)) used_values.push_back(outputs[p].contribution);
  }
  result.used = used_values.size();
  if (result.used == 0) throw DegenerateInputError("eg_ssi: every patch was skipped");
  const double inv_used = 1.0 / static_cast<double>(result.used);
  result.value = pairwise_sum(used_values) * inv_used;
  if (with_grad) {
    // Overlapping patches: scatter in patch order so sums are schedule-free.
    result.gradient = Grid<double>(pred.width(), pred.height(), 0.0);
    for (const auto& out : outputs) {
      if (std::isnan(out.contribution)) continue;
      for (std::size_t k = 0; k < out.pixels.size(); ++k) {
        result.gradient[out.pixels[k]] += out.grad[k] * inv_used;
      }
    }
  }
  return result;
}

}  // namespace mdepth
