#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mdepth/errors.hpp"
#include "patch_math.hpp"

namespace mdepth {
namespace {

detail::MiddlePair middle_by_sort(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return {v[(n - 1) / 2], v[n / 2]};
}

}  // namespace

PatchLossResult run_patch_loss_serial(const PatchWorkPlan& plan, const Grid<double>& pred,
                                      const Grid<double>& gt, const ValidityMask& gt_mask,
                                      const EgSsiOptions& options, bool with_grad) {
  detail::validate_inputs(plan, pred, gt, gt_mask);
  PatchLossResult result;
  result.per_patch.assign(plan.jobs.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<std::size_t>> pixels(plan.jobs.size());
  std::vector<std::vector<double>> grads(plan.jobs.size());
  std::vector<double> used_values;

  for (std::size_t p = 0; p < plan.jobs.size(); ++p) {
    const auto& job = plan.jobs[p];
    std::vector<double> x;
    std::vector<double> g;
    for (int y = job.y0; y < job.y0 + job.size; ++y) {
      for (int xx = job.x0; xx < job.x0 + job.size; ++xx) {
        const std::size_t i = pred.index(xx, y);
        if (!gt_mask[i]) continue;
        pixels[p].push_back(i);
        x.push_back(pred[i]);
        g.push_back(gt[i]);
      }
    }
    if (x.empty()) continue;
    if (with_grad) grads[p].assign(x.size(), 0.0);
    const auto term = detail::standardized_l1(x, g, middle_by_sort(x), middle_by_sort(g),
                                              options, grads[p]);
    if (!term.used) continue;
    result.per_patch[p] = term.contribution;
    used_values.push_back(term.contribution);
  }

  result.used = used_values.size();
  if (result.used == 0) throw DegenerateInputError("eg_ssi: every patch was skipped");
  const double inv_used = 1.0 / static_cast<double>(result.used);
  result.value = pairwise_sum(used_values) * inv_used;
  if (with_grad) {
    result.gradient = Grid<double>(pred.width(), pred.height(), 0.0);
    for (std::size_t p = 0; p < plan.jobs.size(); ++p) {
      if (std::isnan(result.per_patch[p])) continue;
      for (std::size_t k = 0; k < pixels[p].size(); ++k) {
        result.gradient[pixels[p][k]] += grads[p][k] * inv_used;
      }
    }
  }
  return result;
}

}  // namespace mdepth
