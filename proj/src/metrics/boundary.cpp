#include <algorithm>
#include <cmath>

#include "mdepth/metrics.hpp"

namespace mdepth {
namespace {

bool crosses(double a, double b, double threshold_percent) {
  return std::max(a / b, b / a) > 1.0 + threshold_percent / 100.0;
}

}  // namespace

std::optional<double> boundary_f1(const DepthMap& pred, const DepthMap& gt,
                                  const BoundaryOptions& options) {
  const auto aligned = align_prediction(pred, gt, AlignmentMode::MedianScale);
  const auto m = overlap(aligned, gt);
  const int w = gt.width();
  const int h = gt.height();
  const auto& d = aligned.values;
  const auto& g = gt.values;

  double f1_sum = 0.0;
  int defined = 0;
  for (double t : options.thresholds_percent) {
    std::size_t tp = 0, n_pred = 0, n_gt = 0;
    const auto visit = [&](std::size_t p, std::size_t q) {
      if (!m[p] || !m[q]) return;
      const bool in_gt = crosses(g[p], g[q], t);
      const bool in_pred = crosses(d[p], d[q], t);
      n_gt += in_gt;
      n_pred += in_pred;
      tp += in_gt && in_pred;
    };
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = gt.values.index(x, y);
        if (x + 1 < w) visit(p, p + 1);
        if (y + 1 < h) visit(p, p + static_cast<std::size_t>(w));
      }
    }
    if (n_gt == 0) continue;
    ++defined;
    const double precision = n_pred > 0 ? static_cast<double>(tp) / n_pred : 0.0;
    const double recall = static_cast<double>(tp) / n_gt;
    f1_sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  if (defined == 0) return std::nullopt;
  return 100.0 * f1_sum / defined;
}

}  // namespace mdepth
