#include <algorithm>
#include <cmath>
#include <numbers>

#include "mdepth/metrics.hpp"

namespace mdepth {

double ray_auc(const AngleMap& pred, const AngleMap& gt, const RayAucOptions& options) {
  require_same_shape(pred.theta, gt.theta, "ray_auc");
  require_same_shape(pred.phi, gt.phi, "ray_auc");
  if (!(options.max_degrees > 0.0) || !(options.step_degrees > 0.0)) {
    throw UsageError("ray_auc: thresholds must be positive");
  }
  if (pred.theta.empty()) throw DegenerateInputError("ray_auc: empty angle maps");
  std::vector<double> errors(pred.theta.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const auto a = angles_to_ray(pred.theta[i], pred.phi[i]);
    const auto b = angles_to_ray(gt.theta[i], gt.phi[i]);
    errors[i] = angle_between(a, b) * 180.0 / std::numbers::pi;
  }
  std::sort(errors.begin(), errors.end());
  const auto steps = static_cast<int>(std::lround(options.max_degrees / options.step_degrees));
  double area = 0.0;
  for (int j = 0; j < steps; ++j) {
    const double t = j * options.step_degrees;
    const auto covered = std::upper_bound(errors.begin(), errors.end(), t) - errors.begin();
    area += static_cast<double>(covered) / static_cast<double>(errors.size());
  }
  return area / steps;
}

}  // namespace mdepth
