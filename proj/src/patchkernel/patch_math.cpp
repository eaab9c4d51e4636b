#include "patch_math.hpp"

#include <cmath>

namespace mdepth::detail {
namespace {

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

double mean_abs_deviation(std::span<const double> v, double center) {
  double s = 0.0;
  for (double e : v) s += std::abs(e - center);
  return s / static_cast<double>(v.size());
}

std::size_t count_equal(std::span<const double> v, double value) {
  std::size_t c = 0;
  for (double e : v) c += e == value;
  return c;
}

}  // namespace

PatchTerm standardized_l1(std::span<const double> x, std::span<const double> g,
                          const MiddlePair& mx, const MiddlePair& mg,
                          const EgSsiOptions& options, std::span<double> grad) {
  const std::size_t n = x.size();
  PatchTerm term;
  if (n < options.min_valid || n == 0) return term;
  const double m = mx.median();
  const double mg_center = mg.median();
  const double a = mean_abs_deviation(x, m);
  const double ag = mean_abs_deviation(g, mg_center);
  if (!(a >= options.mad_floor) || !(ag >= options.mad_floor)) return term;

  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  double s_total = 0.0;  // sum of residual signs
  double p_total = 0.0;  // sum of sign * (x - m)
  double q_total = 0.0;  // sum of sign(x - m)
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (x[i] - m) / a - (g[i] - mg_center) / ag;
    sum += std::abs(r);
    const double s = sign(r);
    s_total += s;
    p_total += s * (x[i] - m);
    q_total += sign(x[i] - m);
  }
  term.used = true;
  term.contribution = sum * inv_n;
  if (grad.empty()) return term;

  // d median / d x_i: shared between the middle elements; zero on value ties.
  double w_lo = 0.0;
  double w_hi = 0.0;
  if (mx.lo == mx.hi) {
    w_lo = count_equal(x, mx.lo) == 1 ? 1.0 : 0.0;
  } else {
    w_lo = count_equal(x, mx.lo) == 1 ? 0.5 : 0.0;
    w_hi = count_equal(x, mx.hi) == 1 ? 0.5 : 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double mu = 0.0;
    if (x[j] == mx.lo) mu += w_lo;
    if (mx.lo != mx.hi && x[j] == mx.hi) mu += w_hi;
    const double r = (x[j] - m) / a - (g[j] - mg_center) / ag;
    const double da = inv_n * (sign(x[j] - m) - mu * q_total);
    grad[j] = inv_n * ((sign(r) - mu * s_total) / a - p_total * da / (a * a));
  }
  return term;
}

void validate_inputs(const PatchWorkPlan& plan, const Grid<double>& pred,
                     const Grid<double>& gt, const ValidityMask& mask) {
  require_same_shape(pred, gt, "patch loss");
  require_same_shape(pred, mask, "patch loss");
  if (pred.width() != plan.width || pred.height() != plan.height) {
    throw UsageError("patch loss: plan was built for a different grid size");
  }
}

}  // namespace mdepth::detail
