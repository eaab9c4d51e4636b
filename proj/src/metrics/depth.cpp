#include <cmath>
#include <vector>

#include "mdepth/metrics.hpp"
#include "stats.hpp"

namespace mdepth {

AlignmentMode parse_alignment(const std::string& name) {
  if (name == "none") return AlignmentMode::None;
  if (name == "median" || name == "median_scale") return AlignmentMode::MedianScale;
  if (name == "ssi" || name == "ssi_inverse_depth") return AlignmentMode::SsiInverseDepth;
  throw UsageError("unknown alignment mode '" + name + "' (expected none, median or ssi)");
}

std::string to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::None: return "none";
    case AlignmentMode::MedianScale: return "median";
    case AlignmentMode::SsiInverseDepth: return "ssi";
  }
  return "none";
}

ValidityMask overlap(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred.values, gt.values, "depth metrics");
  require_same_shape(pred.mask, gt.mask, "depth metrics");
  ValidityMask m(pred.width(), pred.height(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = pred.values[i];
    const double g = gt.values[i];
    m[i] = (pred.mask[i] && gt.mask[i] && d > 0.0 && g > 0.0 && std::isfinite(d) &&
            std::isfinite(g))
               ? 1
               : 0;
  }
  return m;
}

DepthMap align_prediction(const DepthMap& pred, const DepthMap& gt, AlignmentMode mode) {
  const auto m = overlap(pred, gt);
  DepthMap out = pred;
  if (mode == AlignmentMode::None) return out;

  if (mode == AlignmentMode::MedianScale) {
    std::vector<double> ratios;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) ratios.push_back(gt.values[i] / pred.values[i]);
    }
    if (ratios.empty()) throw DegenerateInputError("alignment: empty overlap");
    const double s = detail::median(std::move(ratios));
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (out.mask[i]) out.values[i] *= s;
    }
    return out;
  }

  // Least squares a * (1/d) + b ~ 1/d* over the overlap.
  double n = 0, sp = 0, sq = 0, spp = 0, spq = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const double p = 1.0 / pred.values[i];
    const double q = 1.0 / gt.values[i];
    n += 1;
    sp += p;
    sq += q;
    spp += p * p;
    spq += p * q;
  }
  if (n == 0) throw DegenerateInputError("alignment: empty overlap");
  const double det = n * spp - sp * sp;
  double a = 0.0;
  double b = 0.0;
  if (std::abs(det) > 1e-12 * n * spp) {
    a = (n * spq - sp * sq) / det;
    b = (sq - a * sp) / n;
  } else {
    a = sq / sp;
  }
  constexpr double kMinInverse = 1e-6;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!out.mask[i] || !(pred.values[i] > 0.0)) continue;
    out.values[i] = 1.0 / std::max(a / pred.values[i] + b, kMinInverse);
  }
  return out;
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, AlignmentMode align) {
  const auto aligned = align_prediction(pred, gt, align);
  const auto m = overlap(aligned, gt);
  DepthMetrics r;
  std::size_t within[3] = {0, 0, 0};
  double arel = 0, sq = 0, sq_log = 0, l10 = 0, e_sum = 0;
  std::vector<double> log_err;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const double d = aligned.values[i];
    const double g = gt.values[i];
    const double ratio = std::max(d / g, g / d);
    if (ratio < 1.25) ++within[0];
    if (ratio < 1.25 * 1.25) ++within[1];
    if (ratio < 1.25 * 1.25 * 1.25) ++within[2];
    arel += std::abs(d - g) / g;
    sq += (d - g) * (d - g);
    const double e = std::log(d) - std::log(g);
    sq_log += e * e;
    e_sum += e;
    l10 += std::abs(std::log10(d) - std::log10(g));
    log_err.push_back(e);
    ++r.n_valid;
  }
  if (r.n_valid == 0) throw DegenerateInputError("depth_metrics: empty overlap");
  const double n = static_cast<double>(r.n_valid);
  r.delta1 = 100.0 * within[0] / n;
  r.delta2 = 100.0 * within[1] / n;
  r.delta3 = 100.0 * within[2] / n;
  r.arel = arel / n;
  r.rms = std::sqrt(sq / n);
  r.rms_log = std::sqrt(sq_log / n);
  r.log10 = l10 / n;
  const double mean = e_sum / n;
  double var = 0.0;
  for (double e : log_err) var += (e - mean) * (e - mean);
  var /= n;
  r.si_log = 100.0 * std::sqrt(std::max(0.0, var + 0.15 * mean * mean));
  return r;
}

}  // namespace mdepth
