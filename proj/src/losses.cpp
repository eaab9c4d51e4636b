#include "mdepth/losses.hpp"

#include <algorithm>
#include <cmath>

namespace mdepth {

const Grid<double>& LossValue::grad(const std::string& name) const {
  const auto it = grads.find(name);
  if (it == grads.end()) throw UsageError("loss has no gradient for '" + name + "'");
  return it->second;
}

namespace {

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

const Grid<double>* channel(const OutputGrids& g, int d) {
  return d == 0 ? &g.theta : d == 1 ? &g.phi : &g.z_log;
}

void check_output_shapes(const OutputGrids& pred, const OutputGrids& gt, const ValidityMask& mask) {
  for (int d = 0; d < 3; ++d) {
    require_same_shape(*channel(pred, d), mask, "lambda_mse");
    require_same_shape(*channel(gt, d), mask, "lambda_mse");
  }
}

}  // namespace

ErrorStats error_stats(const OutputGrids& pred, const OutputGrids& gt, const ValidityMask& mask) {
  check_output_shapes(pred, gt, mask);
  ErrorStats s;
  for (auto m : mask.values()) s.count += m != 0;
  if (s.count == 0) throw DegenerateInputError("error_stats: empty mask");
  const double n = static_cast<double>(s.count);
  for (int d = 0; d < 3; ++d) {
    const auto& p = *channel(pred, d);
    const auto& g = *channel(gt, d);
    double sum = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) sum += p[i] - g[i];
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      const double c = p[i] - g[i] - mean;
      sq += c * c;
    }
    s.mean[d] = mean;
    s.var[d] = sq / n;
  }
  return s;
}

LossValue lambda_mse_channel(const Grid<double>& pred, const Grid<double>& gt,
                             const ValidityMask& mask, double lambda, bool with_grad,
                             const std::string& grad_name) {
  require_same_shape(pred, mask, "lambda_mse");
  require_same_shape(gt, mask, "lambda_mse");
  std::size_t count = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++count;
    sum += pred[i] - gt[i];
  }
  if (count < 2) throw DegenerateInputError("lambda_mse: fewer than 2 valid pixels");
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  double sq = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double c = pred[i] - gt[i] - mean;
    sq += c * c;
  }
  LossValue out;
  out.value = sq / n + lambda * mean * mean;
  if (with_grad) {
    Grid<double> g(pred.width(), pred.height(), 0.0);
    const double shift = (1.0 - lambda) * mean;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) g[i] = 2.0 / n * (pred[i] - gt[i] - shift);
    }
    out.grads.emplace(grad_name, std::move(g));
  }
  return out;
}

LossValue lambda_mse(const OutputGrids& pred, const OutputGrids& gt, const ValidityMask& mask,
                     const std::array<double, 3>& lambda, bool with_grad) {
  check_output_shapes(pred, gt, mask);
  static const char* kNames[3] = {"theta", "phi", "z_log"};
  LossValue out;
  for (int d = 0; d < 3; ++d) {
    auto part = lambda_mse_channel(*channel(pred, d), *channel(gt, d), mask, lambda[d],
                                   with_grad, kNames[d]);
    out.value += part.value;
    for (auto& [k, g] : part.grads) out.grads.emplace(k, std::move(g));
  }
  return out;
}

namespace {

struct DirectionalTerm {
  double sum = 0.0;
  std::size_t count = 0;
};

// Accumulates |warp(src) - sg(dst)| and, optionally, its gradient into src_grad.
DirectionalTerm directional_consistency(const DepthMap& src, const DepthMap& dst,
                                        const WarpField& warp, Grid<double>* src_grad) {
  if (src.width() != warp.source_width || src.height() != warp.source_height) {
    throw UsageError("consistency_loss: first view does not match the warp source");
  }
  require_same_shape(dst.values, warp.valid, "consistency_loss");
  DirectionalTerm t;
  std::vector<std::pair<Taps, double>> contributions;
  for (std::size_t i = 0; i < warp.valid.size(); ++i) {
    if (!warp.valid[i] || !dst.mask[i]) continue;
    const auto taps = bilinear_taps(warp.src_coords[i], src.width(), src.height(), &src.mask);
    if (!taps) continue;
    double warped = 0.0;
    for (int k = 0; k < taps->count; ++k) warped += src.values[taps->index[k]] * taps->weight[k];
    const double r = warped - dst.values[i];
    t.sum += std::abs(r);
    ++t.count;
    if (src_grad) contributions.emplace_back(*taps, sign(r));
  }
  if (src_grad && t.count > 0) {
    const double inv_n = 1.0 / static_cast<double>(t.count);
    for (const auto& [taps, s] : contributions) {
      for (int k = 0; k < taps.count; ++k) (*src_grad)[taps.index[k]] += s * taps.weight[k] * inv_n;
    }
  }
  return t;
}

}  // namespace

LossValue consistency_loss(const DepthMap& z1, const DepthMap& z2, const WarpField& warp,
                           bool with_grad) {
  Grid<double> g1(z1.width(), z1.height(), 0.0);
  const auto t = directional_consistency(z1, z2, warp, with_grad ? &g1 : nullptr);
  if (t.count == 0) throw DegenerateInputError("consistency_loss: empty valid intersection");
  LossValue out;
  out.value = t.sum / static_cast<double>(t.count);
  if (with_grad) {
    out.grads.emplace("z1", std::move(g1));
    out.grads.emplace("z2", Grid<double>(z2.width(), z2.height(), 0.0));
  }
  return out;
}

LossValue bidirectional_consistency_loss(const DepthMap& z1, const DepthMap& z2,
                                         const WarpField& warp_21, const WarpField& warp_12,
                                         bool with_grad) {
  auto forward = consistency_loss(z1, z2, warp_21, with_grad);
  auto backward = consistency_loss(z2, z1, warp_12, with_grad);
  LossValue out;
  out.value = 0.5 * (forward.value + backward.value);
  if (with_grad) {
    Grid<double> g1 = forward.grads.at("z1");
    Grid<double> g2 = backward.grads.at("z1");
    for (auto& v : g1.storage()) v *= 0.5;
    for (auto& v : g2.storage()) v *= 0.5;
    out.grads.emplace("z1", std::move(g1));
    out.grads.emplace("z2", std::move(g2));
  }
  return out;
}

Grid<double> luma(const Grid<Eigen::Vector3d>& rgb) {
  Grid<double> out(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    out[i] = 0.299 * rgb[i].x() + 0.587 * rgb[i].y() + 0.114 * rgb[i].z();
  }
  return out;
}

Grid<double> sobel_magnitude(const Grid<double>& image) {
  const int w = image.width();
  const int h = image.height();
  Grid<double> out(w, h, 0.0);
  const auto at = [&](int x, int y) {
    return image(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
      out(x, y) = std::hypot(gx, gy);
    }
  }
  return out;
}

PatchSet select_patches(const Grid<Eigen::Vector3d>& rgb, std::uint64_t seed,
                        const PatchSelectOptions& options) {
  if (options.count < 1) throw UsageError("select_patches: count must be >= 1");
  if (!(options.min_size_frac > 0.0) || options.max_size_frac < options.min_size_frac) {
    throw UsageError("select_patches: invalid size range");
  }
  for (const auto& c : rgb.values()) {
    if (!c.allFinite()) throw DomainError("select_patches: non-finite image value");
  }
  PatchSet set;
  set.seed = seed;
  if (rgb.empty()) return set;

  const auto magnitude = sobel_magnitude(luma(rgb));
  std::vector<double> sorted(magnitude.storage());
  const auto k = static_cast<std::size_t>(
      std::floor(std::clamp(options.quantile, 0.0, 1.0) * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = sorted[k];

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    if (magnitude[i] > 0.0 && magnitude[i] >= threshold) candidates.push_back(i);
  }
  if (candidates.empty()) return set;

  const int w = rgb.width();
  const int h = rgb.height();
  const int min_dim = std::min(w, h);
  Rng rng(seed);
  set.entries.reserve(static_cast<std::size_t>(options.count));
  for (int n = 0; n < options.count; ++n) {
    const std::size_t pick = candidates[uniform_index(rng, candidates.size())];
    const double frac = uniform(rng, options.min_size_frac, options.max_size_frac);
    int size = static_cast<int>(std::lround(frac * min_dim));
    size = std::clamp(size, std::min(4, min_dim), min_dim);
    const int px = static_cast<int>(pick % static_cast<std::size_t>(w));
    const int py = static_cast<int>(pick / static_cast<std::size_t>(w));
    const int x0 = std::clamp(px - size / 2, 0, w - size);
    const int y0 = std::clamp(py - size / 2, 0, h - size);
    set.entries.push_back({x0 + size / 2, y0 + size / 2, size});
  }
  return set;
}

LossValue eg_ssi_loss(const Grid<double>& pred_inv_depth, const Grid<double>& gt_inv_depth,
                      const ValidityMask& gt_mask, const PatchSet& patches,
                      const EgSsiOptions& options, bool with_grad, int threads) {
  const auto plan = make_plan(patches, pred_inv_depth.width(), pred_inv_depth.height());
  auto r = threads == 1
               ? run_patch_loss_serial(plan, pred_inv_depth, gt_inv_depth, gt_mask, options, with_grad)
               : run_patch_loss(plan, pred_inv_depth, gt_inv_depth, gt_mask, threads, options,
                                with_grad);
  LossValue out;
  out.value = r.value;
  if (with_grad) out.grads.emplace("inv_depth", std::move(r.gradient));
  return out;
}

LossValue uncertainty_l1(const Grid<double>& sigma, const Grid<double>& z_log_pred,
                         const Grid<double>& z_log_gt, const ValidityMask& mask,
                         bool with_grad) {
  require_same_shape(sigma, mask, "uncertainty_l1");
  require_same_shape(z_log_pred, mask, "uncertainty_l1");
  require_same_shape(z_log_gt, mask, "uncertainty_l1");
  std::size_t count = 0;
  double sum = 0.0;
  Grid<double> g(sigma.width(), sigma.height(), 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double r = sigma[i] - std::abs(z_log_pred[i] - z_log_gt[i]);
    sum += std::abs(r);
    g[i] = sign(r);
    ++count;
  }
  if (count == 0) throw DegenerateInputError("uncertainty_l1: empty mask");
  LossValue out;
  const double n = static_cast<double>(count);
  out.value = sum / n;
  if (with_grad) {
    for (auto& v : g.storage()) v /= n;
    out.grads.emplace("sigma", std::move(g));
    out.grads.emplace("z_log", Grid<double>(sigma.width(), sigma.height(), 0.0));
  }
  return out;
}

LossValue total_loss(const LossComponents& c, const LossWeights& weights) {
  LossValue out;
  const std::pair<const LossValue*, double> parts[] = {
      {&c.lambda_mse, 1.0}, {&c.consistency, weights.alpha}, {&c.eg_ssi, weights.beta},
      {&c.uncertainty, weights.gamma}};
  for (const auto& [loss, w] : parts) {
    out.value += w * loss->value;
    for (const auto& [name, g] : loss->grads) {
      auto it = out.grads.find(name);
      if (it == out.grads.end()) {
        it = out.grads.emplace(name, Grid<double>(g.width(), g.height(), 0.0)).first;
      }
      require_same_shape(it->second, g, "total_loss");
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += w * g[i];
    }
  }
  return out;
}

}  // namespace mdepth
