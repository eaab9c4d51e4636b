#include "mdepth/augment.hpp"

#include <algorithm>
#include <cmath>

namespace mdepth {

GeomAugmentation GeomAugmentation::identity(int width, int height) {
  return translation(width, height, 0.0, 0.0);
}

GeomAugmentation GeomAugmentation::translation(int width, int height, double dx,
                                               double dy) {
  GeomAugmentation a;
  a.scale = 1.0;
  a.crop = {dx, dy, width, height};
  a.tx = width > 0 ? dx / width : 0.0;
  a.ty = height > 0 ? dy / height : 0.0;
  a.out_w = width;
  a.out_h = height;
  return a;
}

std::size_t WarpField::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid.values()) n += v != 0;
  return n;
}

GeomAugmentation sample_augmentation(Rng& rng, int source_w, int source_h,
                                     int target_w, int target_h) {
  if (source_w < 1 || source_h < 1 || target_w < 1 || target_h < 1) {
    throw UsageError("sample_augmentation: shapes must be positive");
  }
  GeomAugmentation a;
  a.scale = std::exp2(uniform(rng, kMinLog2Scale, kMaxLog2Scale));
  a.tx = uniform(rng, -kMaxTranslation, kMaxTranslation);
  a.ty = uniform(rng, -kMaxTranslation, kMaxTranslation);
  // Rescale first, then crop around the translated center.
  const double center_x = (0.5 + a.tx) * source_w * a.scale;
  const double center_y = (0.5 + a.ty) * source_h * a.scale;
  a.crop = {center_x - target_w / 2.0, center_y - target_h / 2.0, target_w, target_h};
  a.out_w = target_w;
  a.out_h = target_h;
  return a;
}

Intrinsics apply_to_intrinsics(const GeomAugmentation& aug, const Intrinsics& K) {
  Intrinsics out;
  out.fx = K.fx * aug.scale;
  out.fy = K.fy * aug.scale;
  out.cx = K.cx * aug.scale - aug.crop.x0;
  out.cy = K.cy * aug.scale - aug.crop.y0;
  out.width = aug.out_w;
  out.height = aug.out_h;
  return out;
}

namespace {

void check_crop(const GeomAugmentation& a) {
  if (a.crop.w < 1 || a.crop.h < 1 || a.out_w != a.crop.w || a.out_h != a.crop.h) {
    throw DomainError("augmentation: degenerate or inconsistent crop");
  }
  if (!(a.scale > 0.0) || !std::isfinite(a.scale)) {
    throw DomainError("augmentation: scale must be positive");
  }
}

bool inside(const Eigen::Vector2d& continuous, int width, int height) {
  return continuous.x() >= 0.0 && continuous.y() >= 0.0 && continuous.x() <= width &&
         continuous.y() <= height;
}

}  // namespace

WarpField augmentation_field(const GeomAugmentation& aug, int source_w, int source_h) {
  check_crop(aug);
  WarpField f{Grid<Eigen::Vector2d>(aug.out_w, aug.out_h), ValidityMask(aug.out_w, aug.out_h, 0),
              source_w, source_h};
  for (int y = 0; y < aug.out_h; ++y) {
    for (int x = 0; x < aug.out_w; ++x) {
      const Eigen::Vector2d s = aug.to_source({x + 0.5, y + 0.5});
      f.src_coords(x, y) = s - Eigen::Vector2d(0.5, 0.5);
      f.valid(x, y) = inside(s, source_w, source_h) ? 1 : 0;
    }
  }
  return f;
}

WarpField compose_warp(const GeomAugmentation& a1, const GeomAugmentation& a2) {
  check_crop(a1);
  check_crop(a2);
  WarpField f{Grid<Eigen::Vector2d>(a2.out_w, a2.out_h), ValidityMask(a2.out_w, a2.out_h, 0),
              a1.out_w, a1.out_h};
  for (int y = 0; y < a2.out_h; ++y) {
    for (int x = 0; x < a2.out_w; ++x) {
      const Eigen::Vector2d o1 = a1.from_source(a2.to_source({x + 0.5, y + 0.5}));
      f.src_coords(x, y) = o1 - Eigen::Vector2d(0.5, 0.5);
      f.valid(x, y) = inside(o1, a1.out_w, a1.out_h) ? 1 : 0;
    }
  }
  return f;
}

std::optional<Eigen::Vector2d> sample_warp(const WarpField& field, const Eigen::Vector2d& p) {
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
  const double fx0 = std::floor(p.x());
  const double fy0 = std::floor(p.y());
  const double ax = p.x() - fx0;
  const double ay = p.y() - fy0;
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      const int x = static_cast<int>(fx0) + i;
      const int y = static_cast<int>(fy0) + j;
      if (!field.src_coords.contains(x, y) || !field.valid(x, y)) return std::nullopt;
      acc += field.src_coords(x, y) * w;
    }
  }
  return acc;
}

ShapeSample sample_training_shape(Rng& rng) {
  const auto snap = [](double v) {
    const long m = std::lround(v / kShapeMultiple);
    return static_cast<int>(std::max(1L, m) * kShapeMultiple);
  };
  // Snapping can leave the pixel/aspect window; such draws are resampled.
  for (;;) {
    const double area = uniform(rng, kMinPixels, kMaxPixels);
    const double ratio = std::exp(uniform(rng, -std::log(kMaxAspect), std::log(kMaxAspect)));
    const ShapeSample s{snap(std::sqrt(area * ratio)), snap(std::sqrt(area / ratio))};
    const double px = static_cast<double>(s.width) * s.height;
    const double r = static_cast<double>(s.width) / s.height;
    if (px >= kMinPixels && px <= kMaxPixels && r >= 1.0 / kMaxAspect && r <= kMaxAspect) return s;
  }
}

std::optional<Taps> bilinear_taps(const Eigen::Vector2d& p, int width, int height,
                                  const ValidityMask* mask) {
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
  const double fx0 = std::floor(p.x());
  const double fy0 = std::floor(p.y());
  const double ax = p.x() - fx0;
  const double ay = p.y() - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const int xs[2] = {x0, x0 + 1};
  const int ys[2] = {y0, y0 + 1};
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  Taps t;
  double total = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      if (xs[i] < 0 || ys[j] < 0 || xs[i] >= width || ys[j] >= height) continue;
      const std::size_t idx = static_cast<std::size_t>(ys[j]) * width + xs[i];
      if (mask && !(*mask)[idx]) continue;
      t.index[t.count] = idx;
      t.weight[t.count] = w;
      ++t.count;
      total += w;
    }
  }
  if (t.count == 0 || !(total > 0.0)) return std::nullopt;
  if (total != 1.0) {
    for (int k = 0; k < t.count; ++k) t.weight[k] /= total;
  }
  return t;
}

std::optional<Taps> nearest_tap(const Eigen::Vector2d& p, int width, int height,
                                const ValidityMask* mask) {
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
  if (p.x() < -0.5 || p.y() < -0.5 || p.x() > width - 0.5 || p.y() > height - 0.5) {
    return std::nullopt;
  }
  // Index coordinate p lies inside pixel floor(p + 0.5).
  const int cx = std::min(static_cast<int>(std::floor(p.x() + 0.5)), width - 1);
  const int cy = std::min(static_cast<int>(std::floor(p.y() + 0.5)), height - 1);
  const std::size_t idx = static_cast<std::size_t>(cy) * width + cx;
  if (mask && !(*mask)[idx]) return std::nullopt;
  Taps t;
  t.index[0] = idx;
  t.weight[0] = 1.0;
  t.count = 1;
  return t;
}

DepthMap apply_to_grid(const GeomAugmentation& aug, const DepthMap& depth, Filter filter) {
  auto w = apply_to_grid(aug, depth.values, &depth.mask, filter);
  DepthMap out;
  out.values = std::move(w.values);
  out.mask = std::move(w.mask);
  return out;
}

}  // namespace mdepth
