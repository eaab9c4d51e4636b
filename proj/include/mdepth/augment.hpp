#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "mdepth/geometry.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

// Window in rescaled-source pixels. x0/y0 may be fractional and may lie
// outside the rescaled image; pixels that land outside the source are invalid.
struct CropWindow {
  double x0 = 0.0;
  double y0 = 0.0;
  int w = 0;
  int h = 0;
};

// Similarity transform "rescale by `scale`, then crop". Output continuous
// coordinate o maps to source continuous coordinate (o + crop.x0) / scale.
struct GeomAugmentation {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;
  CropWindow crop;
  int out_w = 0;
  int out_h = 0;

  static GeomAugmentation identity(int width, int height);
  // Unit scale, crop origin shifted by (dx, dy) source pixels.
  static GeomAugmentation translation(int width, int height, double dx, double dy);

  Eigen::Vector2d to_source(const Eigen::Vector2d& out_continuous) const {
    return (out_continuous + Eigen::Vector2d(crop.x0, crop.y0)) / scale;
  }
  Eigen::Vector2d from_source(const Eigen::Vector2d& src_continuous) const {
    return src_continuous * scale - Eigen::Vector2d(crop.x0, crop.y0);
  }
};

// For every pixel of a target view: the continuous *index* coordinate (pixel
// (i, j) sits at (i, j)) of its pre-image in the source grid.
struct WarpField {
  Grid<Eigen::Vector2d> src_coords;
  ValidityMask valid;
  int source_width = 0;
  int source_height = 0;

  int width() const noexcept { return src_coords.width(); }
  int height() const noexcept { return src_coords.height(); }
  std::size_t valid_count() const;
};

struct ShapeSample {
  int width = 0;
  int height = 0;
};

enum class Filter { Nearest, Bilinear };

inline constexpr double kMinLog2Scale = -2.0;
inline constexpr double kMaxLog2Scale = 2.0;
inline constexpr double kMaxTranslation = 0.1;
inline constexpr double kMinPixels = 0.2e6;
inline constexpr double kMaxPixels = 0.6e6;
inline constexpr double kMaxAspect = 2.0;
inline constexpr int kShapeMultiple = 14;

GeomAugmentation sample_augmentation(Rng& rng, int source_w, int source_h,
                                     int target_w, int target_h);

Intrinsics apply_to_intrinsics(const GeomAugmentation& aug, const Intrinsics& K);

// Warp field of `aug` against a source of the given size: target pixel ->
// source index coordinate, valid when inside the source image.
WarpField augmentation_field(const GeomAugmentation& aug, int source_w, int source_h);

// Pixels of view 2 located in view 1 (the composed warp T2 o T1^-1).
WarpField compose_warp(const GeomAugmentation& a1, const GeomAugmentation& a2);

// Bilinear evaluation of a warp field at a continuous index coordinate of its
// own grid. Returns nullopt when any contributing corner is invalid.
std::optional<Eigen::Vector2d> sample_warp(const WarpField& field, const Eigen::Vector2d& p);

ShapeSample sample_training_shape(Rng& rng);

// Up to four source taps with weights summing to one. Taps with zero weight,
// outside the grid, or masked invalid are dropped before renormalization.
struct Taps {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
  int count = 0;
};

std::optional<Taps> bilinear_taps(const Eigen::Vector2d& p, int width, int height,
                                  const ValidityMask* mask);
std::optional<Taps> nearest_tap(const Eigen::Vector2d& p, int width, int height,
                                const ValidityMask* mask);

template <typename T>
struct Warped {
  Grid<T> values;
  ValidityMask mask;
};

// Resample `src` at every valid coordinate of `field`.
template <typename T>
Warped<T> warp_grid(const WarpField& field, const Grid<T>& src, const ValidityMask* mask,
                    Filter filter) {
  if (src.width() != field.source_width || src.height() != field.source_height) {
    throw UsageError("warp_grid: source shape does not match the warp field");
  }
  if (mask) require_same_shape(src, *mask, "warp_grid");
  Warped<T> out{Grid<T>(field.width(), field.height()),
                ValidityMask(field.width(), field.height(), 0)};
  for (std::size_t i = 0; i < field.src_coords.size(); ++i) {
    if (!field.valid[i]) continue;
    const auto taps = filter == Filter::Bilinear
                          ? bilinear_taps(field.src_coords[i], src.width(), src.height(), mask)
                          : nearest_tap(field.src_coords[i], src.width(), src.height(), mask);
    if (!taps) continue;
    if (taps->count == 1) {
      out.values[i] = src[taps->index[0]];
    } else {
      T acc = src[taps->index[0]] * taps->weight[0];
      for (int k = 1; k < taps->count; ++k) acc = acc + src[taps->index[k]] * taps->weight[k];
      out.values[i] = acc;
    }
    out.mask[i] = 1;
  }
  return out;
}

// Depth values are resampled, never rescaled: metric depth is unchanged by
// resizing or cropping the image.
DepthMap apply_to_grid(const GeomAugmentation& aug, const DepthMap& depth, Filter filter);

template <typename T>
Warped<T> apply_to_grid(const GeomAugmentation& aug, const Grid<T>& grid,
                        const ValidityMask* mask, Filter filter) {
  return warp_grid(augmentation_field(aug, grid.width(), grid.height()), grid, mask, filter);
}

}  // namespace mdepth
