#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "mdepth/augment.hpp"
#include "mdepth/geometry.hpp"
#include "mdepth/io.hpp"

namespace mdepth {

// Points p with normal . p = offset.
struct Plane {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double offset = 1.0;
};

struct Sphere {
  Eigen::Vector3d center{0.0, 0.0, 5.0};
  double radius = 1.0;
};

enum class Texture { Checker, Gradient, Constant };

struct SceneSpec {
  std::vector<Plane> planes;
  std::vector<Sphere> spheres;
  Intrinsics camera;
  Texture texture = Texture::Checker;
  // Checker period in pixels of `camera`; 0 picks 6% of the smaller image side.
  double checker_period_px = 0.0;
  std::uint64_t seed = 0;
};

struct RenderResult {
  Intrinsics camera;
  RgbImage rgb;
  DepthMap depth;
  AngleMap angles;
  PointCloud cloud;
};

// Nearest positive hit along each pixel ray; misses are invalid.
RenderResult render(const SceneSpec& spec);

struct RenderedPair {
  RenderResult view1;
  RenderResult view2;
};

// Both views share the scene and camera pose; only the intrinsics differ,
// via apply_to_intrinsics.
RenderedPair render_pair(const SceneSpec& spec, const GeomAugmentation& a1,
                         const GeomAugmentation& a2);

// Back wall plus a few spheres, sized to `camera`.
SceneSpec random_scene(Rng& rng, const Intrinsics& camera);

struct SynthOptions {
  int scenes = 20;
  int width = 160;
  int height = 120;
  std::uint64_t seed = 0;
  double pred_scale = 1.0;    // predictions written as pred_scale * GT
  bool write_uncertainty = true;
};

// Writes scene_NNN_{rgb.png,gt.dkf,pred.dkf,cam.json,sigma.dkf} and
// manifest.tsv into `out_dir`. Returns the manifest.
DatasetManifest write_synthetic_dataset(const std::filesystem::path& out_dir,
                                        const SynthOptions& options);

}  // namespace mdepth
