#include "mdepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mdepth {
namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

// Depths along the homogeneous ray h = (rx, ry, 1); points are z * h.
double plane_hit(const Plane& p, const Eigen::Vector3d& h) {
  const double denom = p.normal.dot(h);
  if (denom == 0.0) return kNoHit;
  const double z = p.offset / denom;
  return z > 0.0 ? z : kNoHit;
}

double sphere_hit(const Sphere& s, const Eigen::Vector3d& h) {
  const double a = h.squaredNorm();
  const double b = h.dot(s.center);
  const double c = s.center.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return kNoHit;
  const double root = std::sqrt(disc);
  // Stable pair of roots of a z^2 - 2 b z + c = 0.
  const double q = b + std::copysign(root, b);
  double z0 = q / a;
  double z1 = q != 0.0 ? c / q : z0;
  if (z0 > z1) std::swap(z0, z1);
  if (z0 > 0.0) return z0;
  if (z1 > 0.0) return z1;
  return kNoHit;
}

Eigen::Vector3d albedo(std::uint64_t seed, std::size_t primitive) {
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + primitive + 1);
  return {uniform(rng, 0.5, 1.0), uniform(rng, 0.5, 1.0), uniform(rng, 0.5, 1.0)};
}

double pattern(Texture texture, double rx, double ry, double period) {
  switch (texture) {
    case Texture::Checker: {
      const auto cx = static_cast<long long>(std::floor(rx / period));
      const auto cy = static_cast<long long>(std::floor(ry / period));
      return ((cx + cy) & 1) ? 0.9 : 0.2;
    }
    case Texture::Gradient:
      return 0.5 + 0.4 * std::tanh(rx);
    case Texture::Constant:
      return 0.5;
  }
  return 0.5;
}

// Checker period in homogeneous-ray units, fixed by the scene's base camera.
double ray_period(const SceneSpec& spec) {
  const auto& K = spec.camera;
  const double px = spec.checker_period_px > 0.0
                        ? spec.checker_period_px
                        : 0.06 * std::min(K.width, K.height);
  return std::max(px, 1.0) / K.fx;
}

RenderResult render_with_period(const SceneSpec& spec, double period) {
  const auto& K = spec.camera;
  K.validate();
  if (spec.planes.empty() && spec.spheres.empty()) {
    throw DomainError("render: scene has no primitives");
  }
  RenderResult r;
  r.camera = K;
  r.rgb = RgbImage(K.width, K.height, Eigen::Vector3d::Zero());
  r.depth = DepthMap(K.width, K.height);
  const auto hrays = homogeneous_rays(K);
  for (std::size_t i = 0; i < hrays.size(); ++i) {
    const Eigen::Vector3d h(hrays[i].x(), hrays[i].y(), 1.0);
    double best = kNoHit;
    std::size_t hit = 0;
    for (std::size_t p = 0; p < spec.planes.size(); ++p) {
      const double z = plane_hit(spec.planes[p], h);
      if (z < best) {
        best = z;
        hit = p;
      }
    }
    for (std::size_t s = 0; s < spec.spheres.size(); ++s) {
      const double z = sphere_hit(spec.spheres[s], h);
      if (z < best) {
        best = z;
        hit = spec.planes.size() + s;
      }
    }
    if (!std::isfinite(best)) continue;
    r.depth.values[i] = best;
    r.depth.mask[i] = 1;
    r.rgb[i] = albedo(spec.seed, hit) * pattern(spec.texture, h.x(), h.y(), period);
  }
  r.angles = camera_angles(K);
  r.cloud = backproject(r.angles, r.depth);
  return r;
}

}  // namespace

RenderResult render(const SceneSpec& spec) { return render_with_period(spec, ray_period(spec)); }

RenderedPair render_pair(const SceneSpec& spec, const GeomAugmentation& a1,
                         const GeomAugmentation& a2) {
  const double period = ray_period(spec);
  SceneSpec s1 = spec;
  SceneSpec s2 = spec;
  s1.camera = apply_to_intrinsics(a1, spec.camera);
  s2.camera = apply_to_intrinsics(a2, spec.camera);
  return {render_with_period(s1, period), render_with_period(s2, period)};
}

SceneSpec random_scene(Rng& rng, const Intrinsics& camera) {
  SceneSpec spec;
  spec.camera = camera;
  spec.seed = rng();
  const double wall = uniform(rng, 6.0, 10.0);
  Plane back;
  back.normal = Eigen::Vector3d(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2), 1.0).normalized();
  back.offset = wall * back.normal.z();
  spec.planes.push_back(back);
  const int n = 1 + static_cast<int>(uniform_index(rng, 3));
  const double half_w = camera.width / (2.0 * camera.fx);
  const double half_h = camera.height / (2.0 * camera.fy);
  for (int k = 0; k < n; ++k) {
    Sphere s;
    const double z = uniform(rng, 2.5, 5.0);
    s.center = {uniform(rng, -0.6, 0.6) * half_w * z, uniform(rng, -0.6, 0.6) * half_h * z, z};
    s.radius = uniform(rng, 0.3, 0.8);
    spec.spheres.push_back(s);
  }
  return spec;
}

DatasetManifest write_synthetic_dataset(const std::filesystem::path& out_dir,
                                        const SynthOptions& options) {
  if (options.scenes < 0 || options.width < 1 || options.height < 1) {
    throw UsageError("synth: invalid scene count or size");
  }
  std::filesystem::create_directories(out_dir);
  Rng rng(options.seed);
  DatasetManifest manifest;
  manifest.dataset = "synthetic";
  // GT is quantized to multiples of 10/4096 m so that decimal prediction
  // scales such as 1.3 stay exact in float32.
  constexpr double kQuantum = 10.0 / 4096.0;
  double max_depth = 0.0;
  for (int i = 0; i < options.scenes; ++i) {
    Intrinsics K;
    K.width = options.width;
    K.height = options.height;
    K.fx = K.fy = uniform(rng, 0.8, 1.2) * options.width;
    K.cx = options.width * uniform(rng, 0.45, 0.55);
    K.cy = options.height * uniform(rng, 0.45, 0.55);
    const auto spec = random_scene(rng, K);
    auto r = render(spec);

    DepthMap gt = r.depth;
    DepthMap pred = r.depth;
    Grid<double> sigma(K.width, K.height, 0.0);
    for (std::size_t p = 0; p < gt.values.size(); ++p) {
      sigma[p] = uniform(rng, 0.0, 0.1);
      if (!gt.mask[p]) continue;
      gt.values[p] = std::max(1.0, std::round(gt.values[p] / kQuantum)) * kQuantum;
      pred.values[p] = gt.values[p] * options.pred_scale;
      max_depth = std::max(max_depth, gt.values[p]);
    }

    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%03d", i);
    const std::string s = stem;
    ManifestRecord rec;
    rec.rgb = s + "_rgb.png";
    rec.gt = s + "_gt.dkf";
    rec.pred = s + "_pred.dkf";
    rec.camera = s + "_cam.json";
    rec.pred_camera = rec.camera;
    write_rgb(r.rgb, out_dir / rec.rgb);
    write_depth(gt, out_dir / rec.gt, DepthFileFormat::RawF32);
    write_depth(pred, out_dir / rec.pred, DepthFileFormat::RawF32);
    write_camera(K, out_dir / rec.camera);
    if (options.write_uncertainty) {
      rec.uncertainty = s + "_sigma.dkf";
      write_scalar_grid(sigma, out_dir / rec.uncertainty);
    }
    manifest.records.push_back(rec);
  }
  manifest.max_depth = max_depth > 0.0 ? std::ceil(max_depth) : 1.0;
  write_manifest(manifest, out_dir / "manifest.tsv");
  // Callers get absolute paths, as read_manifest would produce.
  for (auto& rec : manifest.records) {
    for (auto* p : {&rec.rgb, &rec.pred, &rec.gt, &rec.camera, &rec.uncertainty, &rec.pred_camera}) {
      if (!p->empty()) *p = out_dir / *p;
    }
  }
  return manifest;
}

}  // namespace mdepth
