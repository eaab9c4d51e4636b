#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mdepth/grid.hpp"

namespace mdepth {

// Pinhole calibration. Pixel (u, v) has its center at (u + 0.5, v + 0.5).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws DomainError on fx/fy <= 0 or empty size; warns when the principal
  // point falls outside the image.
  void validate() const;
  Intrinsics scaled(double k) const;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

// Multiplicative residuals on the (W/2, H/2) pinhole initialization.
struct IntrinsicsResiduals {
  double dfx = 1.0;
  double dfy = 1.0;
  double dcx = 1.0;
  double dcy = 1.0;
};

Intrinsics intrinsics_from_residuals(const IntrinsicsResiduals& res, int width,
                                     int height);

// Dense camera: azimuth theta = atan2(x, z), elevation phi = atan2(y, hypot(x, z))
// in a camera frame with x right, y down, z forward.
struct AngleMap {
  Grid<double> theta;
  Grid<double> phi;

  AngleMap() = default;
  AngleMap(int width, int height) : theta(width, height), phi(width, height) {}
  int width() const noexcept { return theta.width(); }
  int height() const noexcept { return theta.height(); }
};

using RayGrid = Grid<Eigen::Vector3d>;
using HomogeneousRays = Grid<Eigen::Vector2d>;

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  // Row-major source pixel per point; empty when the cloud has no image origin.
  std::vector<std::int64_t> pixel_index;

  std::size_t size() const noexcept { return points.size(); }
};

// How the third coordinate of the pseudo-spherical output is read when
// building Cartesian points. ZDepth is the default throughout the library.
enum class DepthSemantics { ZDepth, Radial };

Eigen::Vector3d unproject_pixel(const Intrinsics& K, double u_center, double v_center);
RayGrid unproject_rays(const Intrinsics& K);
HomogeneousRays homogeneous_rays(const Intrinsics& K);

Eigen::Vector2d ray_to_angles(const Eigen::Vector3d& dir);
Eigen::Vector3d angles_to_ray(double theta, double phi);
AngleMap rays_to_angles(const RayGrid& rays);
RayGrid angles_to_rays(const AngleMap& angles);

// Convenience: unproject_rays followed by rays_to_angles.
AngleMap camera_angles(const Intrinsics& K);

PointCloud backproject(const AngleMap& angles, const DepthMap& depth,
                       DepthSemantics semantics = DepthSemantics::ZDepth);

struct AngleDepthSamples {
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<double> depth;
};
AngleDepthSamples project_to_angles_depth(const PointCloud& cloud);

inline constexpr int kSineBands = 32;
inline constexpr int kRayEncodingChannels = 4 * kSineBands;

// Per pixel: [sin(w_k rx)]_k, [cos(w_k rx)]_k, [sin(w_k ry)]_k, [cos(w_k ry)]_k
// with w_k log-spaced over [pi, 64 pi].
struct RayEncoding {
  int width = 0;
  int height = 0;
  std::vector<double> channels;  // H x W x 128, channel fastest

  static constexpr int channel_count() { return kRayEncodingChannels; }
  double at(int x, int y, int c) const {
    return channels[(static_cast<std::size_t>(y) * width + x) * kRayEncodingChannels + c];
  }
};

const std::array<double, kSineBands>& sine_frequencies();
RayEncoding sine_encode(const HomogeneousRays& hrays);

// Scaled is expected to be K with fx, fy, cx, cy, width and height all
// multiplied by the same k. Returns the largest |dtheta| or |dphi| between the
// ray at each pixel center of K and the ray at the aligned continuous location
// k * (u + 0.5, v + 0.5) of the scaled camera.
double angles_fov_check(const Intrinsics& K, const Intrinsics& scaled);

// Angle between two directions, stable near 0 and pi.
double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace mdepth
