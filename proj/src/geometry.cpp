#include "mdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

namespace mdepth {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw DomainError("intrinsics: focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw DomainError("intrinsics: image size must be at least 1x1");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(fx) ||
      !std::isfinite(fy)) {
    throw DomainError("intrinsics: non-finite parameter");
  }
  if (cx < 0.0 || cx > width || cy < 0.0 || cy > height) {
    std::ostringstream os;
    os << "intrinsics: principal point (" << cx << ", " << cy
       << ") outside the " << width << "x" << height << " image";
    warn(os.str());
  }
}

Intrinsics Intrinsics::scaled(double k) const {
  Intrinsics out = *this;
  out.fx *= k;
  out.fy *= k;
  out.cx *= k;
  out.cy *= k;
  out.width = static_cast<int>(std::lround(width * k));
  out.height = static_cast<int>(std::lround(height * k));
  return out;
}

Intrinsics intrinsics_from_residuals(const IntrinsicsResiduals& res, int width,
                                     int height) {
  if (width < 1 || height < 1) throw DomainError("image size must be at least 1x1");
  if (!(res.dfx > 0.0) || !(res.dfy > 0.0)) {
    throw DomainError("focal residuals must be positive");
  }
  Intrinsics K;
  K.fx = res.dfx * width / 2.0;
  K.fy = res.dfy * height / 2.0;
  K.cx = res.dcx * width / 2.0;
  K.cy = res.dcy * height / 2.0;
  K.width = width;
  K.height = height;
  return K;
}

Eigen::Vector3d unproject_pixel(const Intrinsics& K, double u_center,
                                double v_center) {
  return Eigen::Vector3d((u_center - K.cx) / K.fx, (v_center - K.cy) / K.fy, 1.0)
      .normalized();
}

RayGrid unproject_rays(const Intrinsics& K) {
  K.validate();
  RayGrid rays(K.width, K.height);
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      rays(u, v) = unproject_pixel(K, u + 0.5, v + 0.5);
    }
  }
  return rays;
}

HomogeneousRays homogeneous_rays(const Intrinsics& K) {
  K.validate();
  HomogeneousRays out(K.width, K.height);
  for (int v = 0; v < K.height; ++v) {
    const double ry = (v + 0.5 - K.cy) / K.fy;
    for (int u = 0; u < K.width; ++u) {
      out(u, v) = Eigen::Vector2d((u + 0.5 - K.cx) / K.fx, ry);
    }
  }
  return out;
}

Eigen::Vector2d ray_to_angles(const Eigen::Vector3d& dir) {
  const double n = dir.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("zero-norm or non-finite ray");
  const double horizontal = std::hypot(dir.x(), dir.z());
  return {std::atan2(dir.x(), dir.z()), std::atan2(dir.y(), horizontal)};
}

Eigen::Vector3d angles_to_ray(double theta, double phi) {
  const double cp = std::cos(phi);
  return {std::sin(theta) * cp, std::sin(phi), std::cos(theta) * cp};
}

AngleMap rays_to_angles(const RayGrid& rays) {
  AngleMap out(rays.width(), rays.height());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const auto a = ray_to_angles(rays[i]);
    out.theta[i] = a.x();
    out.phi[i] = a.y();
  }
  return out;
}

RayGrid angles_to_rays(const AngleMap& angles) {
  require_same_shape(angles.theta, angles.phi, "angles_to_rays");
  RayGrid out(angles.width(), angles.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = angles_to_ray(angles.theta[i], angles.phi[i]);
  }
  return out;
}

AngleMap camera_angles(const Intrinsics& K) { return rays_to_angles(unproject_rays(K)); }

PointCloud backproject(const AngleMap& angles, const DepthMap& depth,
                       DepthSemantics semantics) {
  require_same_shape(angles.theta, depth.values, "backproject");
  require_same_shape(angles.phi, depth.values, "backproject");
  PointCloud cloud;
  cloud.points.reserve(depth.valid_count());
  cloud.pixel_index.reserve(depth.valid_count());
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (!depth.mask[i]) continue;
    const double theta = angles.theta[i];
    const double phi = angles.phi[i];
    const double z = depth.values[i];
    if (semantics == DepthSemantics::Radial) {
      cloud.points.push_back(angles_to_ray(theta, phi) * z);
    } else {
      if (std::abs(theta) >= std::numbers::pi / 2) {
        throw DomainError("backproject: ray at or behind the image plane");
      }
      const double ct = std::cos(theta);
      cloud.points.emplace_back(std::tan(theta) * z, std::tan(phi) / ct * z, z);
    }
    cloud.pixel_index.push_back(static_cast<std::int64_t>(i));
  }
  return cloud;
}

AngleDepthSamples project_to_angles_depth(const PointCloud& cloud) {
  AngleDepthSamples out;
  out.theta.reserve(cloud.size());
  out.phi.reserve(cloud.size());
  out.depth.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    if (!(p.z() > 0.0)) throw DomainError("project: point with z <= 0");
    const auto a = ray_to_angles(p);
    out.theta.push_back(a.x());
    out.phi.push_back(a.y());
    out.depth.push_back(p.z());
  }
  return out;
}

const std::array<double, kSineBands>& sine_frequencies() {
  static const std::array<double, kSineBands> freqs = [] {
    std::array<double, kSineBands> f{};
    for (int k = 0; k < kSineBands; ++k) {
      f[k] = std::numbers::pi * std::pow(64.0, static_cast<double>(k) / (kSineBands - 1));
    }
    return f;
  }();
  return freqs;
}

RayEncoding sine_encode(const HomogeneousRays& hrays) {
  const auto& freqs = sine_frequencies();
  RayEncoding enc;
  enc.width = hrays.width();
  enc.height = hrays.height();
  enc.channels.resize(hrays.size() * kRayEncodingChannels);
  for (std::size_t i = 0; i < hrays.size(); ++i) {
    double* out = enc.channels.data() + i * kRayEncodingChannels;
    for (int dim = 0; dim < 2; ++dim) {
      const double v = hrays[i][dim];
      double* block = out + dim * 2 * kSineBands;
      for (int k = 0; k < kSineBands; ++k) {
        block[k] = std::sin(freqs[k] * v);
        block[kSineBands + k] = std::cos(freqs[k] * v);
      }
    }
  }
  return enc;
}

double angles_fov_check(const Intrinsics& K, const Intrinsics& scaled) {
  K.validate();
  scaled.validate();
  const double k = scaled.fx / K.fx;
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
  };
  if (!close(scaled.fy, K.fy * k) || !close(scaled.cx, K.cx * k) ||
      !close(scaled.cy, K.cy * k) || !close(scaled.width, K.width * k) ||
      !close(scaled.height, K.height * k)) {
    throw UsageError("angles_fov_check: cameras are not a uniform rescaling of each other");
  }
  double worst = 0.0;
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const auto a = ray_to_angles(unproject_pixel(K, u + 0.5, v + 0.5));
      const auto b = ray_to_angles(unproject_pixel(scaled, k * (u + 0.5), k * (v + 0.5)));
      worst = std::max({worst, std::abs(a.x() - b.x()), std::abs(a.y() - b.y())});
    }
  }
  return worst;
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace mdepth
