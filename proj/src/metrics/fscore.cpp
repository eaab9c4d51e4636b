#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "mdepth/metrics.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {
namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

CellKey cell_of(const Eigen::Vector3d& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

std::vector<Eigen::Vector3d> subsample(const std::vector<Eigen::Vector3d>& pts,
                                       std::size_t cap, Rng& rng) {
  if (pts.size() <= cap) return pts;
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<Eigen::Vector3d> out;
  out.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) out.push_back(pts[idx[i]]);
  return out;
}

}  // namespace

std::vector<double> nearest_distances(std::span<const Eigen::Vector3d> query,
                                      std::span<const Eigen::Vector3d> target, double radius) {
  if (!(radius > 0.0)) throw UsageError("nearest_distances: radius must be positive");
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells;
  cells.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) cells[cell_of(target[i], radius)].push_back(i);

  std::vector<double> out(query.size(), std::numeric_limits<double>::infinity());
  for (std::size_t q = 0; q < query.size(); ++q) {
    const auto c = cell_of(query[q], radius);
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::int64_t dz = -1; dz <= 1; ++dz) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = cells.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == cells.end()) continue;
          for (auto t : it->second) best_sq = std::min(best_sq, (target[t] - query[q]).squaredNorm());
        }
      }
    }
    const double d = std::sqrt(best_sq);
    if (d <= radius) out[q] = d;
  }
  return out;
}

double fscore_auc(const PointCloud& pred, const PointCloud& gt, double d_max,
                  const FScoreOptions& options) {
  if (!(d_max > 0.0)) throw UsageError("fscore_auc: d_max must be positive");
  if (options.thresholds < 1) throw UsageError("fscore_auc: need at least one threshold");
  if (pred.points.empty() || gt.points.empty()) {
    throw DegenerateInputError("fscore_auc: empty point cloud");
  }
  Rng rng(options.seed);
  const auto p = subsample(pred.points, options.max_points, rng);
  const auto g = subsample(gt.points, options.max_points, rng);
  const double cap = d_max / 20.0;
  const auto dp = nearest_distances(p, g, cap);
  const auto dg = nearest_distances(g, p, cap);

  const int steps = options.thresholds;
  double total = 0.0;
  for (int i = 1; i <= steps; ++i) {
    const double tau = d_max * i / (20.0 * steps);
    std::size_t tp_p = 0;
    std::size_t tp_g = 0;
    for (double d : dp) tp_p += d < tau;
    for (double d : dg) tp_g += d < tau;
    const double precision = static_cast<double>(tp_p) / static_cast<double>(dp.size());
    const double recall = static_cast<double>(tp_g) / static_cast<double>(dg.size());
    total += (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return total / steps;
}

}  // namespace mdepth
