#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdepth/geometry.hpp"
#include "mdepth/grid.hpp"

namespace mdepth {

struct DepthMetrics {
  double delta1 = 0.0;  // percent
  double delta2 = 0.0;
  double delta3 = 0.0;
  double arel = 0.0;  // fraction
  double rms = 0.0;
  double rms_log = 0.0;
  double log10 = 0.0;
  double si_log = 0.0;  // 100 * sqrt(V[e] + 0.15 E[e]^2)
  std::size_t n_valid = 0;
};

enum class AlignmentMode { None, MedianScale, SsiInverseDepth };

AlignmentMode parse_alignment(const std::string& name);  // none | median | ssi
std::string to_string(AlignmentMode mode);

// Pixels valid in both maps.
ValidityMask overlap(const DepthMap& pred, const DepthMap& gt);

// Returns pred rescaled/shifted per `mode` using only overlapping pixels.
DepthMap align_prediction(const DepthMap& pred, const DepthMap& gt, AlignmentMode mode);

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                           AlignmentMode align = AlignmentMode::None);

struct FScoreOptions {
  int thresholds = 20;
  std::size_t max_points = 25000;
  std::uint64_t seed = 0;
};

// Mean F1 over `thresholds` evenly spaced distances in (0, d_max / 20].
// A point matches when its nearest neighbour is strictly closer than tau.
double fscore_auc(const PointCloud& pred, const PointCloud& gt, double d_max,
                  const FScoreOptions& options = {});

// Per-point distance to the nearest point of `target`, or +inf when none is
// within `radius`. Spatial hashing with cell size `radius`.
std::vector<double> nearest_distances(std::span<const Eigen::Vector3d> query,
                                      std::span<const Eigen::Vector3d> target, double radius);

struct RayAucOptions {
  double max_degrees = 15.0;
  double step_degrees = 0.1;
};

// Area under recall(t) = P(angular error <= t) for t in [0, max), left
// Riemann sum on the step grid, normalized to [0, 1].
double ray_auc(const AngleMap& pred, const AngleMap& gt, const RayAucOptions& options = {});

struct SparsificationCurve {
  std::vector<double> fractions;
  std::vector<double> method_delta1;  // percent
  std::vector<double> oracle_delta1;
  std::vector<double> random_delta1;
};

struct AuseResult {
  double ause = 0.0;
  double nause = 0.0;  // NaN when the random curve coincides with the oracle
  SparsificationCurve curve;
};

inline constexpr int kSparsificationSteps = 100;
inline constexpr std::size_t kMinAusePixels = 100;

// Removal order: descending key, ties by ascending pixel index.
AuseResult ause(const DepthMap& pred, const DepthMap& gt, const UncertaintyMap& sigma);

// Spearman rank correlation; nullopt when either side has constant ranks.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);
std::vector<double> fractional_ranks(std::span<const double> v);

struct BoundaryOptions {
  std::vector<double> thresholds_percent{5.0, 10.0, 15.0, 20.0, 25.0};
};

// Scale-invariant boundary F1 in percent over 4-neighbour pixel pairs;
// nullopt when GT has no crossing at any threshold.
std::optional<double> boundary_f1(const DepthMap& pred, const DepthMap& gt,
                                  const BoundaryOptions& options = {});

// Ordered key/value record; NaN marks an undefined entry.
struct MetricRecord {
  std::string id;
  std::vector<std::pair<std::string, double>> values;

  void set(const std::string& key, double value);
  std::optional<double> get(const std::string& key) const;
};

struct MetricSummary {
  std::string key;
  double mean = 0.0;  // NaN when every entry was undefined
  std::size_t count = 0;
  std::size_t excluded = 0;
};

struct MetricReport {
  std::string dataset;
  std::vector<MetricRecord> per_image;
  std::vector<MetricSummary> summary;
  std::vector<std::string> failures;
};

// Unweighted means in first-seen key order.
MetricReport aggregate(std::span<const MetricRecord> per_image);

enum class ReportFormat { Text, Csv, KeyValue };
ReportFormat parse_report_format(const std::string& name);  // txt | csv | kv
std::string format_number(double v);
void write_per_image(std::ostream& os, const MetricReport& report, ReportFormat format);
void write_summary(std::ostream& os, const MetricReport& report, ReportFormat format);

}  // namespace mdepth
