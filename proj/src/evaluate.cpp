#include "mdepth/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdepth {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DepthMap restrict_to(const DepthMap& d, const ValidityMask& m) {
  DepthMap out = d;
  for (std::size_t i = 0; i < m.size(); ++i) out.mask[i] = d.mask[i] && m[i];
  return out;
}

AngleMap angles_for(const std::filesystem::path& camera_path, const DepthMap& shape) {
  const auto K = read_camera(camera_path);
  if (K.width != shape.width() || K.height != shape.height()) {
    throw UsageError("camera '" + camera_path.string() + "' size does not match the depth map");
  }
  return camera_angles(K);
}

}  // namespace

MetricRecord evaluate_record(const ManifestRecord& record, double max_depth,
                             const EvalOptions& options) {
  MetricRecord r;
  r.id = record.pred.stem().string();
  const auto pred = read_depth(record.pred);
  const auto gt = read_depth(record.gt);
  require_same_shape(pred.values, gt.values, "evaluate");

  const auto m = depth_metrics(pred, gt, options.align);
  r.set("delta1", m.delta1);
  r.set("delta2", m.delta2);
  r.set("delta3", m.delta3);
  r.set("arel", m.arel);
  r.set("rms", m.rms);
  r.set("rms_log", m.rms_log);
  r.set("log10", m.log10);
  r.set("si_log", m.si_log);
  r.set("n_valid", static_cast<double>(m.n_valid));

  const auto aligned = align_prediction(pred, gt, options.align);
  const auto both = overlap(aligned, gt);

  if (!record.camera.empty()) {
    const auto gt_angles = angles_for(record.camera, gt);
    const auto pred_angles =
        record.pred_camera.empty() ? gt_angles : angles_for(record.pred_camera, gt);
    const auto pred_cloud = backproject(pred_angles, restrict_to(aligned, both));
    const auto gt_cloud = backproject(gt_angles, restrict_to(gt, both));
    r.set("f_a", (max_depth > 0.0 && pred_cloud.size() > 0)
                     ? fscore_auc(pred_cloud, gt_cloud, max_depth, options.fscore)
                     : kNaN);
    if (!record.pred_camera.empty()) r.set("rho_a", ray_auc(pred_angles, gt_angles, options.rays));
  }

  if (!record.uncertainty.empty()) {
    const auto sigma = read_scalar_grid(record.uncertainty);
    require_same_shape(sigma, gt.values, "evaluate uncertainty");
    try {
      const auto a = ause(aligned, gt, sigma);
      r.set("ause", a.ause);
      r.set("nause", a.nause);
    } catch (const DegenerateInputError&) {
      r.set("ause", kNaN);
      r.set("nause", kNaN);
    }
    std::vector<double> s;
    std::vector<double> e;
    for (std::size_t i = 0; i < both.size(); ++i) {
      if (!both[i] || !std::isfinite(sigma[i])) continue;
      s.push_back(sigma[i]);
      e.push_back(std::abs(std::log(aligned.values[i]) - std::log(gt.values[i])));
    }
    const auto rho = s.size() >= 3 ? spearman(s, e) : std::nullopt;
    r.set("spearman", rho.value_or(kNaN));
  }

  const double coverage =
      static_cast<double>(gt.valid_count()) / static_cast<double>(std::max<std::size_t>(1, gt.values.size()));
  if (coverage >= options.dense_gt_fraction) {
    r.set("boundary_f1", boundary_f1(pred, gt, options.boundary).value_or(kNaN));
  }
  return r;
}

MetricReport evaluate_manifest(const DatasetManifest& manifest, const EvalOptions& options) {
  const auto n = static_cast<std::ptrdiff_t>(manifest.records.size());
  std::vector<std::optional<MetricRecord>> results(manifest.records.size());
  std::vector<std::string> errors(manifest.records.size());
  const int jobs = std::max(1, options.jobs);

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = evaluate_record(manifest.records[k], manifest.max_depth, options);
    } catch (const std::exception& e) {
      errors[k] = manifest.records[k].pred.string() + ": " + e.what();
    }
  }

  std::vector<MetricRecord> ok;
  std::vector<std::string> failures;
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (results[k]) {
      ok.push_back(std::move(*results[k]));
    } else {
      failures.push_back(errors[k]);
    }
  }
  auto report = aggregate(ok);
  report.dataset = manifest.dataset;
  report.failures = std::move(failures);
  return report;
}

}  // namespace mdepth
