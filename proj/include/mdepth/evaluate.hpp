#pragma once

#include <cstdint>
#include <string>

#include "mdepth/io.hpp"
#include "mdepth/metrics.hpp"

namespace mdepth {

struct EvalOptions {
  AlignmentMode align = AlignmentMode::None;
  int jobs = 1;
  FScoreOptions fscore;
  RayAucOptions rays;
  BoundaryOptions boundary;
  // Boundary F1 is reported only when at least this fraction of GT is valid.
  double dense_gt_fraction = 0.9;
};

// Metrics for one manifest record. Optional inputs (cameras, uncertainty)
// add their metrics when present. Throws on unreadable or inconsistent files.
MetricRecord evaluate_record(const ManifestRecord& record, double max_depth,
                             const EvalOptions& options);

// Per-record failures are collected in report.failures; the record is left
// out of per_image and of the aggregates.
MetricReport evaluate_manifest(const DatasetManifest& manifest, const EvalOptions& options);

}  // namespace mdepth
