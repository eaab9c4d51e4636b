#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdepth/geometry.hpp"
#include "mdepth/io.hpp"
#include "mdepth/losses.hpp"

namespace mdepth {

struct LossConfig {
  LossWeights weights;
  PatchSelectOptions patches;
  EgSsiOptions eg_ssi;
  double shift_fraction = 0.1;  // max integer shift of the consistency views
};

// Keys are optional; unknown keys raise ParseError.
LossConfig parse_loss_config(const std::string& json_text);
std::string loss_config_to_json(const LossConfig& config);

struct LossInputs {
  DepthMap pred;
  DepthMap gt;
  RgbImage rgb;
  std::optional<Intrinsics> camera;
  std::optional<Grid<double>> sigma;
};

struct ComponentReport {
  std::string name;
  double value = 0.0;  // NaN when the component is degenerate
  double weight = 0.0;
  std::string note;    // why the component was dropped, if it was
};

struct LossBreakdown {
  std::vector<ComponentReport> components;
  LossValue total;
  std::size_t patch_count = 0;
  bool degenerate() const;
};

// Evaluates every training loss on one prediction/ground-truth pair.
// Degenerate components are reported with a note and excluded from the total.
LossBreakdown compute_losses(const LossInputs& inputs, const LossConfig& config,
                             std::uint64_t seed, int threads = 1);

}  // namespace mdepth
