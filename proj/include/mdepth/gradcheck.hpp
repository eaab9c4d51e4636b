#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mdepth {

struct GradcheckConfig {
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double step = 1e-5;
  int instances = 50;
  bool flip_sign = false;  // mutation check: negate every analytic gradient
};

struct GradcheckEntry {
  std::string loss;
  double max_rel_error = 0.0;
  int instances = 0;
  bool passed = false;
};

// Central finite differences against the analytic gradients of lambda_mse,
// consistency_loss, eg_ssi_loss and uncertainty_l1 on random instances that
// stay clear of the losses' kinks.
std::vector<GradcheckEntry> run_gradcheck(const GradcheckConfig& config);

// ||a - b|| / max(||a||, ||b||); 0 when both are zero.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace mdepth
