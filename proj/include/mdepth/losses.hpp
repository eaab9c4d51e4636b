#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Core>

#include "mdepth/augment.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/patchkernel.hpp"

namespace mdepth {

struct LossValue {
  double value = 0.0;
  // Keyed by the differentiable input: "theta", "phi", "z_log", "z1", "z2",
  // "inv_depth", "sigma". Zero at masked pixels; identically zero for
  // stop-gradient inputs.
  std::map<std::string, Grid<double>> grads;

  bool has_grad(const std::string& name) const { return grads.count(name) != 0; }
  const Grid<double>& grad(const std::string& name) const;
};

struct ErrorStats {
  std::array<double, 3> mean{};
  std::array<double, 3> var{};
  std::size_t count = 0;
};

struct LossWeights {
  std::array<double, 3> lambda{1.0, 1.0, 0.15};  // theta, phi, z_log
  double alpha = 0.1;                            // consistency
  double beta = 1.0;                             // edge-guided SSI
  double gamma = 0.1;                            // uncertainty
};

// Pseudo-spherical output (theta, phi, log depth).
struct OutputGrids {
  Grid<double> theta;
  Grid<double> phi;
  Grid<double> z_log;
};

ErrorStats error_stats(const OutputGrids& pred, const OutputGrids& gt, const ValidityMask& mask);

// sum_d V_d[e] + lambda_d E_d[e]^2 with population variances.
LossValue lambda_mse(const OutputGrids& pred, const OutputGrids& gt, const ValidityMask& mask,
                     const std::array<double, 3>& lambda, bool with_grad = true);

// One output dimension; with lambda = 0.15 on log depth this is SI_log.
LossValue lambda_mse_channel(const Grid<double>& pred, const Grid<double>& gt,
                             const ValidityMask& mask, double lambda, bool with_grad = true,
                             const std::string& grad_name = "z_log");

// mean |warp(z1) - z2| over view-2 pixels whose warped sample is valid.
// z2 is treated as detached pseudo ground truth.
LossValue consistency_loss(const DepthMap& z1, const DepthMap& z2, const WarpField& warp,
                           bool with_grad = true);

// (L(z1, z2) + L(z2, z1)) / 2. warp_21 maps view-2 pixels into view 1,
// warp_12 the reverse.
LossValue bidirectional_consistency_loss(const DepthMap& z1, const DepthMap& z2,
                                         const WarpField& warp_21, const WarpField& warp_12,
                                         bool with_grad = true);

struct PatchSelectOptions {
  int count = 64;
  double min_size_frac = 0.04;
  double max_size_frac = 0.08;
  double quantile = 0.95;
};

Grid<double> luma(const Grid<Eigen::Vector3d>& rgb);
// L2 norm of 3x3 Sobel responses, replicated borders.
Grid<double> sobel_magnitude(const Grid<double>& image);

// Returns an empty set (no error) when the image has no gradient.
PatchSet select_patches(const Grid<Eigen::Vector3d>& rgb, std::uint64_t seed,
                        const PatchSelectOptions& options = {});

// Edge-guided scale-shift-invariant loss on inverse depth. Runs the serial
// reference when threads == 1, the parallel kernel otherwise.
LossValue eg_ssi_loss(const Grid<double>& pred_inv_depth, const Grid<double>& gt_inv_depth,
                      const ValidityMask& gt_mask, const PatchSet& patches,
                      const EgSsiOptions& options = {}, bool with_grad = true,
                      int threads = 1);

// mean |sigma - |z_log - z_log_gt|| with the target detached.
LossValue uncertainty_l1(const Grid<double>& sigma, const Grid<double>& z_log_pred,
                         const Grid<double>& z_log_gt, const ValidityMask& mask,
                         bool with_grad = true);

struct LossComponents {
  LossValue lambda_mse;
  LossValue consistency;
  LossValue eg_ssi;
  LossValue uncertainty;
};

LossValue total_loss(const LossComponents& components, const LossWeights& weights = {});

}  // namespace mdepth
