#pragma once

// Per-patch arithmetic shared by the serial reference and the OpenMP kernel.
// Both feed values in row-major pixel order, so they agree bit for bit.

#include <cstddef>
#include <span>

#include "mdepth/patchkernel.hpp"

namespace mdepth::detail {

// Lower and upper middle order statistics; equal for odd n.
struct MiddlePair {
  double lo = 0.0;
  double hi = 0.0;
  double median() const { return 0.5 * (lo + hi); }
};

struct PatchTerm {
  bool used = false;
  double contribution = 0.0;
};

// |N(x) - N(g)| averaged over the patch, N(v) = (v - median) / MAD.
// grad (same length as x, or empty) receives d contribution / d x.
PatchTerm standardized_l1(std::span<const double> x, std::span<const double> g,
                          const MiddlePair& mx, const MiddlePair& mg,
                          const EgSsiOptions& options, std::span<double> grad);

void validate_inputs(const PatchWorkPlan& plan, const Grid<double>& pred,
                     const Grid<double>& gt, const ValidityMask& mask);

}  // namespace mdepth::detail
