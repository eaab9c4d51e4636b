#pragma once

#include <algorithm>
#include <vector>

namespace mdepth::detail {

// Mean of the two middle order statistics.
inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto upper = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), upper, v.end());
  const double hi = *upper;
  if (n % 2 == 1) return hi;
  return 0.5 * (*std::max_element(v.begin(), upper) + hi);
}

}  // namespace mdepth::detail
