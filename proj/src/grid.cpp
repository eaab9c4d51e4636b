#include "mdepth/grid.hpp"

#include <cmath>
#include <limits>

namespace mdepth {

DepthMap DepthMap::from_values(Grid<double> v) {
  DepthMap d;
  d.mask = ValidityMask(v.width(), v.height(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    d.mask[i] = (std::isfinite(v[i]) && v[i] > 0.0) ? 1 : 0;
  }
  d.values = std::move(v);
  return d;
}

std::size_t DepthMap::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask.values()) n += m != 0;
  return n;
}

Grid<double> DepthMap::log() const {
  Grid<double> out(width(), height(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) out[i] = std::log(values[i]);
  }
  return out;
}

Grid<double> DepthMap::inverse() const {
  Grid<double> out(width(), height(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) out[i] = 1.0 / values[i];
  }
  return out;
}

}  // namespace mdepth
