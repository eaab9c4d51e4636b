#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdepth/errors.hpp"

namespace mdepth {

// Dense row-major H x W grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw UsageError("negative grid dimension");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ValidityMask = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw UsageError(std::string(what) + ": shape mismatch (" +
                     std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
  }
}

// Metric optical-axis depth with its validity mask.
struct DepthMap {
  Grid<double> values;
  ValidityMask mask;

  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0, bool valid = false)
      : values(width, height, fill), mask(width, height, valid ? 1 : 0) {}
  // Every finite positive value becomes valid.
  static DepthMap from_values(Grid<double> v);

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
  bool valid(int x, int y) const { return mask(x, y) != 0; }
  std::size_t valid_count() const;
  Grid<double> log() const;
  Grid<double> inverse() const;
};

using UncertaintyMap = Grid<double>;

}  // namespace mdepth
