#pragma once

#include "stochsplat/types.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stochsplat {

/// Linear float RGB image, row-major, unclamped until written to disk.
class Image {
 public:
  Image() = default;
  Image(int width, int height, const Rgb& fill = Rgb::Zero())
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
    for (std::size_t i = 0; i < pixel_count(); ++i) set(i, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool same_size(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  Rgb at(int x, int y) const { return at(index(x, y)); }
  Rgb at(std::size_t i) const { return {data_[3 * i], data_[3 * i + 1], data_[3 * i + 2]}; }
  void set(int x, int y, const Rgb& c) { set(index(x, y), c); }
  void set(std::size_t i, const Rgb& c) {
    data_[3 * i] = c[0];
    data_[3 * i + 1] = c[1];
    data_[3 * i + 2] = c[2];
  }

  double& channel(std::size_t i, int c) { return data_[3 * i + c]; }
  double channel(std::size_t i, int c) const { return data_[3 * i + c]; }

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Image& o) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

}  // namespace stochsplat
