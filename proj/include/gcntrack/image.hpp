#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcntrack/errors.hpp"

namespace gcntrack {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// CIE-LAB color: L in [0,100], a and b roughly in [-128,127].
struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
  bool operator==(const Lab&) const = default;
};

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

/// Axis-aligned rectangle in pixel units; covers [x, x+width) x [y, y+height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int right() const { return x + width; }
  int bottom() const { return y + height; }
  long long area() const { return static_cast<long long>(width) * height; }
  bool empty() const { return width <= 0 || height <= 0; }
  bool contains(int px, int py) const {
    return px >= x && px < right() && py >= y && py < bottom();
  }
  bool contains(const Rect& other) const {
    return other.x >= x && other.y >= y && other.right() <= right() &&
           other.bottom() <= bottom();
  }
  Point origin() const { return {x, y}; }
  bool operator==(const Rect&) const = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Dense row-major single-plane image.
template <typename Pixel>
class Image {
 public:
  using value_type = Pixel;

  Image() = default;
  Image(int width, int height, Pixel fill = Pixel{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InputError("negative image dimensions");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  Rect bounds() const { return {0, 0, width_, height_}; }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(int width, int height) const {
    return width_ == width && height_ == height;
  }
  template <typename Other>
  bool same_shape(const Image<Other>& other) const {
    return same_shape(other.width(), other.height());
  }

  Pixel& operator()(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const Pixel& operator()(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<Pixel> pixels() { return data_; }
  std::span<const Pixel> pixels() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

using RgbImage = Image<Rgb>;
using LabImage = Image<Lab>;
using GrayImage = Image<float>;
/// Binary mask, entries 0 or 1.
using Mask = Image<std::uint8_t>;
using LabelImage = Image<std::int32_t>;

/// Copies the part of `image` covered by `rect`; `rect` must lie inside it.
template <typename Pixel>
Image<Pixel> crop(const Image<Pixel>& image, const Rect& rect) {
  if (rect.empty() || !image.bounds().contains(rect)) {
    throw InputError("crop rectangle outside image");
  }
  Image<Pixel> out(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y) {
    for (int x = 0; x < rect.width; ++x) out(x, y) = image(rect.x + x, rect.y + y);
  }
  return out;
}

/// ITU-R BT.601 luma in [0,255].
GrayImage to_gray(const RgbImage& image);

/// Number of set pixels.
long long count_set(const Mask& mask);

}  // namespace gcntrack
