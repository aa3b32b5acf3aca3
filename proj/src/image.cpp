#include "gcntrack/image.hpp"

#include <numeric>

namespace gcntrack {

GrayImage to_gray(const RgbImage& image) {
  GrayImage out(image.width(), image.height());
  auto src = image.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = 0.299f * src[i].r + 0.587f * src[i].g + 0.114f * src[i].b;
  }
  return out;
}

long long count_set(const Mask& mask) {
  long long n = 0;
  for (auto v : mask.pixels()) n += v != 0;
  return n;
}

}  // namespace gcntrack
