#include "gcntrack/features.hpp"

#include <array>
#include <cmath>

#include "gcntrack/errors.hpp"

namespace gcntrack {

namespace {

// sRGB primaries, D65 white.
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Lab rgb_to_lab(Rgb pixel) {
  const auto& lin = linear_table();
  const double rgb[3] = {lin[pixel.r], lin[pixel.g], lin[pixel.b]};
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    const double white = kM[i][0] + kM[i][1] + kM[i][2];
    xyz[i] = (kM[i][0] * rgb[0] + kM[i][1] * rgb[1] + kM[i][2] * rgb[2]) / white;
  }
  const double fx = lab_f(xyz[0]), fy = lab_f(xyz[1]), fz = lab_f(xyz[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const RgbImage& image) {
  LabImage out(image.width(), image.height());
  auto src = image.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = rgb_to_lab(src[i]);
  return out;
}

FeatureMatrix mean_features(const LabImage& region, const SuperpixelMap& map) {
  if (!region.same_shape(map.labels)) {
    throw InputError("superpixel map does not match region dimensions");
  }
  FeatureMatrix features = FeatureMatrix::Zero(map.count, 3);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(map.count);
  auto labels = map.labels.pixels();
  auto pixels = region.pixels();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= map.count) throw InputError("superpixel label out of range");
    features(label, 0) += pixels[i].l;
    features(label, 1) += pixels[i].a;
    features(label, 2) += pixels[i].b;
    counts(label) += 1.0;
  }
  for (Index i = 0; i < map.count; ++i) {
    if (counts(i) > 0.0) features.row(i) /= counts(i);
  }
  return features;
}

}  // namespace gcntrack
