#pragma once

#include "gcntrack/graph.hpp"
#include "gcntrack/image.hpp"
#include "gcntrack/superpixel.hpp"

namespace gcntrack {

/// sRGB (D65) to CIE-LAB.
Lab rgb_to_lab(Rgb pixel);
LabImage rgb_to_lab(const RgbImage& image);

/// Mean LAB color of every superpixel, one row per label (count x 3).
FeatureMatrix mean_features(const LabImage& region, const SuperpixelMap& map);

}  // namespace gcntrack
