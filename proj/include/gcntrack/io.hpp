#pragma once

// Image and sequence files. Backed by OpenCV's codecs.

#include <filesystem>
#include <string>

#include "gcntrack/dataset.hpp"
#include "gcntrack/image.hpp"
#include "gcntrack/superpixel.hpp"

namespace gcntrack::io {

RgbImage read_rgb(const std::filesystem::path& path);
/// Any nonzero pixel becomes 1.
Mask read_mask(const std::filesystem::path& path);

void write_rgb(const std::filesystem::path& path, const RgbImage& image);
/// 1-bit grayscale PNG.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
/// 16-bit grayscale PNG of the label values.
void write_labels_png(const std::filesystem::path& path, const SuperpixelMap& map);

/// "%05d" + extension.
std::string frame_file_name(int index, const std::string& extension);

/// Loads root/name/frames/NNNNN.{jpg,png} and root/name/masks/NNNNN.png.
Sequence load_sequence(const std::filesystem::path& root, const std::string& name);

/// Writes frames as PNG and masks as 1-bit PNG in the layout load_sequence reads.
void save_sequence(const std::filesystem::path& root, const Sequence& sequence);

}  // namespace gcntrack::io
