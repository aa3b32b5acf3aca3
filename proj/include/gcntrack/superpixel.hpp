#pragma once

#include <vector>

#include "gcntrack/graph.hpp"
#include "gcntrack/image.hpp"

namespace gcntrack {

/// Partition of an image region into labelled superpixels.
struct SuperpixelMap {
  LabelImage labels;  ///< values 0..count-1
  int count = 0;
  Point origin;       ///< region offset inside the full frame

  int width() const { return labels.width(); }
  int height() const { return labels.height(); }
  Rect region() const { return {origin.x, origin.y, width(), height()}; }

  /// Pixels per label.
  std::vector<int> sizes() const;
  /// Throws InputError unless every label in 0..count-1 is used and no other
  /// value appears.
  void validate() const;
};

struct SlicParams {
  double compactness = 10.0;
  int iterations = 10;
};

/// SLIC superpixels over a LAB region followed by connectivity enforcement.
/// Throws InputError when the region has fewer pixels than target_k.
SuperpixelMap slic_segment(const LabImage& region, int target_k,
                           const SlicParams& params = {});

/// Makes every superpixel 4-connected: for each label only its largest
/// component keeps its identity, other components and components smaller than
/// `min_size` are merged into their largest 4-adjacent neighbour. Labels are
/// renumbered densely in raster order of first appearance.
SuperpixelMap enforce_connectivity(const SuperpixelMap& map, int min_size = 0);

/// Label pairs (i < j) with at least one pair of 8-adjacent pixels.
std::vector<NodePair> adjacency_pairs(const SuperpixelMap& map);

}  // namespace gcntrack
