#pragma once

#include <filesystem>
#include <iosfwd>

#include "gcntrack/graph.hpp"
#include "gcntrack/image.hpp"
#include "gcntrack/superpixel.hpp"

namespace gcntrack {

/// Dense displacement field: pixel (x, y) moves to (x + u, y + v).
struct FlowField {
  Image<float> u;
  Image<float> v;

  FlowField() = default;
  FlowField(int width, int height) : u(width, height), v(width, height) {}

  int width() const { return u.width(); }
  int height() const { return u.height(); }
  bool operator==(const FlowField&) const = default;
};

/// Horn-Schunck settings: smoothness is the regularization weight alpha
/// (same units as the image intensities).
struct FlowParams {
  double smoothness = 15.0;
  int levels = 3;
  int iterations = 200;
};

/// Coarse-to-fine Horn-Schunck flow from `prev` to `curr`.
FlowField estimate_flow(const GrayImage& prev, const GrayImage& curr,
                        const FlowParams& params = {});

FlowField crop(const FlowField& flow, const Rect& rect);

/// Middlebury .flo: float 202021.25, int32 width, int32 height, then
/// interleaved float32 (u, v) in row-major order, all little-endian.
FlowField read_flo(std::istream& in);
FlowField read_flo(const std::filesystem::path& path);
void write_flo(std::ostream& out, const FlowField& flow);
void write_flo(const std::filesystem::path& path, const FlowField& flow);

/// B(i, j) = fraction of superpixel i's pixels whose displaced location
/// (rounded to the nearest pixel, in frame coordinates) falls in superpixel j
/// of `curr`. `flow` covers `prev`'s region.
Matrix temporal_links(const SuperpixelMap& prev, const SuperpixelMap& curr,
                      const FlowField& flow);

}  // namespace gcntrack
