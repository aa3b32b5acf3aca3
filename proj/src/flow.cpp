#include "gcntrack/flow.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "gcntrack/errors.hpp"

namespace gcntrack {

namespace {

constexpr float kFloMagic = 202021.25f;

float sample_clamped(const GrayImage& img, int x, int y) {
  x = std::clamp(x, 0, img.width() - 1);
  y = std::clamp(y, 0, img.height() - 1);
  return img(x, y);
}

float bilinear(const GrayImage& img, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double tx = x - fx, ty = y - fy;
  const double top = (1 - tx) * sample_clamped(img, x0, y0) + tx * sample_clamped(img, x0 + 1, y0);
  const double bot =
      (1 - tx) * sample_clamped(img, x0, y0 + 1) + tx * sample_clamped(img, x0 + 1, y0 + 1);
  return static_cast<float>((1 - ty) * top + ty * bot);
}

GrayImage downsample(const GrayImage& img) {
  const int w = std::max(1, (img.width() + 1) / 2);
  const int h = std::max(1, (img.height() + 1) / 2);
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = 0.25f * (sample_clamped(img, 2 * x, 2 * y) + sample_clamped(img, 2 * x + 1, 2 * y) +
                           sample_clamped(img, 2 * x, 2 * y + 1) +
                           sample_clamped(img, 2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

Image<float> upsample_flow_component(const Image<float>& coarse, int w, int h) {
  Image<float> out(w, h);
  const double sx = static_cast<double>(coarse.width()) / w;
  const double sy = static_cast<double>(coarse.height()) / h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double cx = (x + 0.5) * sx - 0.5, cy = (y + 0.5) * sy - 0.5;
      out(x, y) = static_cast<float>(bilinear(coarse, cx, cy) / sx);
    }
  }
  return out;
}

// Horn-Schunck neighbourhood average: 1/6 for the 4-neighbours, 1/12 for the
// diagonals, borders replicated.
float local_average(const Image<float>& f, int x, int y) {
  const float edge = sample_clamped(f, x - 1, y) + sample_clamped(f, x + 1, y) +
                     sample_clamped(f, x, y - 1) + sample_clamped(f, x, y + 1);
  const float corner = sample_clamped(f, x - 1, y - 1) + sample_clamped(f, x + 1, y - 1) +
                       sample_clamped(f, x - 1, y + 1) + sample_clamped(f, x + 1, y + 1);
  return edge / 6.0f + corner / 12.0f;
}

void refine_level(const GrayImage& prev, const GrayImage& curr, const FlowParams& params,
                  FlowField& flow) {
  const int w = prev.width(), h = prev.height();
  GrayImage warped(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) warped(x, y) = bilinear(curr, x + flow.u(x, y), y + flow.v(x, y));
  }
  Image<float> ix(w, h), iy(w, h), it(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ix(x, y) = 0.25f * (sample_clamped(prev, x + 1, y) - sample_clamped(prev, x - 1, y) +
                          sample_clamped(warped, x + 1, y) - sample_clamped(warped, x - 1, y));
      iy(x, y) = 0.25f * (sample_clamped(prev, x, y + 1) - sample_clamped(prev, x, y - 1) +
                          sample_clamped(warped, x, y + 1) - sample_clamped(warped, x, y - 1));
      it(x, y) = warped(x, y) - prev(x, y);
    }
  }
  const FlowField base = flow;
  const float alpha_sq = static_cast<float>(params.smoothness * params.smoothness);
  FlowField next = flow;
  for (int iter = 0; iter < params.iterations; ++iter) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float ub = local_average(flow.u, x, y);
        const float vb = local_average(flow.v, x, y);
        const float gx = ix(x, y), gy = iy(x, y);
        const float residual =
            gx * (ub - base.u(x, y)) + gy * (vb - base.v(x, y)) + it(x, y);
        const float scale = residual / (alpha_sq + gx * gx + gy * gy);
        next.u(x, y) = ub - gx * scale;
        next.v(x, y) = vb - gy * scale;
      }
    }
    std::swap(flow, next);
  }
}

std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_le32(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

}  // namespace

FlowField estimate_flow(const GrayImage& prev, const GrayImage& curr, const FlowParams& params) {
  if (!prev.same_shape(curr)) throw InputError("flow frames differ in size");
  if (prev.empty()) throw InputError("empty flow frames");
  if (params.levels < 1 || params.iterations < 0 || !(params.smoothness > 0.0)) {
    throw ParameterError("invalid flow parameters");
  }
  std::vector<GrayImage> prev_pyr{prev}, curr_pyr{curr};
  for (int l = 1; l < params.levels; ++l) {
    if (prev_pyr.back().width() < 8 || prev_pyr.back().height() < 8) break;
    prev_pyr.push_back(downsample(prev_pyr.back()));
    curr_pyr.push_back(downsample(curr_pyr.back()));
  }
  FlowField flow(prev_pyr.back().width(), prev_pyr.back().height());
  for (int l = static_cast<int>(prev_pyr.size()) - 1; l >= 0; --l) {
    const int w = prev_pyr[l].width(), h = prev_pyr[l].height();
    if (flow.width() != w || flow.height() != h) {
      FlowField up;
      up.u = upsample_flow_component(flow.u, w, h);
      up.v = upsample_flow_component(flow.v, w, h);
      flow = std::move(up);
    }
    refine_level(prev_pyr[l], curr_pyr[l], params, flow);
  }
  return flow;
}

FlowField crop(const FlowField& flow, const Rect& rect) {
  FlowField out;
  out.u = crop(flow.u, rect);
  out.v = crop(flow.v, rect);
  return out;
}

FlowField read_flo(std::istream& in) {
  unsigned char header[12];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
    throw FormatError(".flo: truncated header");
  }
  const float magic = std::bit_cast<float>(load_le32(header));
  if (magic != kFloMagic) throw FormatError(".flo: bad magic number");
  const auto width = static_cast<std::int32_t>(load_le32(header + 4));
  const auto height = static_cast<std::int32_t>(load_le32(header + 8));
  if (width < 1 || height < 1 || width > 100000 || height > 100000) {
    throw FormatError(".flo: implausible dimensions");
  }
  FlowField flow(width, height);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 8);
  for (int y = 0; y < height; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()))) {
      throw FormatError(".flo: truncated data");
    }
    for (int x = 0; x < width; ++x) {
      flow.u(x, y) = std::bit_cast<float>(load_le32(&row[8 * x]));
      flow.v(x, y) = std::bit_cast<float>(load_le32(&row[8 * x + 4]));
    }
  }
  return flow;
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_flo(in);
}

void write_flo(std::ostream& out, const FlowField& flow) {
  unsigned char header[12];
  store_le32(header, std::bit_cast<std::uint32_t>(kFloMagic));
  store_le32(header + 4, static_cast<std::uint32_t>(flow.width()));
  store_le32(header + 8, static_cast<std::uint32_t>(flow.height()));
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  std::vector<unsigned char> row(static_cast<std::size_t>(flow.width()) * 8);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      store_le32(&row[8 * x], std::bit_cast<std::uint32_t>(flow.u(x, y)));
      store_le32(&row[8 * x + 4], std::bit_cast<std::uint32_t>(flow.v(x, y)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw InputError(".flo: write failed");
}

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_flo(out, flow);
}

Matrix temporal_links(const SuperpixelMap& prev, const SuperpixelMap& curr,
                      const FlowField& flow) {
  if (flow.width() != prev.width() || flow.height() != prev.height()) {
    throw InputError("flow does not match the previous region");
  }
  Matrix links = Matrix::Zero(prev.count, curr.count);
  const std::vector<int> sizes = prev.sizes();
  for (int y = 0; y < prev.height(); ++y) {
    for (int x = 0; x < prev.width(); ++x) {
      const double tx = prev.origin.x + x + static_cast<double>(flow.u(x, y));
      const double ty = prev.origin.y + y + static_cast<double>(flow.v(x, y));
      if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
      const double cx = std::floor(tx + 0.5) - curr.origin.x;
      const double cy = std::floor(ty + 0.5) - curr.origin.y;
      if (cx < 0 || cy < 0 || cx >= curr.width() || cy >= curr.height()) continue;
      links(prev.labels(x, y), curr.labels(static_cast<int>(cx), static_cast<int>(cy))) += 1.0;
    }
  }
  for (Index i = 0; i < prev.count; ++i) {
    if (sizes[i] > 0) links.row(i) /= sizes[i];
  }
  return links;
}

}  // namespace gcntrack
