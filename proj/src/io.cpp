#include "gcntrack/io.hpp"

#include <cstdio>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "gcntrack/errors.hpp"

namespace gcntrack::io {

namespace fs = std::filesystem;

RgbImage read_rgb(const fs::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw InputError("cannot read image " + path.string());
  RgbImage image(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) image(x, y) = {row[x][2], row[x][1], row[x][0]};
  }
  return image;
}

Mask read_mask(const fs::path& path) {
  const cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw InputError("cannot read mask " + path.string());
  Mask mask(gray.cols, gray.rows);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) mask(x, y) = row[x] != 0;
  }
  return mask;
}

void write_rgb(const fs::path& path, const RgbImage& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb p = image(x, y);
      row[x] = {p.b, p.g, p.r};
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw InputError("cannot write " + path.string());
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width(); ++x) row[x] = mask(x, y) ? 255 : 0;
  }
  const std::vector<int> params{cv::IMWRITE_PNG_BILEVEL, 1};
  if (!cv::imwrite(path.string(), gray, params)) {
    throw InputError("cannot write " + path.string());
  }
}

void write_labels_png(const fs::path& path, const SuperpixelMap& map) {
  if (map.count > 65536) throw InputError("too many superpixels for a 16-bit image");
  cv::Mat labels(map.height(), map.width(), CV_16UC1);
  for (int y = 0; y < map.height(); ++y) {
    auto* row = labels.ptr<std::uint16_t>(y);
    for (int x = 0; x < map.width(); ++x) row[x] = static_cast<std::uint16_t>(map.labels(x, y));
  }
  if (!cv::imwrite(path.string(), labels)) throw InputError("cannot write " + path.string());
}

std::string frame_file_name(int index, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d", index);
  return buf + extension;
}

Sequence load_sequence(const fs::path& root, const std::string& name) {
  const fs::path dir = root / name;
  const fs::path frames_dir = dir / "frames";
  const fs::path masks_dir = dir / "masks";
  if (!fs::is_directory(frames_dir)) throw InputError("missing frame directory " + frames_dir.string());
  if (!fs::is_directory(masks_dir)) throw InputError("missing mask directory " + masks_dir.string());

  Sequence seq;
  seq.name = name;
  for (int index = 0;; ++index) {
    fs::path frame_path;
    for (const char* ext : {".jpg", ".png", ".jpeg"}) {
      const fs::path candidate = frames_dir / frame_file_name(index, ext);
      if (fs::exists(candidate)) {
        frame_path = candidate;
        break;
      }
    }
    if (frame_path.empty()) break;
    seq.frames.push_back(read_rgb(frame_path));
    const fs::path mask_path = masks_dir / frame_file_name(index, ".png");
    if (fs::exists(mask_path)) {
      seq.masks.emplace_back(read_mask(mask_path));
    } else {
      seq.masks.emplace_back(std::nullopt);
    }
  }
  if (seq.frames.empty()) throw InputError("no frames in " + frames_dir.string());
  if (!seq.masks.front()) throw InputError("missing frame 0 mask in " + masks_dir.string());
  seq.validate();
  return seq;
}

void save_sequence(const fs::path& root, const Sequence& sequence) {
  sequence.validate();
  const fs::path dir = root / sequence.name;
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "masks");
  for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
    const int index = static_cast<int>(i);
    write_rgb(dir / "frames" / frame_file_name(index, ".png"), sequence.frames[i]);
    if (sequence.masks[i]) {
      write_mask_png(dir / "masks" / frame_file_name(index, ".png"), *sequence.masks[i]);
    }
  }
}

}  // namespace gcntrack::io
