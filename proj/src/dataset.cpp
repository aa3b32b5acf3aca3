#include "gcntrack/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "gcntrack/errors.hpp"

namespace gcntrack {

void Sequence::validate() const {
  if (frames.empty()) throw InputError("sequence '" + name + "' has no frames");
  if (masks.size() != frames.size()) throw InputError("mask list length differs from frames");
  if (!masks.front()) throw InputError("sequence '" + name + "' lacks a frame 0 mask");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].same_shape(frames.front())) {
      throw InputError("frame " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (masks[i] && !masks[i]->same_shape(frames.front())) {
      throw InputError("mask " + std::to_string(i) + " has inconsistent dimensions");
    }
  }
}

namespace {

const char* shape_name(SynthShape s) { return s == SynthShape::disc ? "disc" : "rect"; }
const char* trajectory_name(SynthTrajectory t) {
  return t == SynthTrajectory::linear ? "linear" : "bounce";
}

// Position on a segment [0, span] for a point reflected at both ends.
double reflect(double position, double span) {
  if (span <= 0.0) return 0.0;
  const double period = 2.0 * span;
  double p = std::fmod(position, period);
  if (p < 0.0) p += period;
  return p <= span ? p : period - p;
}

bool inside_target(const SynthSpec& spec, double px, double py, int x, int y) {
  const double sx = x + 0.5, sy = y + 0.5;
  if (spec.shape == SynthShape::rect) {
    return sx >= px && sx < px + spec.target_width && sy >= py && sy < py + spec.target_height;
  }
  const double rx = 0.5 * spec.target_width, ry = 0.5 * spec.target_height;
  const double dx = (sx - (px + rx)) / rx, dy = (sy - (py + ry)) / ry;
  return dx * dx + dy * dy <= 1.0;
}

void validate(const SynthSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.length < 1) {
    throw InputError("synthetic sequence needs positive size and length");
  }
  if (spec.target_width < 1 || spec.target_height < 1 || spec.target_width > spec.width ||
      spec.target_height > spec.height) {
    throw InputError("target does not fit inside the frame");
  }
  if (!(spec.noise_sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
  for (int t = 0; t < spec.length; ++t) {
    const auto [x, y] = synth_position(spec, t);
    if (x < 0.0 || y < 0.0 || x + spec.target_width > spec.width ||
        y + spec.target_height > spec.height) {
      throw InputError("trajectory leaves the frame at frame " + std::to_string(t));
    }
  }
}

}  // namespace

void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = nlohmann::json{{"name", s.name},
                     {"width", s.width},
                     {"height", s.height},
                     {"length", s.length},
                     {"shape", shape_name(s.shape)},
                     {"target_width", s.target_width},
                     {"target_height", s.target_height},
                     {"start_x", s.start_x},
                     {"start_y", s.start_y},
                     {"velocity_x", s.velocity_x},
                     {"velocity_y", s.velocity_y},
                     {"trajectory", trajectory_name(s.trajectory)},
                     {"noise_sigma", s.noise_sigma},
                     {"target_color", {s.target_color.r, s.target_color.g, s.target_color.b}},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
  s.name = j.value("name", s.name);
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.length = j.value("length", s.length);
  const std::string shape = j.value("shape", std::string(shape_name(s.shape)));
  if (shape == "rect" || shape == "square") {
    s.shape = SynthShape::rect;
  } else if (shape == "disc" || shape == "circle") {
    s.shape = SynthShape::disc;
  } else {
    throw InputError("unknown synthetic shape '" + shape + "'");
  }
  s.target_width = j.value("target_width", s.target_width);
  s.target_height = j.value("target_height", s.target_height);
  s.start_x = j.value("start_x", s.start_x);
  s.start_y = j.value("start_y", s.start_y);
  s.velocity_x = j.value("velocity_x", s.velocity_x);
  s.velocity_y = j.value("velocity_y", s.velocity_y);
  const std::string traj = j.value("trajectory", std::string(trajectory_name(s.trajectory)));
  if (traj == "linear") {
    s.trajectory = SynthTrajectory::linear;
  } else if (traj == "bounce") {
    s.trajectory = SynthTrajectory::bounce;
  } else {
    throw InputError("unknown trajectory '" + traj + "'");
  }
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  if (j.contains("target_color")) {
    const auto& c = j.at("target_color");
    if (!c.is_array() || c.size() != 3) throw InputError("target_color must be [r, g, b]");
    s.target_color = {c[0].get<std::uint8_t>(), c[1].get<std::uint8_t>(), c[2].get<std::uint8_t>()};
  }
  s.seed = j.value("seed", s.seed);
}

std::pair<double, double> synth_position(const SynthSpec& spec, int index) {
  const double x = spec.start_x + spec.velocity_x * index;
  const double y = spec.start_y + spec.velocity_y * index;
  if (spec.trajectory == SynthTrajectory::linear) return {x, y};
  return {reflect(x, spec.width - spec.target_width), reflect(y, spec.height - spec.target_height)};
}

Sequence synth_sequence(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  // Static background: a few low-frequency plane waves per channel around a
  // muted blue-green base color.
  constexpr double kBase[3] = {90.0, 115.0, 105.0};
  constexpr int kWaves = 4;
  struct Wave {
    double fx, fy, phase, amplitude;
  };
  Wave waves[3][kWaves];
  for (auto& channel : waves) {
    for (auto& w : channel) {
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      const double freq = (0.5 + 2.5 * unit(rng)) * 2.0 * std::numbers::pi / 64.0;
      w = {freq * std::cos(angle), freq * std::sin(angle), 2.0 * std::numbers::pi * unit(rng),
           6.0 + 8.0 * unit(rng)};
    }
  }
  Image<std::array<double, 3>> background(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = kBase[c];
        for (const auto& w : waves[c]) v += w.amplitude * std::sin(w.fx * x + w.fy * y + w.phase);
        background(x, y)[c] = v;
      }
    }
  }
  // Noise is frozen: one field for the background and one that travels with
  // the target, so a static scene renders identical frames.
  for (auto& px : background.pixels()) {
    for (double& v : px) v += spec.noise_sigma * noise(rng);
  }
  const int tw = spec.target_width + 2, th = spec.target_height + 2;
  Image<std::array<double, 3>> target_noise(tw, th);
  for (auto& px : target_noise.pixels()) {
    for (double& v : px) v = spec.noise_sigma * noise(rng);
  }

  Sequence seq;
  seq.name = spec.name;
  const double target[3] = {static_cast<double>(spec.target_color.r),
                            static_cast<double>(spec.target_color.g),
                            static_cast<double>(spec.target_color.b)};
  auto quantize = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  for (int t = 0; t < spec.length; ++t) {
    const auto [px, py] = synth_position(spec, t);
    RgbImage frame(spec.width, spec.height);
    Mask mask(spec.width, spec.height, 0);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const bool in = inside_target(spec, px, py, x, y);
        mask(x, y) = in;
        double rgb[3];
        if (in) {
          const int tx = std::clamp(x - static_cast<int>(std::floor(px)), 0, tw - 1);
          const int ty = std::clamp(y - static_cast<int>(std::floor(py)), 0, th - 1);
          for (int c = 0; c < 3; ++c) rgb[c] = target[c] + target_noise(tx, ty)[c];
        } else {
          for (int c = 0; c < 3; ++c) rgb[c] = background(x, y)[c];
        }
        frame(x, y) = {quantize(rgb[0]), quantize(rgb[1]), quantize(rgb[2])};
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.masks.emplace_back(std::move(mask));
  }
  return seq;
}

std::vector<SynthSpec> synthetic_suite() {
  std::vector<SynthSpec> suite;

  SynthSpec square;
  square.name = "square";
  suite.push_back(square);

  SynthSpec disc;
  disc.name = "disc";
  disc.shape = SynthShape::disc;
  disc.target_width = 18;
  disc.target_height = 18;
  disc.start_x = 30.0;
  disc.start_y = 6.0;
  disc.velocity_x = -1.5;
  disc.velocity_y = 1.0;
  disc.target_color = {225, 205, 40};
  disc.seed = 2;
  suite.push_back(disc);

  SynthSpec bar;
  bar.name = "bar";
  bar.target_width = 22;
  bar.target_height = 12;
  bar.start_x = 20.0;
  bar.start_y = 4.0;
  bar.velocity_x = 0.0;
  bar.velocity_y = 1.5;
  bar.target_color = {190, 50, 180};
  bar.seed = 3;
  suite.push_back(bar);

  return suite;
}

}  // namespace gcntrack
