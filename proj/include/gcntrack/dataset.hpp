#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcntrack/image.hpp"

namespace gcntrack {

struct Sequence {
  std::string name;
  std::vector<RgbImage> frames;
  /// Ground truth per frame; frame 0 must have one.
  std::vector<std::optional<Mask>> masks;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  void validate() const;
};

enum class SynthShape { rect, disc };
enum class SynthTrajectory {
  linear,  ///< constant velocity; leaving the frame is an error
  bounce,  ///< constant speed, reflected at the frame border
};

/// Declarative description of a synthetic sequence: a target of uniform color
/// moving over a smooth random background, with Gaussian pixel noise.
struct SynthSpec {
  std::string name = "synthetic";
  int width = 64;
  int height = 64;
  int length = 30;
  SynthShape shape = SynthShape::rect;
  int target_width = 16;
  int target_height = 16;
  double start_x = 8.0;   ///< top-left corner at frame 0
  double start_y = 24.0;
  double velocity_x = 2.0;
  double velocity_y = 0.0;
  SynthTrajectory trajectory = SynthTrajectory::bounce;
  double noise_sigma = 5.0;  ///< intensity levels
  Rgb target_color{200, 40, 40};
  std::uint64_t seed = 1;
};

void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);

/// Top-left corner of the target in frame `index`.
std::pair<double, double> synth_position(const SynthSpec& spec, int index);

/// Deterministic given spec.seed; masks mark exactly the target pixels.
Sequence synth_sequence(const SynthSpec& spec);

/// The synthetic suite used by the ablation harness.
std::vector<SynthSpec> synthetic_suite();

}  // namespace gcntrack
