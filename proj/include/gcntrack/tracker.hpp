#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcntrack/flow.hpp"
#include "gcntrack/graph.hpp"
#include "gcntrack/image.hpp"
#include "gcntrack/solver.hpp"
#include "gcntrack/superpixel.hpp"

namespace gcntrack {

struct TrackerConfig {
  double sigma = 10.0;
  double lambda1 = 0.01;
  double lambda2 = 0.07;
  double alpha = 0.001;
  double beta = 50.0;
  double min_error = 1e-4;
  int max_iter = 100;
  double ridge = 1e-8;
  int target_superpixels = 600;
  /// Lower bound on the mean superpixel area; caps the superpixel count on
  /// small candidate regions.
  int min_superpixel_area = 12;
  double region_expand = 1.5;
  /// Extra region growth applied after a frame with an empty mask.
  double fallback_expand = 1.5;
  /// Cut on min-max normalized scores.
  double mask_threshold = 0.5;
  PropagationMode propagation_mode = PropagationMode::mixed;
  Fidelity fidelity = Fidelity::exact_minimizer;
  SpatialTopology topology = SpatialTopology::touching;
  SlicParams slic;
  FlowParams flow;

  void validate() const;
  SolverConfig solver() const;
};

struct StepDiagnostics {
  int iterations = 0;
  double final_loss = 0.0;
  bool converged = false;
  bool fallback = false;
  int n_prev = 0;
  int n_curr = 0;
};

struct TrackState {
  int frame_index = 0;
  Mask mask;                         ///< full-frame target mask
  Rect box;                          ///< tight box of mask, or carried over
  std::vector<std::uint8_t> indicator;  ///< f over superpixels of `superpixels`
  SuperpixelMap superpixels;         ///< segmentation the indicator refers to
  FeatureMatrix features;            ///< mean LAB features of `superpixels`
  GrayImage gray;                    ///< frame `superpixels` was computed on
  int source_frame = 0;              ///< index of that frame
  double region_scale = 1.0;
  StepDiagnostics diagnostics;
};

/// Box scaled by `expand` about its center, clamped to the frame.
Rect candidate_region(const Rect& box, int frame_width, int frame_height, double expand);

/// Tight bounding box of the set pixels.
std::optional<Rect> mask_to_box(const Mask& mask);

/// f_i = 1 iff at least half of superpixel i's pixels are set in `mask`
/// (full-frame coordinates).
std::vector<std::uint8_t> indicator_from_mask(const SuperpixelMap& map, const Mask& mask);

/// Superpixels whose min-max normalized score reaches `threshold`. A constant
/// score vector selects the strictly positive entries.
std::vector<std::uint8_t> select_superpixels(const Vector& scores, double threshold);

/// Full-frame mask of the selected superpixels.
Mask rasterize(const SuperpixelMap& map, const std::vector<std::uint8_t>& selected,
               int frame_width, int frame_height);

/// select_superpixels followed by rasterize.
Mask threshold_mask(const Vector& scores, const SuperpixelMap& map, int frame_width,
                    int frame_height, double threshold = 0.5);

/// Segments the candidate region around the ground-truth box of frame 0.
TrackState init(const RgbImage& frame, const Mask& ground_truth, const TrackerConfig& config);

/// Graph built by one step, for debugging.
struct StepTrace {
  SpatioTemporalGraph graph;
  Matrix smoothing;
  Matrix sharpening;
  SuperpixelMap superpixels;  ///< current frame's candidate region
};

/// Tracks into `frame`. `flow`, when given, is the full-frame flow from the
/// state's source frame to `frame`; otherwise flow is estimated.
TrackState step(const TrackState& state, const RgbImage& frame, const TrackerConfig& config,
                const FlowField* flow = nullptr, StepTrace* trace = nullptr);

struct FrameOutput {
  Mask mask;
  Rect box;
  StepDiagnostics diagnostics;
};

/// Supplies precomputed flow from frame `from` to frame `to`, if available.
using FlowProvider = std::function<std::optional<FlowField>(int from, int to)>;

using TraceObserver = std::function<void(int frame, const StepTrace&)>;

/// Runs init on frame 0 and step on every later frame.
std::vector<FrameOutput> track_frames(const std::vector<RgbImage>& frames,
                                      const Mask& initial_mask, const TrackerConfig& config,
                                      const FlowProvider& flows = {},
                                      const TraceObserver& observer = {});

}  // namespace gcntrack
