#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcntrack/image.hpp"

namespace gcntrack {

/// |a and b| / |a or b|; 1 when both are empty.
double mask_iou(const Mask& a, const Mask& b);
double box_iou(const Rect& a, const Rect& b);
double center_distance(const Rect& a, const Rect& b);

struct FrameRecord {
  int index = 0;
  std::optional<Mask> predicted_mask;
  std::optional<Rect> predicted_box;
  std::optional<Mask> truth_mask;
  std::optional<Rect> truth_box;
};

struct SequenceResult {
  std::string name;
  std::vector<FrameRecord> frames;
};

/// Per-frame scores; a missing or empty prediction scores IoU 0 and an
/// infinite center distance. Box scores are absent when the frame has no
/// ground-truth box, mask IoU when it has no ground-truth mask.
struct FrameScore {
  int index = 0;
  std::optional<double> mask_iou;
  std::optional<double> box_iou;
  std::optional<double> center_distance;
};

std::vector<FrameScore> score_frames(const SequenceResult& result);

enum class OverlapKind { mask, box };

/// Fraction of scored frames with center distance <= each threshold.
std::vector<double> precision_curve(const SequenceResult& result,
                                    std::span<const double> thresholds);

struct SuccessCurve {
  std::vector<double> thresholds;
  std::vector<double> rates;
  double auc = 0.0;
};

/// 21 thresholds 0, 0.05, ..., 1; a frame succeeds when IoU > threshold.
std::vector<double> overlap_thresholds();
SuccessCurve success_curve(std::span<const double> overlaps);
SuccessCurve success_curve(const SequenceResult& result, OverlapKind kind);

/// 0, 1, ..., 50 pixels.
std::vector<double> distance_thresholds();

struct Summary {
  std::string name;
  int frames = 0;
  double mean_mask_iou = 0.0;
  double mean_box_iou = 0.0;
  double precision_at_20 = 0.0;
  SuccessCurve mask_success;
  SuccessCurve box_success;
  std::vector<double> precision;  ///< over distance_thresholds()
};

/// Summary over one or more sequences; frames are pooled.
Summary summarize(std::span<const SequenceResult> results, std::string name = {});
Summary summarize(const SequenceResult& result);

nlohmann::json to_json(const Summary& summary);
/// frame,mask_iou,box_iou,center_dist
void write_frame_csv(std::ostream& out, std::span<const FrameScore> scores);
/// kind,threshold,rate
void write_curve_csv(std::ostream& out, const Summary& summary);

}  // namespace gcntrack
