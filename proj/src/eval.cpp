#include "gcntrack/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "gcntrack/errors.hpp"
#include "gcntrack/tracker.hpp"

namespace gcntrack {

double mask_iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw InputError("masks differ in size");
  long long inter = 0, uni = 0;
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool x = pa[i] != 0, y = pb[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double box_iou(const Rect& a, const Rect& b) {
  if (a.width < 0 || a.height < 0 || b.width < 0 || b.height < 0) {
    throw InputError("negative box extent");
  }
  const double inter = static_cast<double>(intersect(a, b).area());
  const double uni = static_cast<double>(a.area() + b.area()) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double center_distance(const Rect& a, const Rect& b) {
  const double dx = (a.x + 0.5 * a.width) - (b.x + 0.5 * b.width);
  const double dy = (a.y + 0.5 * a.height) - (b.y + 0.5 * b.height);
  return std::hypot(dx, dy);
}

std::vector<FrameScore> score_frames(const SequenceResult& result) {
  std::vector<FrameScore> scores;
  scores.reserve(result.frames.size());
  for (const auto& frame : result.frames) {
    FrameScore s;
    s.index = frame.index;
    if (frame.truth_mask) {
      const bool predicted = frame.predicted_mask && count_set(*frame.predicted_mask) > 0;
      s.mask_iou = predicted ? mask_iou(*frame.predicted_mask, *frame.truth_mask) : 0.0;
      if (!predicted && count_set(*frame.truth_mask) == 0) s.mask_iou = 1.0;
    }
    std::optional<Rect> truth_box = frame.truth_box;
    if (!truth_box && frame.truth_mask) truth_box = mask_to_box(*frame.truth_mask);
    if (truth_box) {
      if (frame.predicted_box && !frame.predicted_box->empty()) {
        s.box_iou = box_iou(*frame.predicted_box, *truth_box);
        s.center_distance = center_distance(*frame.predicted_box, *truth_box);
      } else {
        s.box_iou = 0.0;
        s.center_distance = std::numeric_limits<double>::infinity();
      }
    }
    scores.push_back(s);
  }
  return scores;
}

namespace {

std::vector<double> distances(const std::vector<FrameScore>& scores) {
  std::vector<double> out;
  for (const auto& s : scores) {
    if (s.center_distance) out.push_back(*s.center_distance);
  }
  return out;
}

std::vector<double> overlaps(const std::vector<FrameScore>& scores, OverlapKind kind) {
  std::vector<double> out;
  for (const auto& s : scores) {
    const auto& v = kind == OverlapKind::mask ? s.mask_iou : s.box_iou;
    if (v) out.push_back(*v);
  }
  return out;
}

std::vector<double> precision_from(const std::vector<double>& dist,
                                   std::span<const double> thresholds) {
  std::vector<double> rates;
  rates.reserve(thresholds.size());
  for (double tau : thresholds) {
    if (dist.empty()) {
      rates.push_back(0.0);
      continue;
    }
    std::size_t hit = 0;
    for (double d : dist) hit += d <= tau;
    rates.push_back(static_cast<double>(hit) / dist.size());
  }
  return rates;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

}  // namespace

std::vector<double> precision_curve(const SequenceResult& result,
                                    std::span<const double> thresholds) {
  return precision_from(distances(score_frames(result)), thresholds);
}

std::vector<double> overlap_thresholds() {
  std::vector<double> t(21);
  for (int i = 0; i <= 20; ++i) t[i] = i / 20.0;
  return t;
}

std::vector<double> distance_thresholds() {
  std::vector<double> t(51);
  for (int i = 0; i <= 50; ++i) t[i] = i;
  return t;
}

SuccessCurve success_curve(std::span<const double> values) {
  SuccessCurve curve;
  curve.thresholds = overlap_thresholds();
  for (double theta : curve.thresholds) {
    std::size_t hit = 0;
    for (double v : values) hit += v > theta;
    curve.rates.push_back(values.empty() ? 0.0 : static_cast<double>(hit) / values.size());
  }
  curve.auc = mean(curve.rates);
  return curve;
}

SuccessCurve success_curve(const SequenceResult& result, OverlapKind kind) {
  return success_curve(overlaps(score_frames(result), kind));
}

Summary summarize(std::span<const SequenceResult> results, std::string name) {
  std::vector<FrameScore> scores;
  for (const auto& r : results) {
    auto s = score_frames(r);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  Summary summary;
  summary.name = std::move(name);
  summary.frames = static_cast<int>(scores.size());
  const auto mask_values = overlaps(scores, OverlapKind::mask);
  const auto box_values = overlaps(scores, OverlapKind::box);
  const auto dist = distances(scores);
  summary.mean_mask_iou = mean(mask_values);
  summary.mean_box_iou = mean(box_values);
  summary.mask_success = success_curve(mask_values);
  summary.box_success = success_curve(box_values);
  summary.precision = precision_from(dist, distance_thresholds());
  const double twenty[1] = {20.0};
  summary.precision_at_20 = precision_from(dist, twenty).front();
  return summary;
}

Summary summarize(const SequenceResult& result) {
  return summarize(std::span<const SequenceResult>(&result, 1), result.name);
}

nlohmann::json to_json(const Summary& summary) {
  nlohmann::json j;
  j["name"] = summary.name;
  j["frames"] = summary.frames;
  j["mean_mask_iou"] = summary.mean_mask_iou;
  j["mean_box_iou"] = summary.mean_box_iou;
  j["precision_at_20"] = summary.precision_at_20;
  j["mask_success_auc"] = summary.mask_success.auc;
  j["box_success_auc"] = summary.box_success.auc;
  j["mask_success"] = summary.mask_success.rates;
  j["box_success"] = summary.box_success.rates;
  j["overlap_thresholds"] = summary.mask_success.thresholds;
  j["precision"] = summary.precision;
  j["distance_thresholds"] = distance_thresholds();
  return j;
}

void write_frame_csv(std::ostream& out, std::span<const FrameScore> scores) {
  out << "frame,mask_iou,box_iou,center_dist\n";
  auto field = [&](const std::optional<double>& v) {
    if (!v) return;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    out << (std::isinf(*v) ? "inf" : buf);
  };
  for (const auto& s : scores) {
    out << s.index << ',';
    field(s.mask_iou);
    out << ',';
    field(s.box_iou);
    out << ',';
    field(s.center_distance);
    out << '\n';
  }
}

void write_curve_csv(std::ostream& out, const Summary& summary) {
  out << "kind,threshold,rate\n";
  const auto emit = [&](const char* kind, const std::vector<double>& t,
                        const std::vector<double>& r) {
    for (std::size_t i = 0; i < t.size() && i < r.size(); ++i) {
      out << kind << ',' << t[i] << ',' << r[i] << '\n';
    }
  };
  emit("mask_success", summary.mask_success.thresholds, summary.mask_success.rates);
  emit("box_success", summary.box_success.thresholds, summary.box_success.rates);
  emit("precision", distance_thresholds(), summary.precision);
}

}  // namespace gcntrack
