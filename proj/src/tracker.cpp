#include "gcntrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "gcntrack/errors.hpp"
#include "gcntrack/features.hpp"

namespace gcntrack {

void TrackerConfig::validate() const {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (target_superpixels < 1) throw ParameterError("target_superpixels must be >= 1");
  if (min_superpixel_area < 1) throw ParameterError("min_superpixel_area must be >= 1");
  if (!(region_expand >= 1.0)) throw ParameterError("region_expand must be >= 1");
  if (!(fallback_expand >= 1.0)) throw ParameterError("fallback_expand must be >= 1");
  if (!(mask_threshold >= 0.0 && mask_threshold <= 1.0)) {
    throw ParameterError("mask_threshold must lie in [0, 1]");
  }
  solver().validate();
}

SolverConfig TrackerConfig::solver() const {
  SolverConfig s;
  s.alpha = alpha;
  s.beta = beta;
  s.min_error = min_error;
  s.max_iter = max_iter;
  s.ridge = ridge;
  s.fidelity = fidelity;
  return s;
}

Rect candidate_region(const Rect& box, int frame_width, int frame_height, double expand) {
  if (box.empty()) throw InputError("empty box");
  if (!(expand > 0.0)) throw ParameterError("expand must be positive");
  const double cx = box.x + 0.5 * box.width;
  const double cy = box.y + 0.5 * box.height;
  const double hw = 0.5 * box.width * expand;
  const double hh = 0.5 * box.height * expand;
  int x0 = static_cast<int>(std::lround(cx - hw));
  int x1 = static_cast<int>(std::lround(cx + hw));
  int y0 = static_cast<int>(std::lround(cy - hh));
  int y1 = static_cast<int>(std::lround(cy + hh));
  x0 = std::clamp(x0, 0, frame_width - 1);
  y0 = std::clamp(y0, 0, frame_height - 1);
  x1 = std::clamp(x1, x0 + 1, frame_width);
  y1 = std::clamp(y1, y0 + 1, frame_height);
  return {x0, y0, x1 - x0, y1 - y0};
}

std::optional<Rect> mask_to_box(const Mask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::vector<std::uint8_t> indicator_from_mask(const SuperpixelMap& map, const Mask& mask) {
  std::vector<int> inside(map.count, 0);
  const std::vector<int> sizes = map.sizes();
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const int fx = map.origin.x + x, fy = map.origin.y + y;
      if (mask.contains(fx, fy) && mask(fx, fy)) ++inside[map.labels(x, y)];
    }
  }
  std::vector<std::uint8_t> f(map.count, 0);
  for (int i = 0; i < map.count; ++i) f[i] = sizes[i] > 0 && 2 * inside[i] >= sizes[i];
  return f;
}

std::vector<std::uint8_t> select_superpixels(const Vector& scores, double threshold) {
  std::vector<std::uint8_t> selected(scores.size(), 0);
  if (scores.size() == 0) return selected;
  const double lo = scores.minCoeff(), hi = scores.maxCoeff();
  const double range = hi - lo;
  if (range <= 1e-12 * std::max(1.0, std::abs(hi))) {
    for (Index i = 0; i < scores.size(); ++i) selected[i] = scores(i) > 0.0;
    return selected;
  }
  for (Index i = 0; i < scores.size(); ++i) selected[i] = (scores(i) - lo) / range >= threshold;
  return selected;
}

Mask rasterize(const SuperpixelMap& map, const std::vector<std::uint8_t>& selected,
               int frame_width, int frame_height) {
  if (static_cast<int>(selected.size()) != map.count) {
    throw InputError("selection length differs from superpixel count");
  }
  Mask mask(frame_width, frame_height, 0);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const int fx = map.origin.x + x, fy = map.origin.y + y;
      if (selected[map.labels(x, y)] && mask.contains(fx, fy)) mask(fx, fy) = 1;
    }
  }
  return mask;
}

Mask threshold_mask(const Vector& scores, const SuperpixelMap& map, int frame_width,
                    int frame_height, double threshold) {
  if (scores.size() != map.count) throw InputError("score length differs from superpixel count");
  return rasterize(map, select_superpixels(scores, threshold), frame_width, frame_height);
}

namespace {

struct Segmentation {
  SuperpixelMap map;
  FeatureMatrix features;
};

Segmentation segment_region(const RgbImage& frame, const Rect& region,
                            const TrackerConfig& config) {
  const LabImage lab = rgb_to_lab(crop(frame, region));
  const long long area = region.area();
  const long long by_area = std::max<long long>(1, area / config.min_superpixel_area);
  const int k = static_cast<int>(std::min<long long>(config.target_superpixels, by_area));
  Segmentation seg;
  seg.map = slic_segment(lab, k, config.slic);
  seg.map.origin = region.origin();
  seg.features = mean_features(lab, seg.map);
  return seg;
}

Matrix spatial_block(const Segmentation& seg, const TrackerConfig& config) {
  if (config.topology == SpatialTopology::full) {
    return build_full_spatial_adjacency(seg.features, config.sigma);
  }
  const auto pairs = adjacency_pairs(seg.map);
  return build_spatial_adjacency(seg.features, pairs, config.sigma);
}

Rect padded_union(const Rect& a, const Rect& b, int pad, int width, int height) {
  const int x0 = std::max(0, std::min(a.x, b.x) - pad);
  const int y0 = std::max(0, std::min(a.y, b.y) - pad);
  const int x1 = std::min(width, std::max(a.right(), b.right()) + pad);
  const int y1 = std::min(height, std::max(a.bottom(), b.bottom()) + pad);
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

TrackState init(const RgbImage& frame, const Mask& ground_truth, const TrackerConfig& config) {
  config.validate();
  if (!frame.same_shape(ground_truth)) throw InputError("mask and frame differ in size");
  const auto box = mask_to_box(ground_truth);
  if (!box) throw InputError("initial mask is empty");

  const Rect region = candidate_region(*box, frame.width(), frame.height(), config.region_expand);
  Segmentation seg = segment_region(frame, region, config);

  TrackState state;
  state.frame_index = 0;
  state.mask = ground_truth;
  state.box = *box;
  state.indicator = indicator_from_mask(seg.map, ground_truth);
  state.superpixels = std::move(seg.map);
  state.features = std::move(seg.features);
  state.gray = to_gray(frame);
  state.source_frame = 0;
  return state;
}

TrackState step(const TrackState& state, const RgbImage& frame, const TrackerConfig& config,
                const FlowField* flow, StepTrace* trace) {
  config.validate();
  const int width = frame.width(), height = frame.height();
  if (!state.gray.same_shape(width, height)) throw InputError("frame size changed");
  if (flow && (flow->width() != width || flow->height() != height)) {
    throw InputError("flow does not match frame size");
  }
  const SuperpixelMap& prev_map = state.superpixels;
  const Rect prev_region = prev_map.region();
  const Rect region =
      candidate_region(state.box, width, height, config.region_expand * state.region_scale);
  const Segmentation curr = segment_region(frame, region, config);

  FlowField prev_flow;
  if (flow) {
    prev_flow = crop(*flow, prev_region);
  } else {
    const Rect window = padded_union(prev_region, region, 8, width, height);
    const FlowField local =
        estimate_flow(crop(state.gray, window), crop(to_gray(frame), window), config.flow);
    prev_flow = crop(local, {prev_region.x - window.x, prev_region.y - window.y,
                             prev_region.width, prev_region.height});
  }

  const Segmentation prev{prev_map, state.features};
  const SpatioTemporalGraph graph = assemble(spatial_block(prev, config), spatial_block(curr, config),
                                             temporal_links(prev_map, curr.map, prev_flow));
  const PropagationOperator op =
      propagation_operator(graph, config.propagation_mode, config.lambda1, config.lambda2);
  if (trace) *trace = {graph, op.smoothing, op.sharpening, curr.map};

  FeatureMatrix features(graph.size(), state.features.cols());
  features << state.features, curr.features;
  Vector indicator(graph.n_prev);
  for (Index i = 0; i < graph.n_prev; ++i) indicator(i) = state.indicator[i];

  const Problem problem = make_problem(graph, features, indicator, op);
  const SolverState solution = solve(problem, config.solver());

  const Vector scores = solution.labels.tail(graph.n_curr);
  const auto selected = select_superpixels(scores, config.mask_threshold);
  Mask mask = rasterize(curr.map, selected, width, height);

  StepDiagnostics diag;
  diag.iterations = solution.iterations;
  diag.final_loss = solution.loss_trace.empty() ? 0.0 : solution.loss_trace.back();
  diag.converged = solution.converged;
  diag.n_prev = static_cast<int>(graph.n_prev);
  diag.n_curr = static_cast<int>(graph.n_curr);

  const auto box = mask_to_box(mask);
  if (!box) {
    // Keep the last good segmentation and widen the search next time.
    TrackState next = state;
    next.frame_index = state.frame_index + 1;
    next.mask = std::move(mask);
    next.region_scale = state.region_scale * config.fallback_expand;
    diag.fallback = true;
    next.diagnostics = diag;
    return next;
  }

  TrackState next;
  next.frame_index = state.frame_index + 1;
  next.mask = std::move(mask);
  next.box = *box;
  next.indicator = selected;
  next.superpixels = curr.map;
  next.features = curr.features;
  next.gray = to_gray(frame);
  next.source_frame = next.frame_index;
  next.region_scale = 1.0;
  next.diagnostics = diag;
  return next;
}

std::vector<FrameOutput> track_frames(const std::vector<RgbImage>& frames,
                                      const Mask& initial_mask, const TrackerConfig& config,
                                      const FlowProvider& flows,
                                      const TraceObserver& observer) {
  std::vector<FrameOutput> out;
  if (frames.empty()) return out;
  TrackState state = init(frames.front(), initial_mask, config);
  out.push_back({state.mask, state.box, state.diagnostics});
  if (observer) {
    StepTrace first;
    first.superpixels = state.superpixels;
    observer(0, first);
  }
  for (std::size_t t = 1; t < frames.size(); ++t) {
    std::optional<FlowField> flow;
    if (flows) flow = flows(state.source_frame, static_cast<int>(t));
    StepTrace trace;
    state = step(state, frames[t], config, flow ? &*flow : nullptr, observer ? &trace : nullptr);
    if (observer) observer(static_cast<int>(t), trace);
    out.push_back({state.mask, state.box, state.diagnostics});
  }
  return out;
}

}  // namespace gcntrack
