#include "doctest.h"

#include <random>
#include <sstream>

#include "gcntrack/errors.hpp"
#include "gcntrack/eval.hpp"

using namespace gcntrack;

namespace {

Mask rect_mask(int w, int h, Rect r) {
  Mask m(w, h, 0);
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) m(x, y) = 1;
  return m;
}

SequenceResult boxes_only(const std::vector<std::pair<Rect, Rect>>& pairs) {
  SequenceResult r;
  r.name = "fixture";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    FrameRecord f;
    f.index = static_cast<int>(i);
    f.predicted_box = pairs[i].first;
    f.truth_box = pairs[i].second;
    r.frames.push_back(f);
  }
  return r;
}

}  // namespace

TEST_CASE("mask_iou") {
  const Mask a = rect_mask(10, 10, {0, 0, 4, 4});
  CHECK(mask_iou(a, a) == 1.0);
  CHECK(mask_iou(a, rect_mask(10, 10, {5, 5, 4, 4})) == 0.0);
  CHECK(mask_iou(a, rect_mask(10, 10, {2, 0, 4, 4})) == doctest::Approx(1.0 / 3.0));
  CHECK(mask_iou(Mask(5, 5, 0), Mask(5, 5, 0)) == 1.0);
  CHECK_THROWS_AS(mask_iou(Mask(5, 5), Mask(4, 5)), InputError);
}

TEST_CASE("box_iou and center_distance") {
  CHECK(box_iou({3, 4, 5, 6}, {3, 4, 5, 6}) == 1.0);
  CHECK(box_iou({0, 0, 2, 2}, {5, 5, 2, 2}) == 0.0);
  CHECK(box_iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(box_iou({0, 0, 2, 2}, {2, 0, 2, 2}) == 0.0);
  CHECK(center_distance({0, 0, 10, 10}, {3, 4, 10, 10}) == doctest::Approx(5.0));
}

TEST_CASE("metric properties on random data") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto box = [&] {
      return Rect{static_cast<int>(rng() % 40), static_cast<int>(rng() % 40),
                  1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 20)};
    };
    const Rect a = box(), b = box();
    const double iou = box_iou(a, b);
    CHECK(iou == box_iou(b, a));
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    const Mask ma = rect_mask(64, 64, a), mb = rect_mask(64, 64, b);
    CHECK(mask_iou(ma, mb) == doctest::Approx(iou));  // masks of boxes agree
    CHECK(mask_iou(ma, mb) == mask_iou(mb, ma));

    std::vector<std::pair<Rect, Rect>> frames;
    for (int i = 0; i < 30; ++i) frames.emplace_back(box(), box());
    const auto result = boxes_only(frames);
    const auto thresholds = distance_thresholds();
    const auto precision = precision_curve(result, thresholds);
    for (std::size_t i = 1; i < precision.size(); ++i) CHECK(precision[i] >= precision[i - 1]);
    const auto success = success_curve(result, OverlapKind::box);
    for (std::size_t i = 1; i < success.rates.size(); ++i) CHECK(success.rates[i] <= success.rates[i - 1]);
  }
}

TEST_CASE("precision fixtures") {
  const std::vector<double> taus{0, 5, 20, 30, 50};
  SUBCASE("perfect boxes") {
    const auto r = boxes_only({{{1, 1, 5, 5}, {1, 1, 5, 5}}, {{7, 2, 3, 9}, {7, 2, 3, 9}}});
    for (double p : precision_curve(r, taus)) CHECK(p == 1.0);
  }
  SUBCASE("offset by 25 pixels") {
    const auto r = boxes_only({{{25, 0, 10, 10}, {0, 0, 10, 10}}, {{0, 30, 8, 8}, {0, 5, 8, 8}}});
    const auto p = precision_curve(r, taus);
    CHECK(p[2] == 0.0);
    CHECK(p[3] == 1.0);
  }
  SUBCASE("missing prediction fails at every threshold") {
    auto r = boxes_only({{{0, 0, 4, 4}, {0, 0, 4, 4}}});
    FrameRecord missing;
    missing.index = 1;
    missing.truth_box = Rect{0, 0, 4, 4};
    r.frames.push_back(missing);
    for (double p : precision_curve(r, taus)) CHECK(p == 0.5);
    const auto scores = score_frames(r);
    CHECK(std::isinf(*scores[1].center_distance));
    CHECK(*scores[1].box_iou == 0.0);
  }
}

TEST_CASE("success curve fixtures") {
  const std::vector<double> ones(7, 1.0);
  const auto c1 = success_curve(ones);
  REQUIRE(c1.rates.size() == 21);
  CHECK(c1.rates.back() == 0.0);
  CHECK(c1.rates.front() == 1.0);
  CHECK(c1.auc == doctest::Approx(20.0 / 21.0).epsilon(1e-15));

  const std::vector<double> zeros(5, 0.0);
  CHECK(success_curve(zeros).auc == 0.0);

  const std::vector<double> half{0.5};
  const auto ch = success_curve(half);
  CHECK(ch.rates[9] == 1.0);    // 0.45
  CHECK(ch.rates[10] == 0.0);   // 0.5, strict
  CHECK(ch.auc == doctest::Approx(10.0 / 21.0));
}

TEST_CASE("score_frames, summarize and reports") {
  SequenceResult r;
  r.name = "seq";
  const Mask truth = rect_mask(20, 20, {2, 2, 6, 6});
  FrameRecord f0;
  f0.index = 0;
  f0.predicted_mask = truth;
  f0.predicted_box = Rect{2, 2, 6, 6};
  f0.truth_mask = truth;
  r.frames.push_back(f0);
  FrameRecord f1;
  f1.index = 1;
  f1.predicted_mask = Mask(20, 20, 0);
  f1.truth_mask = truth;
  r.frames.push_back(f1);
  FrameRecord f2;  // no ground truth: not scored
  f2.index = 2;
  f2.predicted_box = Rect{0, 0, 3, 3};
  r.frames.push_back(f2);

  const auto scores = score_frames(r);
  REQUIRE(scores.size() == 3);
  CHECK(*scores[0].mask_iou == 1.0);
  CHECK(*scores[0].box_iou == 1.0);  // truth box derived from the mask
  CHECK(*scores[1].mask_iou == 0.0);
  CHECK(*scores[1].box_iou == 0.0);
  CHECK_FALSE(scores[2].mask_iou.has_value());
  CHECK_FALSE(scores[2].box_iou.has_value());

  const Summary s = summarize(r);
  CHECK(s.name == "seq");
  CHECK(s.mean_mask_iou == 0.5);
  CHECK(s.mean_box_iou == 0.5);
  CHECK(s.precision_at_20 == 0.5);
  CHECK(s.precision.size() == 51);

  const auto j = to_json(s);
  CHECK(j["mean_mask_iou"] == 0.5);
  CHECK(j["mask_success"].size() == 21);
  CHECK(j.contains("box_success_auc"));

  std::ostringstream frames_csv;
  write_frame_csv(frames_csv, scores);
  CHECK(frames_csv.str().rfind("frame,mask_iou,box_iou,center_dist\n0,1.000000,1.000000,0.000000\n", 0) == 0);
  CHECK(frames_csv.str().find("1,0.000000,0.000000,inf\n") != std::string::npos);
  CHECK(frames_csv.str().find("2,,,\n") != std::string::npos);

  std::ostringstream curves;
  write_curve_csv(curves, s);
  CHECK(curves.str().rfind("kind,threshold,rate\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : curves.str()) lines += c == '\n';
  CHECK(lines == 1 + 21 + 21 + 51);

  // Pooling two copies leaves the means unchanged.
  const SequenceResult both[2] = {r, r};
  const Summary pooled = summarize(both, "all");
  CHECK(pooled.frames == 6);
  CHECK(pooled.mean_mask_iou == 0.5);
}
