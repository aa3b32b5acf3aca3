#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "gcntrack/errors.hpp"
#include "gcntrack/flow.hpp"
#include "test_util.hpp"

using namespace gcntrack;

namespace {

double texture(double x, double y) {
  return 128.0 + 40.0 * std::sin(0.31 * x + 0.13 * y) + 30.0 * std::cos(0.17 * x - 0.29 * y) +
         20.0 * std::sin(0.05 * x * 0.7 + 0.41 * y);
}

GrayImage shifted_texture(int w, int h, double dx, double dy) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<float>(texture(x - dx, y - dy));
  return img;
}

SuperpixelMap grid_map(int w, int h, int cell, Point origin = {0, 0}) {
  SuperpixelMap map;
  map.labels = LabelImage(w, h);
  const int cols = (w + cell - 1) / cell;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) map.labels(x, y) = (y / cell) * cols + x / cell;
  map.count = cols * ((h + cell - 1) / cell);
  map.origin = origin;
  return map;
}

Matrix brute_links(const SuperpixelMap& prev, const SuperpixelMap& curr, const FlowField& flow) {
  Matrix out = Matrix::Zero(prev.count, curr.count);
  for (int i = 0; i < prev.count; ++i) {
    int size = 0;
    for (int y = 0; y < prev.height(); ++y) {
      for (int x = 0; x < prev.width(); ++x) {
        if (prev.labels(x, y) != i) continue;
        ++size;
        const long tx = std::lround(std::floor(prev.origin.x + x + flow.u(x, y) + 0.5));
        const long ty = std::lround(std::floor(prev.origin.y + y + flow.v(x, y) + 0.5));
        for (int cy = 0; cy < curr.height(); ++cy)
          for (int cx = 0; cx < curr.width(); ++cx)
            if (curr.origin.x + cx == tx && curr.origin.y + cy == ty) out(i, curr.labels(cx, cy)) += 1;
      }
    }
    if (size > 0) out.row(i) /= size;
  }
  return out;
}

}  // namespace

TEST_CASE("estimate_flow") {
  SUBCASE("identical frames give zero flow") {
    const GrayImage a = shifted_texture(40, 32, 0, 0);
    const FlowField f = estimate_flow(a, a);
    for (float u : f.u.pixels()) CHECK(std::abs(u) < 1e-4);
    for (float v : f.v.pixels()) CHECK(std::abs(v) < 1e-4);
  }
  SUBCASE("constant frames give zero flow") {
    const GrayImage a(30, 30, 90.0f);
    const GrayImage b(30, 30, 90.0f);
    const FlowField f = estimate_flow(a, b);
    for (float u : f.u.pixels()) CHECK(u == 0.0f);
  }
  SUBCASE("one-pixel horizontal shift") {
    const GrayImage a = shifted_texture(64, 48, 0, 0);
    const GrayImage b = shifted_texture(64, 48, 1, 0);
    const FlowField f = estimate_flow(a, b);
    double su = 0, sv = 0;
    for (float u : f.u.pixels()) su += u;
    for (float v : f.v.pixels()) sv += v;
    const double n = static_cast<double>(f.u.size());
    CHECK(su / n >= 0.5);
    CHECK(su / n <= 1.5);
    CHECK(std::abs(sv / n) <= 0.5);
  }
  SUBCASE("diagonal shift, single level") {
    FlowParams p;
    p.levels = 1;
    const FlowField f = estimate_flow(shifted_texture(48, 48, 0, 0), shifted_texture(48, 48, 0.5, 0.5), p);
    double su = 0, sv = 0;
    for (int y = 8; y < 40; ++y)
      for (int x = 8; x < 40; ++x) {
        su += f.u(x, y);
        sv += f.v(x, y);
      }
    CHECK(su / 1024 == doctest::Approx(0.5).epsilon(0.3));
    CHECK(sv / 1024 == doctest::Approx(0.5).epsilon(0.3));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(estimate_flow(GrayImage(4, 4), GrayImage(5, 4)), InputError);
  }
}

TEST_CASE(".flo files") {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  FlowField f(7, 5);
  for (auto& u : f.u.pixels()) u = normal(rng);
  for (auto& v : f.v.pixels()) v = normal(rng);

  std::stringstream buf;
  write_flo(buf, f);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 12 + 7 * 5 * 8);
  // Header bytes, little-endian.
  CHECK(bytes.substr(0, 4) == std::string("PIEH"));
  CHECK(static_cast<unsigned char>(bytes[4]) == 7);
  CHECK(static_cast<unsigned char>(bytes[8]) == 5);
  // First payload value is u(0, 0), then v(0, 0).
  float first = 0, second = 0;
  std::memcpy(&first, bytes.data() + 12, 4);
  std::memcpy(&second, bytes.data() + 16, 4);
  CHECK(first == f.u(0, 0));
  CHECK(second == f.v(0, 0));

  std::stringstream in(bytes);
  CHECK(read_flo(in) == f);

  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream bad_in(bad);
  CHECK_THROWS_AS(read_flo(bad_in), FormatError);

  std::stringstream short_in(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_flo(short_in), FormatError);

  std::stringstream header_only(bytes.substr(0, 6));
  CHECK_THROWS_AS(read_flo(header_only), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "gcntrack_test_roundtrip.flo";
  write_flo(path, f);
  CHECK(read_flo(path) == f);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_flo(path), InputError);
}

TEST_CASE("temporal_links") {
  SUBCASE("zero flow between identical maps is the identity") {
    const auto map = grid_map(12, 9, 3);
    const FlowField zero(12, 9);
    const Matrix b = temporal_links(map, map, zero);
    CHECK(b.isApprox(Matrix::Identity(map.count, map.count)));
  }
  SUBCASE("flow leaving the region gives no links") {
    const auto map = grid_map(10, 10, 5);
    FlowField away(10, 10);
    for (auto& u : away.u.pixels()) u = 100.0f;
    CHECK(temporal_links(map, map, away).isZero());
  }
  SUBCASE("integer shift of the whole scene") {
    // Moving both the grid and the flow's target by (dx, dy) keeps the identity.
    const auto prev = grid_map(12, 12, 4, {5, 7});
    const auto curr = grid_map(12, 12, 4, {8, 5});
    FlowField f(12, 12);
    for (auto& u : f.u.pixels()) u = 3.0f;
    for (auto& v : f.v.pixels()) v = -2.0f;
    CHECK(temporal_links(prev, curr, f).isApprox(Matrix::Identity(9, 9)));
  }
  SUBCASE("random flows match brute force") {
    std::mt19937_64 rng(77);
    std::normal_distribution<float> normal(0.0f, 2.5f);
    for (int trial = 0; trial < 10; ++trial) {
      const LabImage a = testing::random_lab_image(rng, 16, 13);
      const LabImage b = testing::random_lab_image(rng, 15, 14);
      auto prev = slic_segment(a, 9);
      auto curr = slic_segment(b, 11);
      prev.origin = {static_cast<int>(rng() % 5), static_cast<int>(rng() % 5)};
      curr.origin = {static_cast<int>(rng() % 5), static_cast<int>(rng() % 5)};
      FlowField f(16, 13);
      for (auto& u : f.u.pixels()) u = normal(rng);
      for (auto& v : f.v.pixels()) v = normal(rng);
      const Matrix links = temporal_links(prev, curr, f);
      CHECK((links - brute_links(prev, curr, f)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(links.minCoeff() >= 0.0);
      CHECK(links.rowwise().sum().maxCoeff() <= 1.0 + 1e-12);
    }
  }
  SUBCASE("shape mismatch") {
    const auto map = grid_map(6, 6, 3);
    CHECK_THROWS_AS(temporal_links(map, map, FlowField(5, 6)), InputError);
  }
}
