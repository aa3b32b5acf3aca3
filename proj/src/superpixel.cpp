#include "gcntrack/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "gcntrack/errors.hpp"

namespace gcntrack {

std::vector<int> SuperpixelMap::sizes() const {
  std::vector<int> out(static_cast<std::size_t>(std::max(count, 0)), 0);
  for (auto label : labels.pixels()) {
    if (label >= 0 && label < count) ++out[label];
  }
  return out;
}

void SuperpixelMap::validate() const {
  if (labels.empty()) throw InputError("superpixel map is empty");
  std::vector<char> used(static_cast<std::size_t>(std::max(count, 0)), 0);
  for (auto label : labels.pixels()) {
    if (label < 0 || label >= count) throw InputError("superpixel label out of range");
    used[label] = 1;
  }
  if (std::find(used.begin(), used.end(), 0) != used.end()) {
    throw InputError("superpixel labels are not dense");
  }
}

namespace {

struct Center {
  double l, a, b, x, y;
};

double lab_distance_sq(const Lab& p, const Lab& q) {
  const double dl = p.l - q.l, da = p.a - q.a, db = p.b - q.b;
  return dl * dl + da * da + db * db;
}

double gradient_at(const LabImage& img, int x, int y) {
  const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, img.width() - 1);
  const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, img.height() - 1);
  return lab_distance_sq(img(x1, y), img(x0, y)) + lab_distance_sq(img(x, y1), img(x, y0));
}

// Exactly k seeds on a near-square lattice: `rows` rows, the first k % rows
// of them holding one extra seed.
std::vector<Center> grid_seeds(const LabImage& img, int k) {
  const int w = img.width(), h = img.height();
  int rows = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k) * h / w)));
  rows = std::clamp(rows, 1, std::min(k, h));
  std::vector<Center> seeds;
  seeds.reserve(k);
  for (int r = 0; r < rows; ++r) {
    const int in_row = k / rows + (r < k % rows ? 1 : 0);
    const int y = std::min(h - 1, static_cast<int>((r + 0.5) * h / rows));
    for (int c = 0; c < in_row; ++c) {
      const int x = std::min(w - 1, static_cast<int>((c + 0.5) * w / in_row));
      // Move to the lowest-gradient pixel of the 3x3 neighbourhood.
      int bx = x, by = y;
      double best = gradient_at(img, x, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!img.contains(nx, ny)) continue;
          const double g = gradient_at(img, nx, ny);
          if (g < best) {
            best = g;
            bx = nx;
            by = ny;
          }
        }
      }
      const Lab& p = img(bx, by);
      seeds.push_back({p.l, p.a, p.b, static_cast<double>(bx), static_cast<double>(by)});
    }
  }
  return seeds;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
};

}  // namespace

SuperpixelMap slic_segment(const LabImage& region, int target_k, const SlicParams& params) {
  if (target_k < 1) throw ParameterError("target superpixel count must be >= 1");
  if (region.empty()) throw InputError("empty region");
  if (static_cast<std::size_t>(target_k) > region.size()) {
    throw InputError("region has fewer pixels than the target superpixel count");
  }
  if (!(params.compactness >= 0.0)) throw ParameterError("compactness must be >= 0");
  if (params.iterations < 1) throw ParameterError("SLIC iterations must be >= 1");

  const int w = region.width(), h = region.height();
  const double n_pixels = static_cast<double>(region.size());
  const double step = std::sqrt(n_pixels / target_k);
  const double spatial_weight = params.compactness / step;
  const int radius = static_cast<int>(std::ceil(step));

  std::vector<Center> centers = grid_seeds(region, target_k);
  const int k = static_cast<int>(centers.size());

  LabelImage labels(w, h, -1);
  Image<double> distance(w, h);
  auto dist = [&](const Center& c, int x, int y) {
    const Lab& p = region(x, y);
    const double dl = p.l - c.l, da = p.a - c.a, db = p.b - c.b;
    const double dx = x - c.x, dy = y - c.y;
    return std::sqrt(dl * dl + da * da + db * db) +
           spatial_weight * std::sqrt(dx * dx + dy * dy);
  };

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(distance.pixels().begin(), distance.pixels().end(),
              std::numeric_limits<double>::infinity());
    for (int c = 0; c < k; ++c) {
      const Center& ctr = centers[c];
      const int cx = static_cast<int>(std::lround(ctr.x));
      const int cy = static_cast<int>(std::lround(ctr.y));
      const int x0 = std::max(0, cx - radius), x1 = std::min(w - 1, cx + radius);
      const int y0 = std::max(0, cy - radius), y1 = std::min(h - 1, cy + radius);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = dist(ctr, x, y);
          if (d < distance(x, y)) {
            distance(x, y) = d;
            labels(x, y) = c;
          }
        }
      }
    }
    // Pixels outside every search window go to the nearest center.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (labels(x, y) >= 0 && std::isfinite(distance(x, y))) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = dist(centers[c], x, y);
          if (d < best) {
            best = d;
            labels(x, y) = c;
          }
        }
        distance(x, y) = best;
      }
    }

    std::vector<Center> sums(k, Center{0, 0, 0, 0, 0});
    std::vector<int> counts(k, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int c = labels(x, y);
        const Lab& p = region(x, y);
        sums[c].l += p.l;
        sums[c].a += p.a;
        sums[c].b += p.b;
        sums[c].x += x;
        sums[c].y += y;
        ++counts[c];
      }
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / counts[c];
      centers[c] = {sums[c].l * inv, sums[c].a * inv, sums[c].b * inv, sums[c].x * inv,
                    sums[c].y * inv};
    }
  }

  SuperpixelMap raw;
  raw.labels = std::move(labels);
  raw.count = k;
  const int min_size = std::max(1, static_cast<int>(n_pixels / target_k / 4.0));
  return enforce_connectivity(raw, min_size);
}

SuperpixelMap enforce_connectivity(const SuperpixelMap& map, int min_size) {
  const int w = map.width(), h = map.height();
  if (map.labels.empty()) throw InputError("superpixel map is empty");

  // 4-connected components in raster order.
  LabelImage component(w, h, -1);
  std::vector<int> comp_size;
  std::vector<int> comp_label;
  std::vector<std::pair<int, int>> stack;
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (component(x, y) >= 0) continue;
      const int id = static_cast<int>(comp_size.size());
      const int label = map.labels(x, y);
      int size = 0;
      component(x, y) = id;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        ++size;
        for (int d = 0; d < 4; ++d) {
          const int nx = px + kDx[d], ny = py + kDy[d];
          if (map.labels.contains(nx, ny) && component(nx, ny) < 0 &&
              map.labels(nx, ny) == label) {
            component(nx, ny) = id;
            stack.emplace_back(nx, ny);
          }
        }
      }
      comp_size.push_back(size);
      comp_label.push_back(label);
    }
  }
  const int n_comp = static_cast<int>(comp_size.size());

  // Component adjacency (4-neighbourhood).
  std::vector<std::vector<int>> neighbors(n_comp);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int a = component(x, y);
      if (x + 1 < w && component(x + 1, y) != a) {
        neighbors[a].push_back(component(x + 1, y));
        neighbors[component(x + 1, y)].push_back(a);
      }
      if (y + 1 < h && component(x, y + 1) != a) {
        neighbors[a].push_back(component(x, y + 1));
        neighbors[component(x, y + 1)].push_back(a);
      }
    }
  }
  for (auto& list : neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  // The largest component of every label keeps it (first in raster order on
  // ties); the rest are orphans.
  std::vector<int> keeper;
  {
    std::vector<std::pair<int, int>> best;  // label -> (size, component)
    for (int c = 0; c < n_comp; ++c) {
      const int label = comp_label[c];
      if (label < 0) throw InputError("negative superpixel label");
      if (static_cast<int>(best.size()) <= label) best.resize(label + 1, {-1, -1});
      if (comp_size[c] > best[label].first) best[label] = {comp_size[c], c};
    }
    keeper.assign(n_comp, 0);
    for (const auto& [size, c] : best) {
      if (c >= 0) keeper[c] = 1;
    }
  }
  std::vector<int> orphans;
  for (int c = 0; c < n_comp; ++c) {
    if (!keeper[c] || comp_size[c] < min_size) orphans.push_back(c);
  }
  std::stable_sort(orphans.begin(), orphans.end(),
                   [&](int a, int b) { return comp_size[a] < comp_size[b]; });

  UnionFind groups(n_comp);
  std::vector<int> group_size = comp_size;
  for (int c : orphans) {
    const int root = groups.find(c);
    if (keeper[c] && group_size[root] >= min_size) continue;
    int target = -1;
    for (int nb : neighbors[c]) {
      const int r = groups.find(nb);
      if (r == root) continue;
      if (target < 0 || group_size[r] > group_size[target] ||
          (group_size[r] == group_size[target] && r < target)) {
        target = r;
      }
    }
    if (target < 0) continue;
    groups.parent[root] = target;
    group_size[target] += group_size[root];
  }

  SuperpixelMap out;
  out.origin = map.origin;
  out.labels = LabelImage(w, h);
  std::vector<int> dense(n_comp, -1);
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int root = groups.find(component(x, y));
      if (dense[root] < 0) dense[root] = next++;
      out.labels(x, y) = dense[root];
    }
  }
  out.count = next;
  return out;
}

std::vector<NodePair> adjacency_pairs(const SuperpixelMap& map) {
  std::vector<NodePair> pairs;
  const int w = map.width(), h = map.height();
  auto add = [&](int a, int b) {
    if (a != b) pairs.push_back({std::min(a, b), std::max(a, b)});
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int a = map.labels(x, y);
      if (x + 1 < w) add(a, map.labels(x + 1, y));
      if (y + 1 < h) {
        add(a, map.labels(x, y + 1));
        if (x + 1 < w) add(a, map.labels(x + 1, y + 1));
        if (x > 0) add(a, map.labels(x - 1, y + 1));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

}  // namespace gcntrack
