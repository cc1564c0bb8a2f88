#include "contraseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "contraseg/rng.hpp"

namespace contraseg::data {

namespace {

enum class ShapeKind { ellipse, annulus, rectangle };

struct Shape {
  ShapeKind kind;
  int cls;
  double cy, cx;        // center
  double ry, rx;        // radii / half extents
  double inner = 0.0;   // annulus inner fraction
  int z0 = 0, z1 = 0;   // inclusive slice range
  double drift_y = 0.0, drift_x = 0.0;  // per-slice center drift
};

bool inside(const Shape& s, int z, double y, double x) {
  double cy = s.cy + s.drift_y * (z - s.z0);
  double cx = s.cx + s.drift_x * (z - s.z0);
  double dy = (y - cy) / s.ry;
  double dx = (x - cx) / s.rx;
  switch (s.kind) {
    case ShapeKind::ellipse:
      return dy * dy + dx * dx <= 1.0;
    case ShapeKind::annulus: {
      double r2 = dy * dy + dx * dx;
      return r2 <= 1.0 && r2 >= s.inner * s.inner;
    }
    case ShapeKind::rectangle:
      return std::fabs(dy) <= 1.0 && std::fabs(dx) <= 1.0;
  }
  return false;
}

Shape draw_shape(RandomState& rng, int cls, int res, int depth) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Shape s;
  s.cls = cls;
  int kind_pick = static_cast<int>(rng() % 3);
  s.kind = kind_pick == 0   ? ShapeKind::ellipse
           : kind_pick == 1 ? ShapeKind::annulus
                            : ShapeKind::rectangle;
  double min_r = std::max(2.0, res / 10.0);
  double max_r = res / 4.0;
  s.ry = min_r + unif(rng) * (max_r - min_r);
  s.rx = min_r + unif(rng) * (max_r - min_r);
  s.cy = s.ry + unif(rng) * (res - 2 * s.ry);
  s.cx = s.rx + unif(rng) * (res - 2 * s.rx);
  s.inner = 0.4 + 0.2 * unif(rng);
  // each structure spans a contiguous majority of the depth axis
  int span = std::max(1, static_cast<int>(std::lround(depth * (0.6 + 0.4 * unif(rng)))));
  span = std::min(span, depth);
  s.z0 = static_cast<int>(rng() % static_cast<std::uint64_t>(depth - span + 1));
  s.z1 = s.z0 + span - 1;
  double max_drift = res / 64.0;
  s.drift_y = (unif(rng) * 2.0 - 1.0) * max_drift;
  s.drift_x = (unif(rng) * 2.0 - 1.0) * max_drift;
  return s;
}

// Distinct but overlapping intensity bands; noise makes plain thresholding
// unreliable, which is the regime the pretraining is meant to help in.
double class_mean(int cls) { return 0.35 + 0.18 * (cls - 1); }
constexpr double kBackgroundMean = 0.12;

void rasterize(Volume& v, const std::vector<Shape>& shapes) {
  for (const auto& s : shapes) {
    for (int z = s.z0; z <= s.z1; ++z) {
      for (int y = 0; y < v.height; ++y) {
        for (int x = 0; x < v.width; ++x) {
          if (inside(s, z, y, x)) {
            auto i = v.vidx(z, y, x);
            v.labels[i] = s.cls;
            v.voxels[i] = static_cast<float>(class_mean(s.cls));
          }
        }
      }
    }
  }
}

}  // namespace

std::vector<Volume> generate_synthetic_corpus(const CorpusSpec& spec,
                                              std::uint64_t seed) {
  check(spec.num_volumes >= 1, "corpus: num_volumes must be >= 1");
  check(spec.slices_per_volume >= 1, "corpus: slices_per_volume must be >= 1");
  check(spec.resolution >= 8, "corpus: resolution must be >= 8");
  check(spec.num_foreground_classes >= 1 && spec.num_foreground_classes <= 7,
        "corpus: num_foreground_classes must lie in [1, 7]");
  check(spec.noise_level >= 0.0, "corpus: noise_level must be >= 0");
  if (spec.divisible_by > 0) {
    check(spec.resolution % spec.divisible_by == 0,
          "corpus: resolution not divisible by the configured block size");
  }

  const int res = spec.resolution;
  const int depth = spec.slices_per_volume;
  std::vector<Volume> corpus(spec.num_volumes);
  std::vector<std::vector<Shape>> all_shapes(spec.num_volumes);

  for (int vi = 0; vi < spec.num_volumes; ++vi) {
    RandomState rng(make_rng(derive_seed(seed, "synthetic-volume", vi)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto& shapes = all_shapes[vi];
    for (int cls = 1; cls <= spec.num_foreground_classes; ++cls) {
      if (unif(rng) < spec.class_presence)
        shapes.push_back(draw_shape(rng, cls, res, depth));
    }
  }

  // presence fix-up: guarantee each class appears in at least 80% of volumes
  const int min_present = static_cast<int>(
      std::ceil(0.8 * static_cast<double>(spec.num_volumes)));
  for (int cls = 1; cls <= spec.num_foreground_classes; ++cls) {
    int present = 0;
    for (const auto& shapes : all_shapes)
      present += std::any_of(shapes.begin(), shapes.end(),
                             [&](const Shape& s) { return s.cls == cls; });
    for (int vi = 0; vi < spec.num_volumes && present < min_present; ++vi) {
      auto& shapes = all_shapes[vi];
      if (std::any_of(shapes.begin(), shapes.end(),
                      [&](const Shape& s) { return s.cls == cls; }))
        continue;
      RandomState rng(make_rng(derive_seed(seed, "synthetic-fixup",
                                           static_cast<std::uint64_t>(vi) * 16 + cls)));
      shapes.push_back(draw_shape(rng, cls, res, depth));
      ++present;
    }
  }

  for (int vi = 0; vi < spec.num_volumes; ++vi) {
    Volume& v = corpus[vi];
    v.id = "vol" + std::to_string(vi);
    v.depth = depth;
    v.height = res;
    v.width = res;
    v.voxels.assign(v.voxel_count(), static_cast<float>(kBackgroundMean));
    v.labels.assign(v.voxel_count(), 0);
    // stable z-order: lower class ids first, higher ids overwrite
    auto shapes = all_shapes[vi];
    std::stable_sort(shapes.begin(), shapes.end(),
                     [](const Shape& a, const Shape& b) { return a.cls < b.cls; });
    rasterize(v, shapes);
    if (spec.noise_level > 0.0) {
      RandomState noise_rng(make_rng(derive_seed(seed, "synthetic-noise", vi)));
      std::normal_distribution<double> gauss(0.0, spec.noise_level);
      for (auto& vox : v.voxels) vox += static_cast<float>(gauss(noise_rng));
    }
    v.validate();
  }
  return corpus;
}

}  // namespace contraseg::data
