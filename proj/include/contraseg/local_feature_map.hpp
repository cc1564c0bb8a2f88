#pragma once

#include <cmath>
#include <vector>

#include "contraseg/common.hpp"

namespace contraseg::losses {

// Per-pixel embedding map of one augmented image: channels x height x width,
// unit L2 norm along the channel axis. Labels, when present, align with the
// spatial grid of the (co-transformed) input.
struct LocalFeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> features;  // (c, h, w) C-order
  std::vector<int> labels;       // empty, or h*w entries
  int image_index = 0;

  LocalFeatureMap() = default;
  LocalFeatureMap(int c, int h, int w, int image)
      : channels(c), height(h), width(w),
        features(static_cast<std::size_t>(c) * h * w, 0.0),
        image_index(image) {}

  bool has_labels() const { return !labels.empty(); }

  std::size_t fidx(int ch, int r, int col) const {
    return (static_cast<std::size_t>(ch) * height + r) * width + col;
  }
  double feat(int ch, int r, int col) const { return features[fidx(ch, r, col)]; }
  double& feat(int ch, int r, int col) { return features[fidx(ch, r, col)]; }

  int label(int r, int col) const {
    return labels[static_cast<std::size_t>(r) * width + col];
  }

  // L2-normalizes every pixel's channel vector in place. Zero vectors map to
  // (1, 0, ..., 0) so downstream dot products stay defined.
  void normalize_pixels() {
    for (int r = 0; r < height; ++r) {
      for (int col = 0; col < width; ++col) {
        double sq = 0.0;
        for (int ch = 0; ch < channels; ++ch) {
          double f = feat(ch, r, col);
          sq += f * f;
        }
        if (sq <= 0.0) {
          feat(0, r, col) = 1.0;
          continue;
        }
        double inv = 1.0 / std::sqrt(sq);
        for (int ch = 0; ch < channels; ++ch) feat(ch, r, col) *= inv;
      }
    }
  }

  double max_pixel_norm_error() const {
    double worst = 0.0;
    for (int r = 0; r < height; ++r) {
      for (int col = 0; col < width; ++col) {
        double sq = 0.0;
        for (int ch = 0; ch < channels; ++ch) {
          double f = feat(ch, r, col);
          sq += f * f;
        }
        worst = std::max(worst, std::fabs(std::sqrt(sq) - 1.0));
      }
    }
    return worst;
  }
};

}  // namespace contraseg::losses
