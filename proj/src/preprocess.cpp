#include "contraseg/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace contraseg::data {

namespace {
constexpr double kSigmaEpsilon = 1e-8;
}

VolumeStats volume_intensity_stats(const Volume& v) {
  double sum = 0.0, sq = 0.0;
  for (float x : v.voxels) {
    sum += x;
    sq += static_cast<double>(x) * x;
  }
  const double n = static_cast<double>(v.voxel_count());
  VolumeStats s;
  s.mean = sum / n;
  double var = std::max(0.0, sq / n - s.mean * s.mean);
  s.sigma = std::max(std::sqrt(var), kSigmaEpsilon);
  return s;
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int sh,
                                   int sw, int dh, int dw) {
  if (sh == dh && sw == dw) return src;
  std::vector<float> dst(static_cast<std::size_t>(dh) * dw);
  const double sy = static_cast<double>(sh) / dh;
  const double sx = static_cast<double>(sw) / dw;
  for (int y = 0; y < dh; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, sh - 1);
    int y1c = std::clamp(y0 + 1, 0, sh - 1);
    for (int x = 0; x < dw; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, sw - 1);
      int x1c = std::clamp(x0 + 1, 0, sw - 1);
      double top = src[static_cast<std::size_t>(y0c) * sw + x0c] * (1 - wx) +
                   src[static_cast<std::size_t>(y0c) * sw + x1c] * wx;
      double bot = src[static_cast<std::size_t>(y1c) * sw + x0c] * (1 - wx) +
                   src[static_cast<std::size_t>(y1c) * sw + x1c] * wx;
      dst[static_cast<std::size_t>(y) * dw + x] =
          static_cast<float>(top * (1 - wy) + bot * wy);
    }
  }
  return dst;
}

std::vector<std::int32_t> resize_nearest(const std::vector<std::int32_t>& src,
                                         int sh, int sw, int dh, int dw) {
  if (sh == dh && sw == dw) return src;
  std::vector<std::int32_t> dst(static_cast<std::size_t>(dh) * dw);
  const double sy = static_cast<double>(sh) / dh;
  const double sx = static_cast<double>(sw) / dw;
  for (int y = 0; y < dh; ++y) {
    int ys = std::clamp(static_cast<int>(std::floor((y + 0.5) * sy)), 0, sh - 1);
    for (int x = 0; x < dw; ++x) {
      int xs = std::clamp(static_cast<int>(std::floor((x + 0.5) * sx)), 0, sw - 1);
      dst[static_cast<std::size_t>(y) * dw + x] =
          src[static_cast<std::size_t>(ys) * sw + xs];
    }
  }
  return dst;
}

Slice2D preprocess_slice(const Volume& v, int idx, int target_resolution,
                         const VolumeStats& stats) {
  check(idx >= 0 && idx < v.depth, "preprocess_slice: slice index out of range");
  check(target_resolution >= 1, "preprocess_slice: bad target resolution");

  std::vector<float> plane(static_cast<std::size_t>(v.height) * v.width);
  const float* src = v.voxels.data() + v.vidx(idx, 0, 0);
  const double inv_sigma = 1.0 / stats.sigma;
  for (std::size_t i = 0; i < plane.size(); ++i)
    plane[i] = static_cast<float>((src[i] - stats.mean) * inv_sigma);

  Slice2D s;
  s.height = s.width = target_resolution;
  s.pixels = resize_bilinear(plane, v.height, v.width, target_resolution,
                             target_resolution);
  if (v.has_labels()) {
    std::vector<std::int32_t> lab(plane.size());
    const std::int32_t* lsrc = v.labels.data() + v.vidx(idx, 0, 0);
    std::copy(lsrc, lsrc + lab.size(), lab.begin());
    s.labels = resize_nearest(lab, v.height, v.width, target_resolution,
                              target_resolution);
  }
  s.source_volume = v.id;
  s.slice_index = idx;
  return s;
}

Slice2D preprocess_slice(const Volume& v, int idx, int target_resolution) {
  return preprocess_slice(v, idx, target_resolution,
                          volume_intensity_stats(v));
}

}  // namespace contraseg::data
