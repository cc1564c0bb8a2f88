#pragma once

#include <cstdint>
#include <vector>

#include "contraseg/volume.hpp"

namespace contraseg::data {

// Mean / standard deviation over a whole volume; sigma is floored at an
// epsilon so constant volumes normalize to all zeros.
struct VolumeStats {
  double mean = 0.0;
  double sigma = 1.0;
};
VolumeStats volume_intensity_stats(const Volume& v);

std::vector<float> resize_bilinear(const std::vector<float>& src, int sh,
                                   int sw, int dh, int dw);
std::vector<std::int32_t> resize_nearest(const std::vector<std::int32_t>& src,
                                         int sh, int sw, int dh, int dw);

// Extracts slice `idx`, normalizes with whole-volume statistics, resizes the
// image bilinearly and the label mask (when present) with nearest-neighbor.
Slice2D preprocess_slice(const Volume& v, int idx, int target_resolution);

// Same, but with stats precomputed once per volume.
Slice2D preprocess_slice(const Volume& v, int idx, int target_resolution,
                         const VolumeStats& stats);

}  // namespace contraseg::data
