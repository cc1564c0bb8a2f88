#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contraseg/rng.hpp"
#include "contraseg/volume.hpp"

namespace contraseg::data {

// Stochastic augmentation chain. Each transform fires independently with
// `apply_prob`; a magnitude of zero turns the transform into the identity.
// Spatial transforms (crop-and-resize, flips) co-transform the label mask.
struct AugmentPolicy {
  enum class Mode { intensity_only, intensity_and_spatial };
  Mode mode = Mode::intensity_only;

  double apply_prob = 0.5;

  double brightness = 0.2;      // shift, fraction of the slice intensity range
  double contrast = 0.2;        // scale jitter around the slice mean
  double noise_sigma = 0.1;     // Gaussian sigma, fraction of intensity range
  double blur_sigma_min = 0.1;  // Gaussian blur sigma range, pixels
  double blur_sigma_max = 2.0;
  double crop_scale_min = 0.7;  // crop side as a fraction of the full side
  double crop_scale_max = 1.0;
  double flip_prob = 0.5;       // per-axis flip probability (spatial mode)

  static AugmentPolicy identity();  // all magnitudes zero: aug(x) == x
  static AugmentPolicy intensity_defaults();
  static AugmentPolicy spatial_defaults();
};

AugmentPolicy::Mode augment_mode_from_name(const std::string& name);
std::string augment_mode_name(AugmentPolicy::Mode mode);

// One stochastic draw of the transform chain.
Slice2D apply_augmentation(const Slice2D& s, const AugmentPolicy& policy,
                           RandomState& rng);

// Two independent draws on the same source slice (the augmented pair).
std::pair<Slice2D, Slice2D> augment_pair(const Slice2D& s,
                                         const AugmentPolicy& policy,
                                         RandomState& rng);

// The augmented set A: 2b transformed slices with the pairing involution
// j(i); images 2k and 2k+1 descend from source slice k.
struct AugmentedBatch {
  std::vector<Slice2D> images;
  std::vector<int> pair_index;

  void validate() const;
};

AugmentedBatch make_augmented_batch(const std::vector<Slice2D>& sources,
                                    const AugmentPolicy& policy,
                                    RandomState& rng);

}  // namespace contraseg::data
