#pragma once

#include <cstdint>
#include <vector>

#include "contraseg/volume.hpp"

namespace contraseg::data {

// Parametric stand-in for a multi-class, background-dominated segmentation
// corpus: each volume holds randomly placed ellipses, annuli and rectangles,
// one structure class each, with class-specific mean intensities plus
// additive Gaussian noise. Labels delineate the shapes exactly.
struct CorpusSpec {
  int num_volumes = 200;
  int slices_per_volume = 8;
  int resolution = 32;
  int num_foreground_classes = 3;
  double noise_level = 0.25;       // additive Gaussian sigma, intensity units
  double class_presence = 0.9;     // per-volume probability a class appears
  int divisible_by = 0;            // when > 0, resolution must divide by this
};

std::vector<Volume> generate_synthetic_corpus(const CorpusSpec& spec,
                                              std::uint64_t seed);

}  // namespace contraseg::data
