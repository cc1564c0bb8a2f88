#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "contraseg/volume.hpp"

namespace contraseg::data {

// Volume-level dataset partition plus the labeled subset of the training
// split. Slices never cross splits because assignment happens per volume.
struct DatasetSplits {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::vector<std::string> labeled_train;
  std::vector<std::string> unlabeled_train;
};

// Shuffles volumes with the given seed, cuts train/val/test by the ratios,
// then selects round(label_fraction * |train|) labeled volumes (minimum 1).
DatasetSplits split_and_select(const std::vector<Volume>& corpus,
                               const std::array<double, 3>& ratios,
                               double label_fraction, std::uint64_t seed);

}  // namespace contraseg::data
