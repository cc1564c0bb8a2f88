#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "contraseg/common.hpp"

namespace contraseg::data {

// Raw 3-D intensity volume (depth x height x width) with optional per-voxel
// class labels, 0 = background.
struct Volume {
  std::string id;
  int depth = 0, height = 0, width = 0;
  std::vector<float> voxels;
  std::vector<std::int32_t> labels;  // empty when unlabeled

  bool has_labels() const { return !labels.empty(); }
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(depth) * height * width;
  }
  std::size_t vidx(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * height + y) * width + x;
  }
  float voxel(int z, int y, int x) const { return voxels[vidx(z, y, x)]; }
  std::int32_t label(int z, int y, int x) const { return labels[vidx(z, y, x)]; }

  void validate() const;
};

// One extracted 2-D slice, possibly preprocessed.
struct Slice2D {
  int height = 0, width = 0;
  std::vector<float> pixels;
  std::vector<std::int32_t> labels;  // empty when unlabeled
  std::string source_volume;
  int slice_index = 0;

  bool has_labels() const { return !labels.empty(); }
  std::size_t pidx(int y, int x) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float pixel(int y, int x) const { return pixels[pidx(y, x)]; }
  std::int32_t label(int y, int x) const { return labels[pidx(y, x)]; }
};

// Array-directory interchange format: one directory per volume holding
//   image.raw   little-endian float32, C-order (depth, height, width)
//   labels.raw  little-endian int32, same shape (only when labeled)
//   meta.json   shape, dtypes, id
// Round-trips bit-exactly.
void write_volume_dir(const Volume& v, const std::filesystem::path& dir);
Volume read_volume_dir(const std::filesystem::path& dir);

// Writes every volume under root/<volume id>/ plus a manifest.json listing
// the directories in order; reads it back in manifest order.
void write_corpus(const std::vector<Volume>& corpus,
                  const std::filesystem::path& root);
std::vector<Volume> read_corpus(const std::filesystem::path& root);

}  // namespace contraseg::data
