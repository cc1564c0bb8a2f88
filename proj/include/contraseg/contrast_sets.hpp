#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contraseg/local_feature_map.hpp"

namespace contraseg::losses {

enum class Strategy {
  supervised_full,
  supervised_stride,
  supervised_block,
  selfsup_grid,
};

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct FeatureRef {
  int image = 0;
  int row = 0;
  int col = 0;
  bool operator==(const FeatureRef&) const = default;
};

// One contrast pool: the candidate features an anchor in this group is
// compared against. Full/stride/selfsup strategies have a single group
// spanning the batch; block division has one group per block region,
// still spanning all images.
struct ContrastGroup {
  std::vector<FeatureRef> pool;
  std::vector<int> pool_label;     // per pool entry; empty for selfsup_grid
  std::vector<int> pool_positive;  // selfsup only: pool index of the paired-image twin
  std::vector<int> anchors;        // indices into pool
  int block_row = 0, block_col = 0;
};

struct ContrastSets {
  Strategy strategy = Strategy::supervised_full;
  int num_images = 0;
  int stride = 1;
  int block_size = 0;
  int grid_points = 0;
  std::vector<ContrastGroup> groups;

  std::size_t num_anchors() const;

  // Materialized per-anchor views. Quadratic in pool size; meant for the
  // brute-force oracle and set-correctness tests, not the training path.
  std::vector<FeatureRef> positives_of(int group, int anchor_pool_index) const;
  std::vector<FeatureRef> negatives_of(int group, int anchor_pool_index) const;
};

// Builds anchor/positive/negative sets over the batch of feature maps.
//
// Supervised modes need labels on every map: anchors are non-background
// positions, positives share the anchor's label across the whole pool,
// negatives carry any other label (background included). The anchor is
// never a member of its own positive set.
//
// selfsup_grid ignores labels: anchors are a fixed symmetric grid
// (grid_points in {9,13}); the single positive is the same position in the
// paired image; negatives are every other grid point in the batch.
// pair_index maps each image to its augmentation twin; when null, images
// are assumed paired (0,1), (2,3), ...
ContrastSets build_contrast_sets(const std::vector<LocalFeatureMap>& maps,
                                 Strategy mode, int stride, int block_size,
                                 int grid_points,
                                 const std::vector<int>* pair_index = nullptr);

// Number of feature dot products the local loss needs for these sets:
// sum over anchors of |P| + |N|. Dot products are counted for every anchor,
// including ones the loss would later drop for having an empty side.
std::uint64_t count_pairwise_interactions(const ContrastSets& sets);

// Grid coordinates used by selfsup_grid on a side x side map.
std::vector<std::pair<int, int>> selfsup_grid_positions(int side,
                                                        int grid_points);

}  // namespace contraseg::losses
