#include "contraseg/contrast_sets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace contraseg::losses {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::supervised_full: return "supervised_full";
    case Strategy::supervised_stride: return "supervised_stride";
    case Strategy::supervised_block: return "supervised_block";
    case Strategy::selfsup_grid: return "selfsup_grid";
  }
  return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "supervised_full") return Strategy::supervised_full;
  if (name == "supervised_stride") return Strategy::supervised_stride;
  if (name == "supervised_block") return Strategy::supervised_block;
  if (name == "selfsup_grid") return Strategy::selfsup_grid;
  throw std::invalid_argument("unknown contrast strategy: " + name);
}

std::size_t ContrastSets::num_anchors() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.anchors.size();
  return n;
}

std::vector<FeatureRef> ContrastSets::positives_of(int group,
                                                   int anchor_pool_index) const {
  const auto& g = groups.at(group);
  std::vector<FeatureRef> out;
  if (strategy == Strategy::selfsup_grid) {
    int p = g.pool_positive.at(anchor_pool_index);
    if (p >= 0) out.push_back(g.pool[p]);
    return out;
  }
  int lab = g.pool_label.at(anchor_pool_index);
  for (std::size_t i = 0; i < g.pool.size(); ++i) {
    if (static_cast<int>(i) == anchor_pool_index) continue;
    if (g.pool_label[i] == lab) out.push_back(g.pool[i]);
  }
  return out;
}

std::vector<FeatureRef> ContrastSets::negatives_of(int group,
                                                   int anchor_pool_index) const {
  const auto& g = groups.at(group);
  std::vector<FeatureRef> out;
  if (strategy == Strategy::selfsup_grid) {
    int p = g.pool_positive.at(anchor_pool_index);
    for (std::size_t i = 0; i < g.pool.size(); ++i) {
      if (static_cast<int>(i) == anchor_pool_index) continue;
      if (static_cast<int>(i) == p) continue;
      out.push_back(g.pool[i]);
    }
    return out;
  }
  int lab = g.pool_label.at(anchor_pool_index);
  for (std::size_t i = 0; i < g.pool.size(); ++i) {
    if (g.pool_label[i] != lab) out.push_back(g.pool[i]);
  }
  return out;
}

namespace {

void validate_maps(const std::vector<LocalFeatureMap>& maps, Strategy mode) {
  check(!maps.empty(), "build_contrast_sets: empty map batch");
  int h = maps[0].height, w = maps[0].width, c = maps[0].channels;
  for (const auto& m : maps) {
    check(m.height == h && m.width == w && m.channels == c,
          "build_contrast_sets: maps differ in shape");
    if (mode != Strategy::selfsup_grid) {
      check(m.has_labels(), "build_contrast_sets: supervised mode on unlabeled map");
      check(static_cast<int>(m.labels.size()) == h * w,
            "build_contrast_sets: label shape mismatch");
    }
  }
}

}  // namespace

std::vector<std::pair<int, int>> selfsup_grid_positions(int side,
                                                        int grid_points) {
  check(grid_points == 9 || grid_points == 13,
        "selfsup_grid: grid_points must be 9 or 13");
  check(side >= 3, "selfsup_grid: map side too small");
  double margin = side / 6.0;
  double lo = margin, hi = side - 1 - margin;
  auto rnd = [](double x) { return static_cast<int>(std::lround(x)); };
  int p0 = rnd(lo), p1 = rnd((lo + hi) / 2.0), p2 = rnd(hi);
  std::vector<int> axis = {p0, p1, p2};
  std::vector<std::pair<int, int>> pts;
  for (int r : axis)
    for (int col : axis) pts.emplace_back(r, col);
  if (grid_points == 13) {
    // four extra points at the centers of the inner grid cells
    int q0 = rnd((p0 + p1) / 2.0), q1 = rnd((p1 + p2) / 2.0);
    pts.emplace_back(q0, q0);
    pts.emplace_back(q0, q1);
    pts.emplace_back(q1, q0);
    pts.emplace_back(q1, q1);
  }
  return pts;
}

ContrastSets build_contrast_sets(const std::vector<LocalFeatureMap>& maps,
                                 Strategy mode, int stride, int block_size,
                                 int grid_points,
                                 const std::vector<int>* pair_index) {
  validate_maps(maps, mode);
  const int num = static_cast<int>(maps.size());
  const int h = maps[0].height, w = maps[0].width;

  ContrastSets sets;
  sets.strategy = mode;
  sets.num_images = num;
  sets.stride = stride;
  sets.block_size = block_size;
  sets.grid_points = grid_points;

  switch (mode) {
    case Strategy::supervised_full:
    case Strategy::supervised_stride: {
      int s = (mode == Strategy::supervised_full) ? 1 : stride;
      check(s >= 1, "build_contrast_sets: stride must be >= 1");
      ContrastGroup g;
      for (int i = 0; i < num; ++i) {
        for (int r = 0; r < h; r += s) {
          for (int col = 0; col < w; col += s) {
            g.pool.push_back({i, r, col});
            g.pool_label.push_back(maps[i].label(r, col));
          }
        }
      }
      for (std::size_t p = 0; p < g.pool.size(); ++p) {
        if (g.pool_label[p] > 0) g.anchors.push_back(static_cast<int>(p));
      }
      sets.groups.push_back(std::move(g));
      break;
    }
    case Strategy::supervised_block: {
      check(block_size >= 1, "build_contrast_sets: block_size must be >= 1");
      check(h % block_size == 0 && w % block_size == 0,
            "build_contrast_sets: block_size does not divide map side");
      for (int br = 0; br < h / block_size; ++br) {
        for (int bc = 0; bc < w / block_size; ++bc) {
          ContrastGroup g;
          g.block_row = br;
          g.block_col = bc;
          for (int i = 0; i < num; ++i) {
            for (int r = br * block_size; r < (br + 1) * block_size; ++r) {
              for (int col = bc * block_size; col < (bc + 1) * block_size; ++col) {
                g.pool.push_back({i, r, col});
                g.pool_label.push_back(maps[i].label(r, col));
              }
            }
          }
          bool any_fg = false;
          for (std::size_t p = 0; p < g.pool.size(); ++p) {
            if (g.pool_label[p] > 0) {
              g.anchors.push_back(static_cast<int>(p));
              any_fg = true;
            }
          }
          // all-background block: contributes no anchors and no loss
          if (any_fg) sets.groups.push_back(std::move(g));
        }
      }
      break;
    }
    case Strategy::selfsup_grid: {
      check(num % 2 == 0, "selfsup_grid: batch must pair up (even size)");
      check(h == w, "selfsup_grid: expects square maps");
      std::vector<int> pairing;
      if (pair_index) {
        pairing = *pair_index;
        check(static_cast<int>(pairing.size()) == num,
              "selfsup_grid: pair_index size mismatch");
        for (int i = 0; i < num; ++i) {
          check(pairing[i] >= 0 && pairing[i] < num && pairing[i] != i &&
                    pairing[pairing[i]] == i,
                "selfsup_grid: pair_index is not a fixed-point-free involution");
        }
      } else {
        pairing.resize(num);
        for (int i = 0; i < num; i += 2) {
          pairing[i] = i + 1;
          pairing[i + 1] = i;
        }
      }
      auto pts = selfsup_grid_positions(h, grid_points);
      const int per_image = static_cast<int>(pts.size());
      ContrastGroup g;
      for (int i = 0; i < num; ++i) {
        for (const auto& [r, col] : pts) g.pool.push_back({i, r, col});
      }
      g.pool_positive.resize(g.pool.size());
      for (int i = 0; i < num; ++i) {
        for (int k = 0; k < per_image; ++k) {
          g.pool_positive[i * per_image + k] = pairing[i] * per_image + k;
        }
      }
      for (std::size_t p = 0; p < g.pool.size(); ++p)
        g.anchors.push_back(static_cast<int>(p));
      sets.groups.push_back(std::move(g));
      break;
    }
  }
  return sets;
}

std::uint64_t count_pairwise_interactions(const ContrastSets& sets) {
  std::uint64_t total = 0;
  for (const auto& g : sets.groups) {
    if (sets.strategy == Strategy::selfsup_grid) {
      // |P| = 1, |N| = pool - positive - anchor
      total += g.anchors.size() * (1 + g.pool.size() - 2);
      continue;
    }
    std::map<int, std::uint64_t> label_count;
    for (int lab : g.pool_label) ++label_count[lab];
    for (int a : g.anchors) {
      int lab = g.pool_label[a];
      std::uint64_t same = label_count[lab];
      total += (same - 1) + (g.pool.size() - same);
    }
  }
  return total;
}

}  // namespace contraseg::losses
