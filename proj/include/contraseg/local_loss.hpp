#pragma once

#include <vector>

#include "contraseg/contrast_sets.hpp"
#include "contraseg/local_feature_map.hpp"

namespace contraseg::losses {

struct LocalLossOptions {
  // Ablation variant: move the log inside the positive sum
  // (one log term per positive instead of one per anchor).
  bool per_positive_log = false;
  bool warn_on_dropped_anchors = true;
};

struct LocalLossStats {
  double loss = 0.0;
  std::size_t anchors_used = 0;
  std::size_t anchors_dropped = 0;  // empty positive or negative side
};

// Pixel-wise contrastive loss over the given sets. Per anchor the positive
// sum sits inside a single log and positives are absent from the
// denominator, so individual terms (and the total) may be negative.
// Anchors whose positive or negative set is empty are dropped. Per image the
// terms are averaged over that image's anchors (per block first, under block
// division), and the batch value is the mean over all maps, anchorless maps
// contributing zero. Returns 0 when no image has any anchor.
double local_contrastive_loss(const std::vector<LocalFeatureMap>& maps,
                              const ContrastSets& sets, double tau,
                              const LocalLossOptions& opts = {});

LocalLossStats local_contrastive_loss_detailed(
    const std::vector<LocalFeatureMap>& maps, const ContrastSets& sets,
    double tau, const LocalLossOptions& opts = {});

// Loss plus analytic gradient with respect to the *pre-normalization*
// features. `raw_maps` need not be unit-norm; pixels are L2-normalized
// internally and the gradient is chained through the normalization.
struct LocalLossGrad {
  double loss = 0.0;
  std::vector<std::vector<double>> grads;  // per map, (c,h,w) C-order
  std::size_t anchors_dropped = 0;
};
LocalLossGrad local_contrastive_loss_grad(
    const std::vector<LocalFeatureMap>& raw_maps, const ContrastSets& sets,
    double tau, const LocalLossOptions& opts = {});

// Verification oracle: direct nested-loop evaluation of the same definition
// in double precision, with per-anchor positive/negative lists materialized
// one by one and plain exp/log arithmetic. Refuses maps larger than
// max_side x max_side to guard against accidental quartic blowups.
double reference_local_loss(const std::vector<LocalFeatureMap>& maps,
                            const ContrastSets& sets, double tau,
                            int max_side = 16);

}  // namespace contraseg::losses
