#pragma once

#include <cstdint>
#include <vector>

#include "contraseg/tensor.hpp"

namespace contraseg::losses {

// Supervised fine-tuning loss: pixel-wise cross-entropy plus soft Dice over
// foreground classes, equally weighted. Returns the loss and the gradient
// with respect to the logits.
struct SegLossResult {
  double total = 0.0;
  double cross_entropy = 0.0;
  double dice = 0.0;  // 1 - mean soft Dice
  Tensor grad;        // same shape as logits
};

SegLossResult segmentation_loss(const Tensor& logits,
                                const std::vector<std::int32_t>& targets);

}  // namespace contraseg::losses
