#pragma once

#include <vector>

#include "contraseg/common.hpp"

namespace contraseg::losses {

// Checks that pair_index is a fixed-point-free involution on [0, n).
void validate_pair_index(const std::vector<int>& pair_index, int n);

// Image-level contrastive loss over 2b unit-norm embeddings:
//   -1/|A| * sum_i log( exp(z_i . z_j(i) / tau) /
//                       sum_{k != i} exp(z_i . z_k / tau) )
// The temperature divides the dot product inside every exponential.
// Exactly zero for a single pair (the denominator reduces to the numerator).
double global_contrastive_loss(const std::vector<std::vector<double>>& z,
                               const std::vector<int>& pair_index, double tau);

struct GlobalLossGrad {
  double loss = 0.0;
  std::vector<std::vector<double>> grads;  // w.r.t. pre-normalization vectors
};

// Loss plus analytic gradient with respect to the raw (pre-normalization)
// projection outputs; inputs are L2-normalized internally.
GlobalLossGrad global_contrastive_loss_grad(
    const std::vector<std::vector<double>>& raw_z,
    const std::vector<int>& pair_index, double tau);

}  // namespace contraseg::losses
