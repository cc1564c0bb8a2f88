#pragma once

#include <vector>

#include "contraseg/layers.hpp"

namespace contraseg::model {

// Adam over a fixed parameter subset; constant learning rate.
class Adam {
 public:
  explicit Adam(std::vector<ParamRef> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  double lr() const { return lr_; }

 private:
  std::vector<ParamRef> params_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace contraseg::model
