#pragma once

#include <cstddef>
#include <vector>

#include "contraseg/common.hpp"

namespace contraseg {

// Dense NCHW float tensor. All layers and network forwards work on this.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {}

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  std::size_t index(int i, int j, int y, int x) const {
    return ((static_cast<std::size_t>(i) * c + j) * h + y) * w + x;
  }
  float& at(int i, int j, int y, int x) { return v[index(i, j, y, x)]; }
  float at(int i, int j, int y, int x) const { return v[index(i, j, y, x)]; }

  // Pointer to the (sample, channel) plane.
  float* plane(int i, int j) { return v.data() + index(i, j, 0, 0); }
  const float* plane(int i, int j) const { return v.data() + index(i, j, 0, 0); }

  // Pointer to all channels of one sample.
  float* sample(int i) { return v.data() + index(i, 0, 0, 0); }
  const float* sample(int i) const { return v.data() + index(i, 0, 0, 0); }

  std::size_t sample_size() const {
    return static_cast<std::size_t>(c) * h * w;
  }

  void fill(float value) { std::fill(v.begin(), v.end(), value); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

}  // namespace contraseg
