#pragma once

#include <string>
#include <vector>

#include "contraseg/rng.hpp"
#include "contraseg/tensor.hpp"

namespace contraseg::model {

// Named view of one trainable parameter buffer and its gradient.
struct ParamRef {
  std::string name;
  std::vector<float>* value = nullptr;
  std::vector<float>* grad = nullptr;
};

// Layers cache what their backward pass needs during forward. A network
// instance therefore has a single writer: the training loop. Evaluation
// forwards are deterministic per sample (instance-style normalization, no
// batch statistics), so batch composition never changes an output.

struct Conv2d {
  int in_ch = 0, out_ch = 0, ksize = 3, pad = 1;
  std::vector<float> weight, bias, wgrad, bgrad;
  Tensor x_cache;

  void init(int in, int out, int k, RandomState& rng);
  Tensor forward(const Tensor& x, bool cache_input = true);
  Tensor backward(const Tensor& gy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct InstanceNorm2d {
  int channels = 0;
  float eps = 1e-5f;
  std::vector<float> gamma, beta, ggrad, bgrad;
  Tensor xhat_cache;
  std::vector<float> inv_std_cache;

  void init(int ch);
  Tensor forward(const Tensor& x, bool cache = true);
  Tensor backward(const Tensor& gy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct ReLU {
  Tensor y_cache;
  Tensor forward(const Tensor& x, bool cache = true);
  Tensor backward(const Tensor& gy) const;
};

struct MaxPool2x2 {
  std::vector<unsigned char> arg_cache;
  int in_h = 0, in_w = 0;
  Tensor forward(const Tensor& x, bool cache = true);
  Tensor backward(const Tensor& gy) const;
};

struct UpsampleNearest2x {
  static Tensor forward(const Tensor& x);
  static Tensor backward(const Tensor& gy);
};

struct Linear {
  int in_dim = 0, out_dim = 0;
  std::vector<float> weight, bias, wgrad, bgrad;
  Tensor x_cache;

  void init(int in, int out, RandomState& rng);
  // operates on (n, dim, 1, 1) tensors
  Tensor forward(const Tensor& x, bool cache_input = true);
  Tensor backward(const Tensor& gy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct GlobalAvgPool {
  int in_h = 0, in_w = 0;
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy) const;
};

// conv -> norm -> relu, twice
struct ConvBlock {
  Conv2d conv1, conv2;
  InstanceNorm2d norm1, norm2;
  ReLU relu1, relu2;

  void init(int in, int out, RandomState& rng);
  Tensor forward(const Tensor& x, bool cache = true);
  Tensor backward(const Tensor& gy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// channel concatenation helpers for skip connections
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb);

}  // namespace contraseg::model
