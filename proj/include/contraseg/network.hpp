#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "contraseg/augment.hpp"
#include "contraseg/layers.hpp"
#include "contraseg/local_feature_map.hpp"
#include "contraseg/volume.hpp"

namespace contraseg::model {

struct NetworkConfig {
  int encoder_blocks = 3;
  int decoder_blocks = 3;
  int base_channels = 32;
  int num_classes = 4;  // foreground classes + background
  int projection_dim = 128;
  int local_head_channels = 16;

  bool operator==(const NetworkConfig&) const = default;
  void validate() const;
};

enum class StageTag { fresh, global_pretrained, local_pretrained, finetuned };
std::string stage_tag_name(StageTag t);
StageTag stage_tag_from_name(const std::string& name);

// U-Net encoder/decoder with a global projection head on the bottleneck, a
// per-level point-wise local projection head, and a 1x1 classifier on the
// level-1 local features. One instance has a single writer (the training
// loop); forwards cache activations for the matching backward call.
class Network {
 public:
  Network(const NetworkConfig& cfg, std::uint64_t seed);

  const NetworkConfig& config() const { return cfg_; }
  std::uint64_t init_seed() const { return seed_; }
  StageTag stage_tag() const { return stage_tag_; }
  void set_stage_tag(StageTag t) { stage_tag_ = t; }

  std::vector<ParamRef>& params() { return params_; }
  const std::vector<ParamRef>& params() const { return params_; }
  // Parameter subsets per training stage.
  std::vector<ParamRef> encoder_and_global_head_params();
  std::vector<ParamRef> encoder_decoder_local_params(int level);
  std::vector<ParamRef> segmentation_params();

  // Raw (pre-normalization) projection of pooled encoder output;
  // (n, projection_dim, 1, 1).
  Tensor forward_global_raw(const Tensor& x, bool train);
  void backward_global(const Tensor& gz);

  // Raw local feature map at the given decoder level (1 = full resolution).
  Tensor forward_local_raw(const Tensor& x, int level, bool train);
  void backward_local(const Tensor& gf, int level);

  // Class logits at input resolution.
  Tensor forward_seg_logits(const Tensor& x, bool train);
  void backward_seg(const Tensor& glogits);

  void zero_grad();

 private:
  struct PointwiseHead {
    Conv2d conv1, conv2;
    ReLU relu;
    void init(int in, int mid, int out, RandomState& rng);
    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
  };

  Tensor encode(const Tensor& x, bool cache);
  Tensor decode_to_level(const Tensor& bottleneck, int level, bool cache);
  // Backward through decoder blocks from `level` up, then the encoder.
  void backward_from_level(const Tensor& gd, int level);
  void backward_encoder(const Tensor& gbott, std::vector<Tensor> gskips);
  void check_input(const Tensor& x) const;

  NetworkConfig cfg_;
  std::uint64_t seed_ = 0;
  StageTag stage_tag_ = StageTag::fresh;

  std::vector<ConvBlock> enc_;
  std::vector<MaxPool2x2> pools_;
  ConvBlock bottleneck_;
  std::vector<ConvBlock> dec_;  // dec_[l-1] produces the level-l map
  std::vector<PointwiseHead> local_heads_;
  GlobalAvgPool gap_;
  Linear fc1_, fc2_;
  ReLU fc_relu_;
  Conv2d classifier_;

  std::vector<Tensor> skips_;
  std::vector<ParamRef> params_;
};

// ---- module-level operations on top of the raw forwards ----

// Stacks slices into a (n, 1, h, w) tensor.
Tensor slices_to_tensor(const std::vector<data::Slice2D>& slices);

// L2-normalized global embeddings for an augmented batch, one unit vector
// per image.
std::vector<std::vector<double>> forward_global(Network& net,
                                                const data::AugmentedBatch& batch);

// Per-pixel L2-normalized feature maps at the given decoder level, with
// ground-truth labels attached (downsampled to the level's resolution).
std::vector<losses::LocalFeatureMap> forward_local(
    Network& net, const data::AugmentedBatch& batch, int level);

// Argmax class map per slice.
std::vector<std::vector<std::int32_t>> predict_segmentation(
    Network& net, const std::vector<data::Slice2D>& slices,
    int batch_size = 16);

}  // namespace contraseg::model
