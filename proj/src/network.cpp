#include "contraseg/network.hpp"

#include <algorithm>
#include <cmath>

#include "contraseg/preprocess.hpp"

namespace contraseg::model {

void NetworkConfig::validate() const {
  check(encoder_blocks >= 1 && encoder_blocks <= 5, "network: encoder_blocks out of range");
  check(decoder_blocks == encoder_blocks,
        "network: decoder_blocks must equal encoder_blocks");
  check(base_channels >= 1, "network: base_channels must be >= 1");
  check(num_classes >= 2, "network: num_classes must be >= 2");
  check(projection_dim >= 2, "network: projection_dim must be >= 2");
  check(local_head_channels >= 2, "network: local_head_channels must be >= 2");
}

std::string stage_tag_name(StageTag t) {
  switch (t) {
    case StageTag::fresh: return "fresh";
    case StageTag::global_pretrained: return "global_pretrained";
    case StageTag::local_pretrained: return "local_pretrained";
    case StageTag::finetuned: return "finetuned";
  }
  return "fresh";
}

StageTag stage_tag_from_name(const std::string& name) {
  if (name == "fresh") return StageTag::fresh;
  if (name == "global_pretrained") return StageTag::global_pretrained;
  if (name == "local_pretrained") return StageTag::local_pretrained;
  if (name == "finetuned") return StageTag::finetuned;
  throw std::invalid_argument("unknown stage tag: " + name);
}

void Network::PointwiseHead::init(int in, int mid, int out, RandomState& rng) {
  conv1.init(in, mid, 1, rng);
  conv2.init(mid, out, 1, rng);
}

Tensor Network::PointwiseHead::forward(const Tensor& x, bool cache) {
  Tensor t = conv1.forward(x, cache);
  t = relu.forward(t, cache);
  return conv2.forward(t, cache);
}

Tensor Network::PointwiseHead::backward(const Tensor& gy) {
  Tensor g = conv2.backward(gy);
  g = relu.backward(g);
  return conv1.backward(g);
}

void Network::PointwiseHead::collect(const std::string& prefix,
                                     std::vector<ParamRef>& out) {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
}

Network::Network(const NetworkConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  RandomState rng(make_rng(derive_seed(seed, "network-init")));
  const int blocks = cfg_.encoder_blocks;
  const int base = cfg_.base_channels;

  enc_.resize(blocks);
  pools_.resize(blocks);
  int in_ch = 1;
  for (int i = 0; i < blocks; ++i) {
    int out_ch = base << i;
    enc_[i].init(in_ch, out_ch, rng);
    in_ch = out_ch;
  }
  const int bott_ch = base << blocks;
  bottleneck_.init(in_ch, bott_ch, rng);

  dec_.resize(blocks);
  for (int level = blocks; level >= 1; --level) {
    int above_ch = level == blocks ? bott_ch : base << level;
    int skip_ch = base << (level - 1);
    dec_[level - 1].init(above_ch + skip_ch, skip_ch, rng);
  }

  local_heads_.resize(blocks);
  for (int level = 1; level <= blocks; ++level) {
    int ch = base << (level - 1);
    int out = cfg_.local_head_channels << (level - 1);
    local_heads_[level - 1].init(ch, ch, out, rng);
  }

  fc1_.init(bott_ch, bott_ch, rng);
  fc2_.init(bott_ch, cfg_.projection_dim, rng);
  classifier_.init(cfg_.local_head_channels, cfg_.num_classes, 1, rng);

  for (int i = 0; i < blocks; ++i)
    enc_[i].collect("enc" + std::to_string(i + 1), params_);
  bottleneck_.collect("bottleneck", params_);
  for (int level = 1; level <= blocks; ++level)
    dec_[level - 1].collect("dec" + std::to_string(level), params_);
  for (int level = 1; level <= blocks; ++level)
    local_heads_[level - 1].collect("h2_" + std::to_string(level), params_);
  fc1_.collect("h1.fc1", params_);
  fc2_.collect("h1.fc2", params_);
  classifier_.collect("classifier", params_);
}

namespace {

std::vector<ParamRef> filter_params(const std::vector<ParamRef>& all,
                                    const std::vector<std::string>& prefixes) {
  std::vector<ParamRef> out;
  for (const auto& p : all) {
    for (const auto& pre : prefixes) {
      if (p.name.rfind(pre, 0) == 0) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<ParamRef> Network::encoder_and_global_head_params() {
  std::vector<std::string> prefixes = {"enc", "bottleneck", "h1."};
  return filter_params(params_, prefixes);
}

std::vector<ParamRef> Network::encoder_decoder_local_params(int level) {
  std::vector<std::string> prefixes = {"enc", "bottleneck", "dec",
                                       "h2_" + std::to_string(level) + "."};
  return filter_params(params_, prefixes);
}

std::vector<ParamRef> Network::segmentation_params() {
  std::vector<std::string> prefixes = {"enc", "bottleneck", "dec", "h2_1.",
                                       "classifier"};
  return filter_params(params_, prefixes);
}

void Network::check_input(const Tensor& x) const {
  check(x.c == 1, "network: expects single-channel input");
  const int factor = 1 << cfg_.encoder_blocks;
  if (x.h % factor != 0 || x.w % factor != 0) {
    throw std::invalid_argument(
        "network: input resolution " + std::to_string(x.h) + "x" +
        std::to_string(x.w) + " is not divisible by 2^" +
        std::to_string(cfg_.encoder_blocks));
  }
}

Tensor Network::encode(const Tensor& x, bool cache) {
  check_input(x);
  skips_.assign(enc_.size(), Tensor());
  Tensor t = x;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    Tensor e = enc_[i].forward(t, cache);
    skips_[i] = e;
    t = pools_[i].forward(e, cache);
  }
  return bottleneck_.forward(t, cache);
}

void Network::backward_encoder(const Tensor& gbott,
                               std::vector<Tensor> gskips) {
  Tensor g = bottleneck_.backward(gbott);
  for (int i = static_cast<int>(enc_.size()) - 1; i >= 0; --i) {
    Tensor ge = pools_[i].backward(g);
    if (!gskips.empty() && !gskips[i].empty()) {
      for (std::size_t k = 0; k < ge.size(); ++k) ge.v[k] += gskips[i].v[k];
    }
    g = enc_[i].backward(ge);
  }
}

Tensor Network::forward_global_raw(const Tensor& x, bool train) {
  Tensor bott = encode(x, train);
  Tensor pooled = gap_.forward(bott);
  Tensor t = fc1_.forward(pooled, train);
  t = fc_relu_.forward(t, train);
  return fc2_.forward(t, train);
}

void Network::backward_global(const Tensor& gz) {
  Tensor g = fc2_.backward(gz);
  g = fc_relu_.backward(g);
  g = fc1_.backward(g);
  g = gap_.backward(g);
  backward_encoder(g, {});
}

Tensor Network::decode_to_level(const Tensor& bottleneck, int level,
                                bool cache) {
  const int blocks = cfg_.decoder_blocks;
  Tensor d = bottleneck;
  for (int l = blocks; l >= level; --l) {
    Tensor up = UpsampleNearest2x::forward(d);
    Tensor din = concat_channels(up, skips_[l - 1]);
    d = dec_[l - 1].forward(din, cache);
  }
  return d;
}

void Network::backward_from_level(const Tensor& gd, int level) {
  const int blocks = cfg_.decoder_blocks;
  std::vector<Tensor> gskips(enc_.size());
  Tensor g = gd;
  for (int l = level; l <= blocks; ++l) {
    Tensor gdin = dec_[l - 1].backward(g);
    int up_ch = l == blocks ? cfg_.base_channels << blocks
                            : cfg_.base_channels << l;
    Tensor gup, gskip;
    split_channels(gdin, up_ch, gup, gskip);
    gskips[l - 1] = std::move(gskip);
    g = UpsampleNearest2x::backward(gup);
  }
  backward_encoder(g, std::move(gskips));
}

Tensor Network::forward_local_raw(const Tensor& x, int level, bool train) {
  check(level >= 1 && level <= cfg_.decoder_blocks,
        "forward_local: level out of range");
  Tensor bott = encode(x, train);
  Tensor d = decode_to_level(bott, level, train);
  return local_heads_[level - 1].forward(d, train);
}

void Network::backward_local(const Tensor& gf, int level) {
  Tensor g = local_heads_[level - 1].backward(gf);
  backward_from_level(g, level);
}

Tensor Network::forward_seg_logits(const Tensor& x, bool train) {
  Tensor f = forward_local_raw(x, 1, train);
  return classifier_.forward(f, train);
}

void Network::backward_seg(const Tensor& glogits) {
  Tensor g = classifier_.backward(glogits);
  backward_local(g, 1);
}

void Network::zero_grad() {
  for (auto& p : params_)
    std::fill(p.grad->begin(), p.grad->end(), 0.0f);
}

Tensor slices_to_tensor(const std::vector<data::Slice2D>& slices) {
  check(!slices.empty(), "slices_to_tensor: empty batch");
  const int h = slices[0].height, w = slices[0].width;
  Tensor x(static_cast<int>(slices.size()), 1, h, w);
  for (std::size_t i = 0; i < slices.size(); ++i) {
    check(slices[i].height == h && slices[i].width == w,
          "slices_to_tensor: mixed slice shapes");
    std::copy(slices[i].pixels.begin(), slices[i].pixels.end(),
              x.sample(static_cast<int>(i)));
  }
  return x;
}

std::vector<std::vector<double>> forward_global(
    Network& net, const data::AugmentedBatch& batch) {
  batch.validate();
  Tensor z = net.forward_global_raw(slices_to_tensor(batch.images), false);
  std::vector<std::vector<double>> out(z.n);
  for (int i = 0; i < z.n; ++i) {
    out[i].resize(z.c);
    double sq = 0.0;
    for (int c = 0; c < z.c; ++c) {
      out[i][c] = z.at(i, c, 0, 0);
      sq += out[i][c] * out[i][c];
    }
    if (sq > 0.0) {
      double inv = 1.0 / std::sqrt(sq);
      for (auto& v : out[i]) v *= inv;
    } else {
      out[i][0] = 1.0;
    }
  }
  return out;
}

std::vector<losses::LocalFeatureMap> forward_local(
    Network& net, const data::AugmentedBatch& batch, int level) {
  batch.validate();
  Tensor f = net.forward_local_raw(slices_to_tensor(batch.images), level, false);
  std::vector<losses::LocalFeatureMap> maps;
  maps.reserve(batch.images.size());
  for (int i = 0; i < f.n; ++i) {
    losses::LocalFeatureMap m(f.c, f.h, f.w, i);
    for (int c = 0; c < f.c; ++c)
      for (int r = 0; r < f.h; ++r)
        for (int col = 0; col < f.w; ++col)
          m.feat(c, r, col) = f.at(i, c, r, col);
    m.normalize_pixels();
    const auto& img = batch.images[i];
    if (img.has_labels()) {
      m.labels = data::resize_nearest(img.labels, img.height, img.width, f.h,
                                      f.w);
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

std::vector<std::vector<std::int32_t>> predict_segmentation(
    Network& net, const std::vector<data::Slice2D>& slices, int batch_size) {
  std::vector<std::vector<std::int32_t>> out;
  out.reserve(slices.size());
  for (std::size_t start = 0; start < slices.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(slices.size(), start + batch_size);
    std::vector<data::Slice2D> chunk(slices.begin() + start,
                                     slices.begin() + end);
    Tensor logits = net.forward_seg_logits(slices_to_tensor(chunk), false);
    for (int s = 0; s < logits.n; ++s) {
      std::vector<std::int32_t> pred(static_cast<std::size_t>(logits.h) *
                                     logits.w);
      for (int y = 0; y < logits.h; ++y) {
        for (int x = 0; x < logits.w; ++x) {
          int best = 0;
          float best_v = logits.at(s, 0, y, x);
          for (int c = 1; c < logits.c; ++c) {
            float v = logits.at(s, c, y, x);
            if (v > best_v) {
              best_v = v;
              best = c;
            }
          }
          pred[static_cast<std::size_t>(y) * logits.w + x] = best;
        }
      }
      out.push_back(std::move(pred));
    }
  }
  return out;
}

}  // namespace contraseg::model
