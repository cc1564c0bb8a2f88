#include "contraseg/layers.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace contraseg::model {

namespace {

using MatF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<MatF>;
using MapConst = Eigen::Map<const MatF>;

void kaiming_fill(std::vector<float>& w, int fan_in, RandomState& rng) {
  std::normal_distribution<float> gauss(0.0f, std::sqrt(2.0f / fan_in));
  for (auto& x : w) x = gauss(rng);
}

// column buffer layout: (in_ch * k * k) rows x (h * w) cols
void im2col(const float* x, int in_ch, int h, int w, int k, int pad,
            float* col) {
  const int hw = h * w;
  for (int ic = 0; ic < in_ch; ++ic) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = col + (static_cast<std::size_t>(ic) * k * k + ky * k + kx) * hw;
        const float* plane = x + static_cast<std::size_t>(ic) * hw;
        for (int y = 0; y < h; ++y) {
          int sy = y + ky - pad;
          if (sy < 0 || sy >= h) {
            std::fill(row + y * w, row + (y + 1) * w, 0.0f);
            continue;
          }
          for (int xx = 0; xx < w; ++xx) {
            int sx = xx + kx - pad;
            row[y * w + xx] =
                (sx < 0 || sx >= w) ? 0.0f : plane[sy * w + sx];
          }
        }
      }
    }
  }
}

void col2im(const float* col, int in_ch, int h, int w, int k, int pad,
            float* gx) {
  const int hw = h * w;
  std::fill(gx, gx + static_cast<std::size_t>(in_ch) * hw, 0.0f);
  for (int ic = 0; ic < in_ch; ++ic) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row =
            col + (static_cast<std::size_t>(ic) * k * k + ky * k + kx) * hw;
        float* plane = gx + static_cast<std::size_t>(ic) * hw;
        for (int y = 0; y < h; ++y) {
          int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          for (int xx = 0; xx < w; ++xx) {
            int sx = xx + kx - pad;
            if (sx < 0 || sx >= w) continue;
            plane[sy * w + sx] += row[y * w + xx];
          }
        }
      }
    }
  }
}

}  // namespace

void Conv2d::init(int in, int out, int k, RandomState& rng) {
  in_ch = in;
  out_ch = out;
  ksize = k;
  pad = k / 2;
  weight.assign(static_cast<std::size_t>(out) * in * k * k, 0.0f);
  bias.assign(out, 0.0f);
  kaiming_fill(weight, in * k * k, rng);
  wgrad.assign(weight.size(), 0.0f);
  bgrad.assign(bias.size(), 0.0f);
}

Tensor Conv2d::forward(const Tensor& x, bool cache_input) {
  check(x.c == in_ch, "conv: channel mismatch");
  if (cache_input) x_cache = x;
  Tensor y(x.n, out_ch, x.h, x.w);
  const int hw = x.h * x.w;
  const int krows = in_ch * ksize * ksize;
  std::vector<float> col(static_cast<std::size_t>(krows) * hw);
  MapConst wmat(weight.data(), out_ch, krows);
  for (int s = 0; s < x.n; ++s) {
    if (ksize == 1) {
      MapConst xmat(x.sample(s), in_ch, hw);
      MapMat ymat(y.sample(s), out_ch, hw);
      ymat.noalias() = wmat * xmat;
    } else {
      im2col(x.sample(s), in_ch, x.h, x.w, ksize, pad, col.data());
      MapConst colmat(col.data(), krows, hw);
      MapMat ymat(y.sample(s), out_ch, hw);
      ymat.noalias() = wmat * colmat;
    }
    for (int oc = 0; oc < out_ch; ++oc) {
      float b = bias[oc];
      float* plane = y.plane(s, oc);
      for (int i = 0; i < hw; ++i) plane[i] += b;
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const Tensor& x = x_cache;
  check(!x.empty(), "conv: backward without cached forward");
  Tensor gx(x.n, in_ch, x.h, x.w);
  const int hw = x.h * x.w;
  const int krows = in_ch * ksize * ksize;
  std::vector<float> col(static_cast<std::size_t>(krows) * hw);
  std::vector<float> gcol(static_cast<std::size_t>(krows) * hw);
  MapConst wmat(weight.data(), out_ch, krows);
  MapMat gwmat(wgrad.data(), out_ch, krows);
  for (int s = 0; s < x.n; ++s) {
    MapConst gymat(gy.sample(s), out_ch, hw);
    if (ksize == 1) {
      MapConst xmat(x.sample(s), in_ch, hw);
      gwmat.noalias() += gymat * xmat.transpose();
      MapMat gxmat(gx.sample(s), in_ch, hw);
      gxmat.noalias() = wmat.transpose() * gymat;
    } else {
      im2col(x.sample(s), in_ch, x.h, x.w, ksize, pad, col.data());
      MapConst colmat(col.data(), krows, hw);
      gwmat.noalias() += gymat * colmat.transpose();
      MapMat gcolmat(gcol.data(), krows, hw);
      gcolmat.noalias() = wmat.transpose() * gymat;
      col2im(gcol.data(), in_ch, x.h, x.w, ksize, pad, gx.sample(s));
    }
    for (int oc = 0; oc < out_ch; ++oc) {
      const float* plane = gy.plane(s, oc);
      float acc = 0.0f;
      for (int i = 0; i < hw; ++i) acc += plane[i];
      bgrad[oc] += acc;
    }
  }
  return gx;
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &wgrad});
  out.push_back({prefix + ".bias", &bias, &bgrad});
}

void InstanceNorm2d::init(int ch) {
  channels = ch;
  gamma.assign(ch, 1.0f);
  beta.assign(ch, 0.0f);
  ggrad.assign(ch, 0.0f);
  bgrad.assign(ch, 0.0f);
}

Tensor InstanceNorm2d::forward(const Tensor& x, bool cache) {
  Tensor y(x.n, x.c, x.h, x.w);
  if (cache) {
    xhat_cache = Tensor(x.n, x.c, x.h, x.w);
    inv_std_cache.assign(static_cast<std::size_t>(x.n) * x.c, 0.0f);
  }
  const int hw = x.h * x.w;
  for (int s = 0; s < x.n; ++s) {
    for (int ch = 0; ch < x.c; ++ch) {
      const float* plane = x.plane(s, ch);
      double mean = 0.0;
      for (int i = 0; i < hw; ++i) mean += plane[i];
      mean /= hw;
      double var = 0.0;
      for (int i = 0; i < hw; ++i) {
        double d = plane[i] - mean;
        var += d * d;
      }
      var /= hw;
      float istd = 1.0f / std::sqrt(static_cast<float>(var) + eps);
      float* yplane = y.plane(s, ch);
      float g = gamma[ch], b = beta[ch];
      float* xhat = cache ? xhat_cache.plane(s, ch) : nullptr;
      for (int i = 0; i < hw; ++i) {
        float h = (plane[i] - static_cast<float>(mean)) * istd;
        if (xhat) xhat[i] = h;
        yplane[i] = g * h + b;
      }
      if (cache) inv_std_cache[static_cast<std::size_t>(s) * x.c + ch] = istd;
    }
  }
  return y;
}

Tensor InstanceNorm2d::backward(const Tensor& gy) {
  const Tensor& xhat = xhat_cache;
  check(!xhat.empty(), "instance norm: backward without cached forward");
  Tensor gx(gy.n, gy.c, gy.h, gy.w);
  const int hw = gy.h * gy.w;
  for (int s = 0; s < gy.n; ++s) {
    for (int ch = 0; ch < gy.c; ++ch) {
      const float* g = gy.plane(s, ch);
      const float* h = xhat.plane(s, ch);
      float istd = inv_std_cache[static_cast<std::size_t>(s) * gy.c + ch];
      double sum_g = 0.0, sum_gh = 0.0;
      for (int i = 0; i < hw; ++i) {
        sum_g += g[i];
        sum_gh += static_cast<double>(g[i]) * h[i];
      }
      ggrad[ch] += static_cast<float>(sum_gh);
      bgrad[ch] += static_cast<float>(sum_g);
      const float mg = static_cast<float>(sum_g / hw);
      const float mgh = static_cast<float>(sum_gh / hw);
      const float scale = gamma[ch] * istd;
      float* out = gx.plane(s, ch);
      for (int i = 0; i < hw; ++i)
        out[i] = scale * (g[i] - mg - h[i] * mgh);
    }
  }
  return gx;
}

void InstanceNorm2d::collect(const std::string& prefix,
                             std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &ggrad});
  out.push_back({prefix + ".beta", &beta, &bgrad});
}

Tensor ReLU::forward(const Tensor& x, bool cache) {
  Tensor y(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i)
    y.v[i] = x.v[i] > 0.0f ? x.v[i] : 0.0f;
  if (cache) y_cache = y;
  return y;
}

Tensor ReLU::backward(const Tensor& gy) const {
  Tensor gx(gy.n, gy.c, gy.h, gy.w);
  for (std::size_t i = 0; i < gy.size(); ++i)
    gx.v[i] = y_cache.v[i] > 0.0f ? gy.v[i] : 0.0f;
  return gx;
}

Tensor MaxPool2x2::forward(const Tensor& x, bool cache) {
  check(x.h % 2 == 0 && x.w % 2 == 0, "maxpool: odd spatial size");
  Tensor y(x.n, x.c, x.h / 2, x.w / 2);
  if (cache) {
    arg_cache.assign(y.size(), 0);
    in_h = x.h;
    in_w = x.w;
  }
  for (int s = 0; s < x.n; ++s) {
    for (int ch = 0; ch < x.c; ++ch) {
      const float* plane = x.plane(s, ch);
      float* out = y.plane(s, ch);
      for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) {
          int base = (2 * yy) * x.w + 2 * xx;
          float v0 = plane[base], v1 = plane[base + 1];
          float v2 = plane[base + x.w], v3 = plane[base + x.w + 1];
          int arg = 0;
          float best = v0;
          if (v1 > best) { best = v1; arg = 1; }
          if (v2 > best) { best = v2; arg = 2; }
          if (v3 > best) { best = v3; arg = 3; }
          out[yy * y.w + xx] = best;
          if (cache)
            arg_cache[y.index(s, ch, yy, xx)] = static_cast<unsigned char>(arg);
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2x2::backward(const Tensor& gy) const {
  Tensor gx(gy.n, gy.c, in_h, in_w);
  for (int s = 0; s < gy.n; ++s) {
    for (int ch = 0; ch < gy.c; ++ch) {
      const float* g = gy.plane(s, ch);
      float* out = gx.plane(s, ch);
      for (int yy = 0; yy < gy.h; ++yy) {
        for (int xx = 0; xx < gy.w; ++xx) {
          int arg = arg_cache[gy.index(s, ch, yy, xx)];
          int base = (2 * yy) * in_w + 2 * xx;
          int offset = (arg == 0) ? 0 : (arg == 1) ? 1 : (arg == 2) ? in_w : in_w + 1;
          out[base + offset] += g[yy * gy.w + xx];
        }
      }
    }
  }
  return gx;
}

Tensor UpsampleNearest2x::forward(const Tensor& x) {
  Tensor y(x.n, x.c, x.h * 2, x.w * 2);
  for (int s = 0; s < x.n; ++s)
    for (int ch = 0; ch < x.c; ++ch) {
      const float* in = x.plane(s, ch);
      float* out = y.plane(s, ch);
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx)
          out[yy * y.w + xx] = in[(yy / 2) * x.w + (xx / 2)];
    }
  return y;
}

Tensor UpsampleNearest2x::backward(const Tensor& gy) {
  Tensor gx(gy.n, gy.c, gy.h / 2, gy.w / 2);
  for (int s = 0; s < gy.n; ++s)
    for (int ch = 0; ch < gy.c; ++ch) {
      const float* g = gy.plane(s, ch);
      float* out = gx.plane(s, ch);
      for (int yy = 0; yy < gy.h; ++yy)
        for (int xx = 0; xx < gy.w; ++xx)
          out[(yy / 2) * gx.w + (xx / 2)] += g[yy * gy.w + xx];
    }
  return gx;
}

void Linear::init(int in, int out, RandomState& rng) {
  in_dim = in;
  out_dim = out;
  weight.assign(static_cast<std::size_t>(out) * in, 0.0f);
  bias.assign(out, 0.0f);
  kaiming_fill(weight, in, rng);
  wgrad.assign(weight.size(), 0.0f);
  bgrad.assign(bias.size(), 0.0f);
}

Tensor Linear::forward(const Tensor& x, bool cache_input) {
  check(x.c == in_dim && x.h == 1 && x.w == 1, "linear: expects (n, in, 1, 1)");
  if (cache_input) x_cache = x;
  Tensor y(x.n, out_dim, 1, 1);
  MapConst wmat(weight.data(), out_dim, in_dim);
  MapConst xmat(x.v.data(), x.n, in_dim);
  MapMat ymat(y.v.data(), x.n, out_dim);
  ymat.noalias() = xmat * wmat.transpose();
  for (int s = 0; s < x.n; ++s)
    for (int o = 0; o < out_dim; ++o) y.at(s, o, 0, 0) += bias[o];
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  const Tensor& x = x_cache;
  check(!x.empty(), "linear: backward without cached forward");
  Tensor gx(x.n, in_dim, 1, 1);
  MapConst wmat(weight.data(), out_dim, in_dim);
  MapConst xmat(x.v.data(), x.n, in_dim);
  MapConst gymat(gy.v.data(), x.n, out_dim);
  MapMat gwmat(wgrad.data(), out_dim, in_dim);
  MapMat gxmat(gx.v.data(), x.n, in_dim);
  gwmat.noalias() += gymat.transpose() * xmat;
  gxmat.noalias() = gymat * wmat;
  for (int s = 0; s < x.n; ++s)
    for (int o = 0; o < out_dim; ++o) bgrad[o] += gy.at(s, o, 0, 0);
  return gx;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &wgrad});
  out.push_back({prefix + ".bias", &bias, &bgrad});
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  in_h = x.h;
  in_w = x.w;
  Tensor y(x.n, x.c, 1, 1);
  const int hw = x.h * x.w;
  for (int s = 0; s < x.n; ++s)
    for (int ch = 0; ch < x.c; ++ch) {
      const float* plane = x.plane(s, ch);
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += plane[i];
      y.at(s, ch, 0, 0) = static_cast<float>(acc / hw);
    }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy) const {
  Tensor gx(gy.n, gy.c, in_h, in_w);
  const float scale = 1.0f / (in_h * in_w);
  for (int s = 0; s < gy.n; ++s)
    for (int ch = 0; ch < gy.c; ++ch) {
      float g = gy.at(s, ch, 0, 0) * scale;
      float* plane = gx.plane(s, ch);
      for (int i = 0; i < in_h * in_w; ++i) plane[i] = g;
    }
  return gx;
}

void ConvBlock::init(int in, int out, RandomState& rng) {
  conv1.init(in, out, 3, rng);
  norm1.init(out);
  conv2.init(out, out, 3, rng);
  norm2.init(out);
}

Tensor ConvBlock::forward(const Tensor& x, bool cache) {
  Tensor t = conv1.forward(x, cache);
  t = norm1.forward(t, cache);
  t = relu1.forward(t, cache);
  t = conv2.forward(t, cache);
  t = norm2.forward(t, cache);
  return relu2.forward(t, cache);
}

Tensor ConvBlock::backward(const Tensor& gy) {
  Tensor g = relu2.backward(gy);
  g = norm2.backward(g);
  g = conv2.backward(g);
  g = relu1.backward(g);
  g = norm1.backward(g);
  return conv1.backward(g);
}

void ConvBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  conv1.collect(prefix + ".conv1", out);
  norm1.collect(prefix + ".norm1", out);
  conv2.collect(prefix + ".conv2", out);
  norm2.collect(prefix + ".norm2", out);
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  check(a.n == b.n && a.h == b.h && a.w == b.w, "concat: spatial mismatch");
  Tensor y(a.n, a.c + b.c, a.h, a.w);
  const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
  for (int s = 0; s < a.n; ++s) {
    std::copy(a.sample(s), a.sample(s) + a.c * plane, y.sample(s));
    std::copy(b.sample(s), b.sample(s) + b.c * plane,
              y.sample(s) + a.c * plane);
  }
  return y;
}

void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb) {
  ga = Tensor(g.n, ca, g.h, g.w);
  gb = Tensor(g.n, g.c - ca, g.h, g.w);
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int s = 0; s < g.n; ++s) {
    std::copy(g.sample(s), g.sample(s) + ca * plane, ga.sample(s));
    std::copy(g.sample(s) + ca * plane, g.sample(s) + g.c * plane,
              gb.sample(s));
  }
}

}  // namespace contraseg::model
