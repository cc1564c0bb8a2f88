#include "contraseg/seg_loss.hpp"

#include <cmath>

#include "contraseg/common.hpp"

namespace contraseg::losses {

SegLossResult segmentation_loss(const Tensor& logits,
                                const std::vector<std::int32_t>& targets) {
  const int n = logits.n, nc = logits.c, h = logits.h, w = logits.w;
  const std::size_t pixels = static_cast<std::size_t>(n) * h * w;
  check(targets.size() == pixels, "segmentation_loss: target size mismatch");

  SegLossResult result;
  result.grad = Tensor(n, nc, h, w);
  Tensor probs(n, nc, h, w);

  const double smooth = 1.0;
  std::vector<double> inter(nc, 0.0), psum(nc, 0.0), tsum(nc, 0.0);
  double ce = 0.0;

  std::vector<double> p(nc);
  for (int s = 0; s < n; ++s) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double mx = logits.at(s, 0, y, x);
        for (int c = 1; c < nc; ++c) mx = std::max(mx, (double)logits.at(s, c, y, x));
        double sum = 0.0;
        for (int c = 0; c < nc; ++c) {
          p[c] = std::exp(logits.at(s, c, y, x) - mx);
          sum += p[c];
        }
        const std::int32_t t =
            targets[(static_cast<std::size_t>(s) * h + y) * w + x];
        check(t >= 0 && t < nc, "segmentation_loss: target class out of range");
        for (int c = 0; c < nc; ++c) {
          p[c] /= sum;
          probs.at(s, c, y, x) = static_cast<float>(p[c]);
          if (c == t) ce -= std::log(std::max(p[c], 1e-12));
          inter[c] += (c == t) ? p[c] : 0.0;
          psum[c] += p[c];
          tsum[c] += (c == t) ? 1.0 : 0.0;
        }
      }
    }
  }
  ce /= static_cast<double>(pixels);

  // soft Dice over foreground classes, pooled across the batch
  const int fg = nc - 1;
  double dice_sum = 0.0;
  std::vector<double> a(nc, 0.0), b(nc, 0.0);
  for (int c = 1; c < nc; ++c) {
    a[c] = 2.0 * inter[c] + smooth;
    b[c] = psum[c] + tsum[c] + smooth;
    dice_sum += a[c] / b[c];
  }
  const double dice_loss = 1.0 - dice_sum / fg;

  result.cross_entropy = ce;
  result.dice = dice_loss;
  result.total = ce + dice_loss;

  // gradient: CE part has the standard softmax shortcut; the Dice part is
  // chained through the softmax explicitly
  const double inv_pixels = 1.0 / static_cast<double>(pixels);
  std::vector<double> dldp(nc);
  for (int s = 0; s < n; ++s) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::int32_t t =
            targets[(static_cast<std::size_t>(s) * h + y) * w + x];
        double dot = 0.0;
        for (int c = 0; c < nc; ++c) {
          double pc = probs.at(s, c, y, x);
          if (c == 0) {
            dldp[c] = 0.0;
          } else {
            double ddice_dp = (2.0 * (c == t ? 1.0 : 0.0) * b[c] - a[c]) /
                              (b[c] * b[c]);
            dldp[c] = -ddice_dp / fg;
          }
          dot += dldp[c] * pc;
        }
        for (int c = 0; c < nc; ++c) {
          double pc = probs.at(s, c, y, x);
          double g_ce = (pc - (c == t ? 1.0 : 0.0)) * inv_pixels;
          double g_dice = pc * (dldp[c] - dot);
          result.grad.at(s, c, y, x) = static_cast<float>(g_ce + g_dice);
        }
      }
    }
  }
  return result;
}

}  // namespace contraseg::losses
