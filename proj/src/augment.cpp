#include "contraseg/augment.hpp"

#include <algorithm>
#include <cmath>

#include "contraseg/preprocess.hpp"

namespace contraseg::data {

AugmentPolicy AugmentPolicy::identity() {
  AugmentPolicy p;
  p.brightness = p.contrast = p.noise_sigma = 0.0;
  p.blur_sigma_min = p.blur_sigma_max = 0.0;
  p.crop_scale_min = p.crop_scale_max = 1.0;
  p.flip_prob = 0.0;
  return p;
}

AugmentPolicy AugmentPolicy::intensity_defaults() { return AugmentPolicy{}; }

AugmentPolicy AugmentPolicy::spatial_defaults() {
  AugmentPolicy p;
  p.mode = Mode::intensity_and_spatial;
  return p;
}

AugmentPolicy::Mode augment_mode_from_name(const std::string& name) {
  if (name == "intensity_only") return AugmentPolicy::Mode::intensity_only;
  if (name == "intensity_and_spatial")
    return AugmentPolicy::Mode::intensity_and_spatial;
  throw std::invalid_argument("unknown augment mode: " + name);
}

std::string augment_mode_name(AugmentPolicy::Mode mode) {
  return mode == AugmentPolicy::Mode::intensity_only ? "intensity_only"
                                                     : "intensity_and_spatial";
}

namespace {

double slice_range(const Slice2D& s) {
  auto [lo, hi] = std::minmax_element(s.pixels.begin(), s.pixels.end());
  return static_cast<double>(*hi - *lo);
}

void crop_and_resize(Slice2D& s, double scale, double off_y, double off_x) {
  const int side = s.height;
  int crop = std::max(1, static_cast<int>(std::lround(scale * side)));
  crop = std::min(crop, side);
  if (crop == side) return;
  int max_off = side - crop;
  int y0 = static_cast<int>(std::lround(off_y * max_off));
  int x0 = static_cast<int>(std::lround(off_x * max_off));

  std::vector<float> patch(static_cast<std::size_t>(crop) * crop);
  for (int y = 0; y < crop; ++y)
    for (int x = 0; x < crop; ++x)
      patch[static_cast<std::size_t>(y) * crop + x] = s.pixel(y0 + y, x0 + x);
  s.pixels = resize_bilinear(patch, crop, crop, side, side);

  if (s.has_labels()) {
    std::vector<std::int32_t> lpatch(static_cast<std::size_t>(crop) * crop);
    for (int y = 0; y < crop; ++y)
      for (int x = 0; x < crop; ++x)
        lpatch[static_cast<std::size_t>(y) * crop + x] = s.label(y0 + y, x0 + x);
    s.labels = resize_nearest(lpatch, crop, crop, side, side);
  }
}

void flip_horizontal(Slice2D& s) {
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width / 2; ++x) {
      std::swap(s.pixels[s.pidx(y, x)], s.pixels[s.pidx(y, s.width - 1 - x)]);
      if (s.has_labels())
        std::swap(s.labels[s.pidx(y, x)], s.labels[s.pidx(y, s.width - 1 - x)]);
    }
}

void flip_vertical(Slice2D& s) {
  for (int y = 0; y < s.height / 2; ++y)
    for (int x = 0; x < s.width; ++x) {
      std::swap(s.pixels[s.pidx(y, x)], s.pixels[s.pidx(s.height - 1 - y, x)]);
      if (s.has_labels())
        std::swap(s.labels[s.pidx(y, x)], s.labels[s.pidx(s.height - 1 - y, x)]);
    }
}

void gaussian_blur(Slice2D& s, double sigma) {
  if (sigma <= 0.0) return;
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  auto reflect = [](int i, int n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
    return std::clamp(i, 0, n - 1);
  };
  std::vector<float> tmp(s.pixels.size());
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * s.pixel(y, reflect(x + k, s.width));
      tmp[s.pidx(y, x)] = static_cast<float>(acc);
    }
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[s.pidx(reflect(y + k, s.height), x)];
      s.pixels[s.pidx(y, x)] = static_cast<float>(acc);
    }
}

}  // namespace

Slice2D apply_augmentation(const Slice2D& src, const AugmentPolicy& policy,
                           RandomState& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Slice2D s = src;

  const bool spatial = policy.mode == AugmentPolicy::Mode::intensity_and_spatial;
  // Spatial draws happen first and unconditionally in the draw sequence so
  // intensity draws line up between intensity_only and spatial policies.
  if (spatial) {
    double do_crop = unif(rng);
    double scale = policy.crop_scale_min +
                   unif(rng) * (policy.crop_scale_max - policy.crop_scale_min);
    double off_y = unif(rng), off_x = unif(rng);
    if (do_crop < policy.apply_prob) crop_and_resize(s, scale, off_y, off_x);
    if (unif(rng) < policy.flip_prob) flip_horizontal(s);
    if (unif(rng) < policy.flip_prob) flip_vertical(s);
  }

  const double range = slice_range(s);
  if (unif(rng) < policy.apply_prob && policy.brightness > 0.0) {
    double shift = (unif(rng) * 2.0 - 1.0) * policy.brightness * range;
    for (auto& p : s.pixels) p = static_cast<float>(p + shift);
  }
  if (unif(rng) < policy.apply_prob && policy.contrast > 0.0) {
    double factor = 1.0 + (unif(rng) * 2.0 - 1.0) * policy.contrast;
    double mean = 0.0;
    for (auto p : s.pixels) mean += p;
    mean /= static_cast<double>(s.pixels.size());
    for (auto& p : s.pixels)
      p = static_cast<float>(mean + (p - mean) * factor);
  }
  if (unif(rng) < policy.apply_prob && policy.noise_sigma > 0.0) {
    double sigma = policy.noise_sigma * range;
    for (auto& p : s.pixels) p = static_cast<float>(p + gauss(rng) * sigma);
  }
  if (unif(rng) < policy.apply_prob && policy.blur_sigma_max > 0.0) {
    double sigma = policy.blur_sigma_min +
                   unif(rng) * (policy.blur_sigma_max - policy.blur_sigma_min);
    gaussian_blur(s, sigma);
  }
  return s;
}

std::pair<Slice2D, Slice2D> augment_pair(const Slice2D& s,
                                         const AugmentPolicy& policy,
                                         RandomState& rng) {
  Slice2D a = apply_augmentation(s, policy, rng);
  Slice2D b = apply_augmentation(s, policy, rng);
  return {std::move(a), std::move(b)};
}

void AugmentedBatch::validate() const {
  check(!images.empty() && images.size() % 2 == 0,
        "augmented batch must hold an even, nonzero image count");
  check(pair_index.size() == images.size(), "pair_index size mismatch");
  for (std::size_t i = 0; i < pair_index.size(); ++i) {
    int j = pair_index[i];
    check(j >= 0 && j < static_cast<int>(images.size()),
          "pair_index out of range");
    check(j != static_cast<int>(i), "pair_index has a fixed point");
    check(pair_index[j] == static_cast<int>(i),
          "pair_index is not an involution");
  }
}

AugmentedBatch make_augmented_batch(const std::vector<Slice2D>& sources,
                                    const AugmentPolicy& policy,
                                    RandomState& rng) {
  check(!sources.empty(), "make_augmented_batch: empty source batch");
  AugmentedBatch batch;
  batch.images.reserve(sources.size() * 2);
  batch.pair_index.resize(sources.size() * 2);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    auto [a, b] = augment_pair(sources[k], policy, rng);
    batch.images.push_back(std::move(a));
    batch.images.push_back(std::move(b));
    batch.pair_index[2 * k] = static_cast<int>(2 * k + 1);
    batch.pair_index[2 * k + 1] = static_cast<int>(2 * k);
  }
  batch.validate();
  return batch;
}

}  // namespace contraseg::data
