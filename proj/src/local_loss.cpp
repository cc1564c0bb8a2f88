#include "contraseg/local_loss.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace contraseg::losses {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kAnchorChunk = 128;

struct GroupPlan {
  // per anchor: averaging weight 1 / (|A| * blocks(image) * |Omega_bucket|),
  // or 0 for dropped anchors
  std::vector<double> weight;
  std::vector<char> dropped;
};

// Drop status and averaging weights are pure label arithmetic, so they are
// resolved before any similarity is computed.
std::vector<GroupPlan> plan_weights(const ContrastSets& sets) {
  const int num_images = sets.num_images;
  std::vector<GroupPlan> plans(sets.groups.size());
  // bucket = (group, image) -> count of usable anchors
  std::vector<std::vector<std::size_t>> bucket_count(sets.groups.size());
  std::vector<int> blocks_per_image(num_images, 0);

  for (std::size_t gi = 0; gi < sets.groups.size(); ++gi) {
    const auto& g = sets.groups[gi];
    auto& plan = plans[gi];
    plan.weight.assign(g.anchors.size(), 0.0);
    plan.dropped.assign(g.anchors.size(), 0);
    bucket_count[gi].assign(num_images, 0);

    std::vector<std::size_t> label_count;
    if (sets.strategy != Strategy::selfsup_grid) {
      for (int lab : g.pool_label) {
        if (lab >= static_cast<int>(label_count.size()))
          label_count.resize(lab + 1, 0);
        ++label_count[lab];
      }
    }
    for (std::size_t ai = 0; ai < g.anchors.size(); ++ai) {
      int a = g.anchors[ai];
      std::size_t np, nn;
      if (sets.strategy == Strategy::selfsup_grid) {
        np = g.pool_positive[a] >= 0 ? 1 : 0;
        nn = g.pool.size() >= 2 + np ? g.pool.size() - 1 - np : 0;
      } else {
        std::size_t same = label_count[g.pool_label[a]];
        np = same - 1;
        nn = g.pool.size() - same;
      }
      if (np == 0 || nn == 0) {
        plan.dropped[ai] = 1;
      } else {
        ++bucket_count[gi][g.pool[a].image];
      }
    }
    for (int i = 0; i < num_images; ++i)
      if (bucket_count[gi][i] > 0) ++blocks_per_image[i];
  }

  for (std::size_t gi = 0; gi < sets.groups.size(); ++gi) {
    const auto& g = sets.groups[gi];
    auto& plan = plans[gi];
    for (std::size_t ai = 0; ai < g.anchors.size(); ++ai) {
      if (plan.dropped[ai]) continue;
      int img = g.pool[g.anchors[ai]].image;
      plan.weight[ai] = 1.0 / (static_cast<double>(num_images) *
                               blocks_per_image[img] * bucket_count[gi][img]);
    }
  }
  return plans;
}

RowMat gather_pool(const std::vector<LocalFeatureMap>& maps,
                   const ContrastGroup& g) {
  const int c = maps[0].channels;
  RowMat f(g.pool.size(), c);
  for (std::size_t p = 0; p < g.pool.size(); ++p) {
    const auto& ref = g.pool[p];
    const auto& m = maps[ref.image];
    for (int ch = 0; ch < c; ++ch) f(p, ch) = m.feat(ch, ref.row, ref.col);
  }
  return f;
}

// Core evaluation. When grads is non-null, accumulates dL/d(normalized
// feature) into per-map (c,h,w) buffers.
LocalLossStats evaluate(const std::vector<LocalFeatureMap>& maps,
                        const ContrastSets& sets, double tau,
                        const LocalLossOptions& opts,
                        std::vector<std::vector<double>>* grads) {
  check(tau > 0.0, "local_contrastive_loss: tau must be > 0");
  check(sets.num_images == static_cast<int>(maps.size()),
        "local_contrastive_loss: sets built for a different batch size");

  const auto plans = plan_weights(sets);
  const double inv_tau = 1.0 / tau;

  LocalLossStats stats;
  double loss = 0.0;

  for (std::size_t gi = 0; gi < sets.groups.size(); ++gi) {
    const auto& g = sets.groups[gi];
    const auto& plan = plans[gi];
    if (g.anchors.empty()) continue;

    const RowMat pool_f = gather_pool(maps, g);
    const std::size_t pool_n = g.pool.size();

    for (std::size_t chunk = 0; chunk < g.anchors.size();
         chunk += kAnchorChunk) {
      const std::size_t chunk_end =
          std::min(chunk + static_cast<std::size_t>(kAnchorChunk),
                   g.anchors.size());
      const std::size_t rows = chunk_end - chunk;

      RowMat anchor_f(rows, pool_f.cols());
      for (std::size_t r = 0; r < rows; ++r)
        anchor_f.row(r) = pool_f.row(g.anchors[chunk + r]);
      RowMat sims = anchor_f * pool_f.transpose();

      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t ai = chunk + r;
        if (plan.dropped[ai]) {
          ++stats.anchors_dropped;
          continue;
        }
        const int a = g.anchors[ai];
        const int a_label =
            sets.strategy == Strategy::selfsup_grid ? -1 : g.pool_label[a];
        const int a_pos =
            sets.strategy == Strategy::selfsup_grid ? g.pool_positive[a] : -1;
        const double* srow = sims.row(r).data();

        auto is_positive = [&](std::size_t p) {
          if (sets.strategy == Strategy::selfsup_grid)
            return static_cast<int>(p) == a_pos;
          return static_cast<int>(p) != a && g.pool_label[p] == a_label;
        };
        auto is_negative = [&](std::size_t p) {
          if (sets.strategy == Strategy::selfsup_grid)
            return static_cast<int>(p) != a && static_cast<int>(p) != a_pos;
          return g.pool_label[p] != a_label;
        };

        // log-sum-exp over each side with max subtraction
        double max_p = -std::numeric_limits<double>::infinity();
        double max_n = max_p;
        std::size_t np = 0;
        for (std::size_t p = 0; p < pool_n; ++p) {
          double s = srow[p] * inv_tau;
          if (is_positive(p)) {
            max_p = std::max(max_p, s);
            ++np;
          } else if (is_negative(p)) {
            max_n = std::max(max_n, s);
          }
        }
        double sum_p = 0.0, sum_n = 0.0, sum_pos_sims = 0.0;
        for (std::size_t p = 0; p < pool_n; ++p) {
          double s = srow[p] * inv_tau;
          if (is_positive(p)) {
            sum_p += std::exp(s - max_p);
            sum_pos_sims += s;
          } else if (is_negative(p)) {
            sum_n += std::exp(s - max_n);
          }
        }
        const double lse_p = max_p + std::log(sum_p);
        const double lse_n = max_n + std::log(sum_n);
        const double inv_np = 1.0 / static_cast<double>(np);

        double term;
        if (opts.per_positive_log) {
          term = -inv_np * sum_pos_sims + lse_n;
        } else {
          term = -inv_np * (lse_p - lse_n);
        }
        const double w = plan.weight[ai];
        loss += w * term;
        ++stats.anchors_used;

        if (grads) {
          // accumulate into dL/d(normalized features)
          const auto& aref = g.pool[a];
          auto& ga = (*grads)[aref.image];
          const int c = maps[0].channels;
          const auto gidx = [&](const FeatureRef& ref, int ch) {
            return (static_cast<std::size_t>(ch) * maps[ref.image].height +
                    ref.row) * maps[ref.image].width + ref.col;
          };
          for (std::size_t p = 0; p < pool_n; ++p) {
            double dterm_ds;
            double s = srow[p] * inv_tau;
            if (is_positive(p)) {
              dterm_ds = opts.per_positive_log
                             ? -inv_np * inv_tau
                             : -inv_np * std::exp(s - lse_p) * inv_tau;
            } else if (is_negative(p)) {
              dterm_ds = inv_np * std::exp(s - lse_n) * inv_tau;
            } else {
              continue;
            }
            const double coeff = w * dterm_ds;
            if (coeff == 0.0) continue;
            const auto& pref = g.pool[p];
            auto& gp = (*grads)[pref.image];
            for (int ch = 0; ch < c; ++ch) {
              ga[gidx(aref, ch)] += coeff * pool_f(p, ch);
              gp[gidx(pref, ch)] += coeff * pool_f(a, ch);
            }
          }
        }
      }
    }
  }

  stats.loss = loss;
  if (stats.anchors_dropped > 0 && opts.warn_on_dropped_anchors) {
    std::cerr << "[contraseg] warning: dropped " << stats.anchors_dropped
              << " anchor(s) with an empty positive or negative set\n";
  }
  return stats;
}

}  // namespace

double local_contrastive_loss(const std::vector<LocalFeatureMap>& maps,
                              const ContrastSets& sets, double tau,
                              const LocalLossOptions& opts) {
  return evaluate(maps, sets, tau, opts, nullptr).loss;
}

LocalLossStats local_contrastive_loss_detailed(
    const std::vector<LocalFeatureMap>& maps, const ContrastSets& sets,
    double tau, const LocalLossOptions& opts) {
  return evaluate(maps, sets, tau, opts, nullptr);
}

LocalLossGrad local_contrastive_loss_grad(
    const std::vector<LocalFeatureMap>& raw_maps, const ContrastSets& sets,
    double tau, const LocalLossOptions& opts) {
  // normalize a private copy; remember raw norms for the chain rule
  std::vector<LocalFeatureMap> maps = raw_maps;
  for (auto& m : maps) m.normalize_pixels();

  std::vector<std::vector<double>> norm_grads(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i)
    norm_grads[i].assign(maps[i].features.size(), 0.0);

  LocalLossStats stats = evaluate(maps, sets, tau, opts, &norm_grads);

  LocalLossGrad out;
  out.loss = stats.loss;
  out.anchors_dropped = stats.anchors_dropped;
  out.grads.resize(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& raw = raw_maps[i];
    const auto& nrm = maps[i];
    auto& g_out = out.grads[i];
    g_out.assign(raw.features.size(), 0.0);
    const int c = raw.channels;
    for (int r = 0; r < raw.height; ++r) {
      for (int col = 0; col < raw.width; ++col) {
        double sq = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          double f = raw.feat(ch, r, col);
          sq += f * f;
        }
        if (sq <= 0.0) continue;  // normalization fallback pixel: no gradient
        double inv_norm = 1.0 / std::sqrt(sq);
        double dot = 0.0;
        for (int ch = 0; ch < c; ++ch)
          dot += norm_grads[i][nrm.fidx(ch, r, col)] * nrm.feat(ch, r, col);
        for (int ch = 0; ch < c; ++ch) {
          double gn = norm_grads[i][nrm.fidx(ch, r, col)];
          g_out[nrm.fidx(ch, r, col)] =
              (gn - dot * nrm.feat(ch, r, col)) * inv_norm;
        }
      }
    }
  }
  return out;
}

double reference_local_loss(const std::vector<LocalFeatureMap>& maps,
                            const ContrastSets& sets, double tau,
                            int max_side) {
  check(tau > 0.0, "reference_local_loss: tau must be > 0");
  for (const auto& m : maps) {
    if (m.height > max_side || m.width > max_side) {
      throw std::invalid_argument(
          "reference_local_loss: map exceeds the oracle size bound");
    }
  }
  const int num_images = static_cast<int>(maps.size());

  auto dot = [&](const FeatureRef& a, const FeatureRef& b) {
    const auto& ma = maps[a.image];
    const auto& mb = maps[b.image];
    double s = 0.0;
    for (int ch = 0; ch < ma.channels; ++ch)
      s += ma.feat(ch, a.row, a.col) * mb.feat(ch, b.row, b.col);
    return s;
  };

  std::vector<double> image_sum(num_images, 0.0);
  std::vector<int> image_blocks(num_images, 0);

  for (std::size_t gi = 0; gi < sets.groups.size(); ++gi) {
    const auto& g = sets.groups[gi];
    std::vector<double> bucket_sum(num_images, 0.0);
    std::vector<int> bucket_cnt(num_images, 0);
    for (int a : g.anchors) {
      const auto positives = sets.positives_of(static_cast<int>(gi), a);
      const auto negatives = sets.negatives_of(static_cast<int>(gi), a);
      if (positives.empty() || negatives.empty()) continue;
      const FeatureRef& anchor = g.pool[a];
      double numer = 0.0, denom = 0.0;
      for (const auto& p : positives) numer += std::exp(dot(anchor, p) / tau);
      for (const auto& n : negatives) denom += std::exp(dot(anchor, n) / tau);
      double t = -(1.0 / static_cast<double>(positives.size())) *
                 std::log(numer / denom);
      bucket_sum[anchor.image] += t;
      bucket_cnt[anchor.image] += 1;
    }
    for (int i = 0; i < num_images; ++i) {
      if (bucket_cnt[i] > 0) {
        image_sum[i] += bucket_sum[i] / bucket_cnt[i];
        image_blocks[i] += 1;
      }
    }
  }

  double total = 0.0;
  for (int i = 0; i < num_images; ++i) {
    if (image_blocks[i] > 0) total += image_sum[i] / image_blocks[i];
  }
  return total / num_images;
}

}  // namespace contraseg::losses
