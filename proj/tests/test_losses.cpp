#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "contraseg/contrast_sets.hpp"
#include "contraseg/global_loss.hpp"
#include "contraseg/local_loss.hpp"
#include "contraseg/rng.hpp"

using namespace contraseg;
using namespace contraseg::losses;

namespace {

// Random unit-norm feature maps with background-biased labels.
std::vector<LocalFeatureMap> random_maps(RandomState& rng, int batch, int side,
                                         int channels, int num_fg_classes,
                                         bool labeled = true) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> cls(1, num_fg_classes);
  std::vector<LocalFeatureMap> maps;
  for (int i = 0; i < batch; ++i) {
    LocalFeatureMap m(channels, side, side, i);
    for (auto& f : m.features) f = gauss(rng);
    m.normalize_pixels();
    if (labeled) {
      m.labels.resize(static_cast<std::size_t>(side) * side);
      for (auto& lab : m.labels) lab = unif(rng) < 0.4 ? 0 : cls(rng);
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

// Hand-assembled single-anchor instance: pool of three features in one map,
// anchor + one positive + one negative.
struct SingleAnchorCase {
  std::vector<LocalFeatureMap> maps;
  ContrastSets sets;
};

SingleAnchorCase single_anchor_case(double pos_sim, double neg_sim) {
  SingleAnchorCase c;
  LocalFeatureMap m(2, 1, 3, 0);
  auto set_pixel = [&](int col, double x, double y) {
    m.feat(0, 0, col) = x;
    m.feat(1, 0, col) = y;
  };
  set_pixel(0, 1.0, 0.0);  // anchor
  set_pixel(1, pos_sim, std::sqrt(std::max(0.0, 1.0 - pos_sim * pos_sim)));
  set_pixel(2, neg_sim, std::sqrt(std::max(0.0, 1.0 - neg_sim * neg_sim)));
  m.labels = {1, 1, 2};
  c.maps.push_back(std::move(m));

  ContrastGroup g;
  g.pool = {{0, 0, 0}, {0, 0, 1}, {0, 0, 2}};
  g.pool_label = {1, 1, 2};
  g.anchors = {0};
  c.sets.strategy = Strategy::supervised_full;
  c.sets.num_images = 1;
  c.sets.groups.push_back(std::move(g));
  return c;
}

std::uint64_t enumerate_interactions(const ContrastSets& sets) {
  std::uint64_t total = 0;
  for (std::size_t gi = 0; gi < sets.groups.size(); ++gi) {
    for (int a : sets.groups[gi].anchors) {
      total += sets.positives_of(static_cast<int>(gi), a).size();
      total += sets.negatives_of(static_cast<int>(gi), a).size();
    }
  }
  return total;
}

}  // namespace

TEST_CASE("global loss: single pair is exactly zero") {
  std::vector<std::vector<double>> z = {{1.0, 0.0}, {0.6, 0.8}};
  std::vector<int> pairing = {1, 0};
  CHECK(global_contrastive_loss(z, pairing, 0.1) == 0.0);
  CHECK(global_contrastive_loss(z, pairing, 1.0) == 0.0);
}

TEST_CASE("global loss: four identical embeddings give ln 3") {
  std::vector<std::vector<double>> z(4, std::vector<double>{1.0, 0.0});
  std::vector<int> pairing = {1, 0, 3, 2};
  for (double tau : {0.05, 0.1, 0.5, 1.0}) {
    CHECK(global_contrastive_loss(z, pairing, tau) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
}

TEST_CASE("global loss: two orthogonal pairs match direct evaluation") {
  std::vector<std::vector<double>> z = {
      {1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}};
  std::vector<int> pairing = {1, 0, 3, 2};
  // every term: -log(e / (e + 2)), evaluated directly from Eq. 1
  double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  CHECK(global_contrastive_loss(z, pairing, 1.0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("global loss: is nonnegative and rejects bad input") {
  RandomState rng(make_rng(derive_seed(42, "global-nonneg")));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int b = 1 + static_cast<int>(rng() % 4);
    std::vector<std::vector<double>> z(2 * b, std::vector<double>(3));
    for (auto& v : z) {
      double sq = 0;
      for (auto& x : v) {
        x = gauss(rng);
        sq += x * x;
      }
      for (auto& x : v) x /= std::sqrt(sq);
    }
    std::vector<int> pairing(2 * b);
    for (int i = 0; i < 2 * b; i += 2) {
      pairing[i] = i + 1;
      pairing[i + 1] = i;
    }
    CHECK(global_contrastive_loss(z, pairing, 0.2) >= 0.0);
  }
  std::vector<std::vector<double>> z3(3, std::vector<double>{1.0, 0.0});
  CHECK_THROWS(global_contrastive_loss(z3, {1, 0, 2}, 0.1));  // odd batch
  std::vector<std::vector<double>> z2(2, std::vector<double>{1.0, 0.0});
  CHECK_THROWS(global_contrastive_loss(z2, {0, 1}, 0.1));  // fixed points
  CHECK_THROWS(global_contrastive_loss(z2, {1, 0}, 0.0));  // tau <= 0
}

TEST_CASE("global loss: permutation invariance") {
  RandomState rng(make_rng(derive_seed(7, "global-perm")));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 8;
  std::vector<std::vector<double>> z(n, std::vector<double>(4));
  for (auto& v : z) {
    double sq = 0;
    for (auto& x : v) {
      x = gauss(rng);
      sq += x * x;
    }
    for (auto& x : v) x /= std::sqrt(sq);
  }
  std::vector<int> pairing = {1, 0, 3, 2, 5, 4, 7, 6};
  double base = global_contrastive_loss(z, pairing, 0.1);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<double>> zp(n);
  std::vector<int> inv(n), pp(n);
  for (int i = 0; i < n; ++i) inv[perm[i]] = i;
  for (int i = 0; i < n; ++i) {
    zp[inv[i]] = z[i];
  }
  for (int i = 0; i < n; ++i) pp[inv[i]] = inv[pairing[i]];
  double permuted = global_contrastive_loss(zp, pp, 0.1);
  CHECK(permuted == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("local loss: closed-form single anchor cases") {
  {
    auto c = single_anchor_case(1.0, 0.0);
    LocalLossOptions opts;
    opts.warn_on_dropped_anchors = false;
    double v = local_contrastive_loss(c.maps, c.sets, 1.0, opts);
    CHECK(v == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(reference_local_loss(c.maps, c.sets, 1.0) ==
          doctest::Approx(-1.0).epsilon(1e-12));
  }
  {
    auto c = single_anchor_case(0.0, 0.0);
    double v = local_contrastive_loss(c.maps, c.sets, 1.0);
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(reference_local_loss(c.maps, c.sets, 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("local loss: oracle equivalence battery across strategies") {
  struct StrategyCase {
    Strategy mode;
    int stride, block, grid;
  };
  const std::vector<StrategyCase> cases = {
      {Strategy::supervised_full, 1, 0, 0},
      {Strategy::supervised_stride, 1, 0, 0},
      {Strategy::supervised_stride, 2, 0, 0},
      {Strategy::supervised_stride, 4, 0, 0},
      {Strategy::supervised_block, 0, 4, 0},
      {Strategy::supervised_block, 0, 8, 0},
      {Strategy::selfsup_grid, 0, 0, 9},
  };
  LocalLossOptions opts;
  opts.warn_on_dropped_anchors = false;
  int checked = 0;
  for (int instance = 0; instance < 100; ++instance) {
    RandomState rng(make_rng(derive_seed(1000, "oracle-battery", instance)));
    int batch = (rng() % 2 == 0) ? 2 : 4;
    int channels = 2 + static_cast<int>(rng() % 3);
    auto maps = random_maps(rng, batch, 8, channels, 3);
    for (const auto& c : cases) {
      auto sets = build_contrast_sets(maps, c.mode, c.stride, c.block, c.grid);
      double fast = local_contrastive_loss(maps, sets, 0.1, opts);
      double ref = reference_local_loss(maps, sets, 0.1);
      CHECK(std::fabs(fast - ref) <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 700);
}

TEST_CASE("local loss: stride=1 and single-block degenerate to full") {
  for (int instance = 0; instance < 20; ++instance) {
    RandomState rng(make_rng(derive_seed(55, "degeneracy", instance)));
    auto maps = random_maps(rng, 2, 8, 3, 2);
    // force some foreground on every map
    for (auto& m : maps) m.labels[0] = 1;
    LocalLossOptions opts;
    opts.warn_on_dropped_anchors = false;
    auto full = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
    auto stride1 =
        build_contrast_sets(maps, Strategy::supervised_stride, 1, 0, 0);
    auto one_block =
        build_contrast_sets(maps, Strategy::supervised_block, 0, 8, 0);
    double lf = local_contrastive_loss(maps, full, 0.1, opts);
    CHECK(local_contrastive_loss(maps, stride1, 0.1, opts) == lf);
    CHECK(local_contrastive_loss(maps, one_block, 0.1, opts) == lf);
  }
}

TEST_CASE("local loss: permutation invariance") {
  RandomState rng(make_rng(derive_seed(91, "local-perm")));
  auto maps = random_maps(rng, 4, 8, 3, 3);
  LocalLossOptions opts;
  opts.warn_on_dropped_anchors = false;
  auto sets = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
  double base = local_contrastive_loss(maps, sets, 0.1, opts);

  std::vector<int> perm = {2, 0, 3, 1};
  std::vector<LocalFeatureMap> permuted(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    permuted[perm[i]] = maps[i];
    permuted[perm[i]].image_index = static_cast<int>(perm[i]);
  }
  auto sets_p = build_contrast_sets(permuted, Strategy::supervised_full, 1, 0, 0);
  double shuffled = local_contrastive_loss(permuted, sets_p, 0.1, opts);
  CHECK(shuffled == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("local loss: monotonic in positive and negative similarity") {
  LocalLossOptions opts;
  opts.warn_on_dropped_anchors = false;
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {-0.5, 0.0, 0.5, 0.9}) {
    auto c = single_anchor_case(s, 0.0);
    double v = local_contrastive_loss(c.maps, c.sets, 0.5, opts);
    CHECK(v < prev);  // higher positive similarity -> strictly lower loss
    prev = v;
  }
  prev = -std::numeric_limits<double>::infinity();
  for (double s : {-0.5, 0.0, 0.5, 0.9}) {
    auto c = single_anchor_case(0.3, s);
    double v = local_contrastive_loss(c.maps, c.sets, 0.5, opts);
    CHECK(v > prev);  // higher negative similarity -> strictly higher loss
    prev = v;
  }
}

TEST_CASE("local loss: empty anchor set returns zero") {
  RandomState rng(make_rng(derive_seed(3, "empty-omega")));
  auto maps = random_maps(rng, 2, 4, 2, 2);
  for (auto& m : maps) std::fill(m.labels.begin(), m.labels.end(), 0);
  auto sets = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
  CHECK(sets.num_anchors() == 0);
  CHECK(local_contrastive_loss(maps, sets, 0.1) == 0.0);
  CHECK(reference_local_loss(maps, sets, 0.1) == 0.0);
  CHECK(count_pairwise_interactions(sets) == 0);
}

TEST_CASE("local loss: anchors with an empty side are dropped, not fatal") {
  // single foreground class on both maps: every anchor has |N| = 0
  RandomState rng(make_rng(derive_seed(4, "dropped")));
  auto maps = random_maps(rng, 2, 4, 2, 1);
  for (auto& m : maps) std::fill(m.labels.begin(), m.labels.end(), 1);
  auto sets = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
  LocalLossOptions opts;
  opts.warn_on_dropped_anchors = false;
  auto stats = local_contrastive_loss_detailed(maps, sets, 0.1, opts);
  CHECK(stats.anchors_dropped == 32);
  CHECK(stats.anchors_used == 0);
  CHECK(stats.loss == 0.0);
}

TEST_CASE("local loss: per-positive-log variant on the single-anchor case") {
  // with one positive the variant equals the printed form
  auto c = single_anchor_case(0.8, 0.1);
  LocalLossOptions printed, variant;
  variant.per_positive_log = true;
  CHECK(local_contrastive_loss(c.maps, c.sets, 0.5, variant) ==
        doctest::Approx(local_contrastive_loss(c.maps, c.sets, 0.5, printed))
            .epsilon(1e-12));
  // with two positives they differ (Jensen): log of mean vs mean of logs
  LocalFeatureMap m(2, 1, 4, 0);
  auto set_pixel = [&](int col, double x, double y) {
    m.feat(0, 0, col) = x;
    m.feat(1, 0, col) = y;
  };
  set_pixel(0, 1.0, 0.0);
  set_pixel(1, 1.0, 0.0);
  set_pixel(2, 0.0, 1.0);
  set_pixel(3, 0.2, std::sqrt(1.0 - 0.04));
  m.labels = {1, 1, 1, 2};
  std::vector<LocalFeatureMap> maps{std::move(m)};
  auto sets = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
  double a = local_contrastive_loss(maps, sets, 0.5, printed);
  double b = local_contrastive_loss(maps, sets, 0.5, variant);
  CHECK(a != doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("set construction: supervised invariants hold on random instances") {
  for (int instance = 0; instance < 25; ++instance) {
    RandomState rng(make_rng(derive_seed(600, "set-props", instance)));
    auto maps = random_maps(rng, 2, 8, 2, 3);
    for (auto mode : {Strategy::supervised_full, Strategy::supervised_stride,
                      Strategy::supervised_block}) {
      auto sets = build_contrast_sets(maps, mode, 2, 4, 0);
      for (std::size_t gi = 0; gi < sets.groups.size(); ++gi) {
        const auto& g = sets.groups[gi];
        for (int a : g.anchors) {
          int lab = g.pool_label[a];
          REQUIRE(lab > 0);
          auto pos = sets.positives_of(static_cast<int>(gi), a);
          auto neg = sets.negatives_of(static_cast<int>(gi), a);
          std::size_t bg_in_pool = 0, bg_in_neg = 0;
          for (std::size_t p = 0; p < g.pool.size(); ++p)
            if (g.pool_label[p] == 0) ++bg_in_pool;
          for (const auto& ref : pos) {
            CHECK(maps[ref.image].label(ref.row, ref.col) == lab);
            CHECK(!(ref == g.pool[a]));
          }
          for (const auto& ref : neg) {
            int nl = maps[ref.image].label(ref.row, ref.col);
            CHECK(nl != lab);
            if (nl == 0) ++bg_in_neg;
          }
          CHECK(bg_in_neg == bg_in_pool);  // background all lands in N
        }
      }
    }
  }
}

TEST_CASE("set construction: selfsup grid shape and pairing") {
  RandomState rng(make_rng(derive_seed(601, "selfsup-sets")));
  auto maps = random_maps(rng, 4, 8, 3, 3, /*labeled=*/false);
  auto sets = build_contrast_sets(maps, Strategy::selfsup_grid, 0, 0, 9);
  REQUIRE(sets.groups.size() == 1);
  const auto& g = sets.groups[0];
  CHECK(g.pool.size() == 4 * 9);
  CHECK(g.anchors.size() == 4 * 9);
  for (int a : g.anchors) {
    auto pos = sets.positives_of(0, a);
    REQUIRE(pos.size() == 1);
    // positive sits at the same location in the paired image
    CHECK(pos[0].row == g.pool[a].row);
    CHECK(pos[0].col == g.pool[a].col);
    CHECK(pos[0].image == (g.pool[a].image ^ 1));
    auto neg = sets.negatives_of(0, a);
    CHECK(neg.size() == 4 * 9 - 2);
  }
  CHECK_THROWS(build_contrast_sets(maps, Strategy::selfsup_grid, 0, 0, 7));
  auto pts13 = selfsup_grid_positions(32, 13);
  CHECK(pts13.size() == 13);
}

TEST_CASE("set construction: stride lattice and block partition counts") {
  RandomState rng(make_rng(derive_seed(602, "lattice")));
  auto maps = random_maps(rng, 1, 8, 2, 1);
  std::fill(maps[0].labels.begin(), maps[0].labels.end(), 1);
  auto sets = build_contrast_sets(maps, Strategy::supervised_stride, 4, 0, 0);
  CHECK(sets.groups[0].pool.size() == 4);  // 2x2 lattice on an 8x8 map
  CHECK(sets.groups[0].anchors.size() == 4);

  // 32x32, block 16 -> 4 regions; one all-background quadrant contributes none
  LocalFeatureMap big(2, 32, 32, 0);
  for (auto& f : big.features) f = 1.0;
  big.normalize_pixels();
  big.labels.assign(32 * 32, 0);
  for (int r = 0; r < 32; ++r)
    for (int col = 0; col < 32; ++col)
      if (!(r < 16 && col < 16)) big.labels[r * 32 + col] = 1;  // quadrant 0 empty
  std::vector<LocalFeatureMap> one{big};
  auto bsets = build_contrast_sets(one, Strategy::supervised_block, 0, 16, 0);
  CHECK(bsets.groups.size() == 3);
  std::size_t anchors = bsets.num_anchors();
  CHECK(anchors == 3 * 16 * 16);

  CHECK_THROWS(build_contrast_sets(one, Strategy::supervised_block, 0, 5, 0));
  CHECK_THROWS(build_contrast_sets(one, Strategy::supervised_stride, 0, 0, 0));
}

TEST_CASE("set construction: uniform-class pair has |P|=2HW-1 and |N|=0") {
  RandomState rng(make_rng(derive_seed(603, "uniform-pair")));
  auto maps = random_maps(rng, 2, 4, 2, 1);
  for (auto& m : maps) std::fill(m.labels.begin(), m.labels.end(), 1);
  auto sets = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
  for (int a : sets.groups[0].anchors) {
    CHECK(sets.positives_of(0, a).size() == 2 * 4 * 4 - 1);
    CHECK(sets.negatives_of(0, a).size() == 0);
  }
}

TEST_CASE("interaction count matches direct enumeration") {
  for (int instance = 0; instance < 10; ++instance) {
    RandomState rng(make_rng(derive_seed(604, "count-enum", instance)));
    auto maps = random_maps(rng, 2, 8, 2, 3);
    for (auto mode_case : {std::tuple{Strategy::supervised_full, 1, 0, 0},
                           std::tuple{Strategy::supervised_stride, 2, 0, 0},
                           std::tuple{Strategy::supervised_block, 0, 4, 0},
                           std::tuple{Strategy::selfsup_grid, 0, 0, 9}}) {
      auto [mode, stride, block, grid] = mode_case;
      auto sets = build_contrast_sets(maps, mode, stride, block, grid);
      CHECK(count_pairwise_interactions(sets) == enumerate_interactions(sets));
    }
  }
}

TEST_CASE("interaction count: stride reduction on a uniform pair") {
  RandomState rng(make_rng(derive_seed(605, "count-stride")));
  auto maps = random_maps(rng, 2, 8, 2, 1);
  for (auto& m : maps) std::fill(m.labels.begin(), m.labels.end(), 1);
  auto full = build_contrast_sets(maps, Strategy::supervised_full, 1, 0, 0);
  auto strided = build_contrast_sets(maps, Strategy::supervised_stride, 2, 0, 0);
  std::uint64_t cf = count_pairwise_interactions(full);
  std::uint64_t cs = count_pairwise_interactions(strided);
  CHECK(cf == 128ull * 127ull);  // 2*8*8 anchors x (2*8*8 - 1) same-class partners
  CHECK(cs == 32ull * 31ull);
  // the s^4 claim holds up to the self-exclusion -1 in each factor
  double ratio = static_cast<double>(cf) / static_cast<double>(cs);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("gradient check: global loss vs central differences") {
  const double step = 1e-5;
  for (int instance = 0; instance < 10; ++instance) {
    RandomState rng(make_rng(derive_seed(700, "grad-global", instance)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    int b = 1 + static_cast<int>(rng() % 2);
    int dim = 3 + static_cast<int>(rng() % 3);
    std::vector<std::vector<double>> raw(2 * b, std::vector<double>(dim));
    for (auto& v : raw)
      for (auto& x : v) x = gauss(rng);
    std::vector<int> pairing(2 * b);
    for (int i = 0; i < 2 * b; i += 2) {
      pairing[i] = i + 1;
      pairing[i + 1] = i;
    }
    auto analytic = global_contrastive_loss_grad(raw, pairing, 0.2);
    auto eval = [&](const std::vector<std::vector<double>>& r) {
      return global_contrastive_loss_grad(r, pairing, 0.2).loss;
    };
    double num2 = 0.0, diff2 = 0.0;
    for (int i = 0; i < 2 * b; ++i) {
      for (int d = 0; d < dim; ++d) {
        auto plus = raw, minus = raw;
        plus[i][d] += step;
        minus[i][d] -= step;
        double fd = (eval(plus) - eval(minus)) / (2 * step);
        double a = analytic.grads[i][d];
        num2 += a * a;
        diff2 += (a - fd) * (a - fd);
      }
    }
    CHECK(std::sqrt(diff2) <= 1e-4 * std::max(1e-8, std::sqrt(num2)));
  }
}

TEST_CASE("gradient check: local loss vs central differences") {
  const double step = 1e-5;
  LocalLossOptions opts;
  opts.warn_on_dropped_anchors = false;
  for (int instance = 0; instance < 10; ++instance) {
    RandomState rng(make_rng(derive_seed(701, "grad-local", instance)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto maps = random_maps(rng, 2, 4, 3, 2);
    // keep features away from unit norm so the chain rule is exercised
    for (auto& m : maps)
      for (auto& f : m.features) f = 0.5 + 0.5 * gauss(rng);
    auto strategies = {std::tuple{Strategy::supervised_full, 1, 0, 0},
                       std::tuple{Strategy::supervised_block, 0, 2, 0},
                       std::tuple{Strategy::selfsup_grid, 0, 0, 9}};
    for (auto [mode, stride, block, grid] : strategies) {
      auto sets = build_contrast_sets(maps, mode, stride, block, grid);
      auto analytic = local_contrastive_loss_grad(maps, sets, 0.2, opts);
      auto eval = [&](const std::vector<LocalFeatureMap>& m) {
        std::vector<LocalFeatureMap> nm = m;
        for (auto& x : nm) x.normalize_pixels();
        return local_contrastive_loss(nm, sets, 0.2, opts);
      };
      double num2 = 0.0, diff2 = 0.0;
      for (std::size_t mi = 0; mi < maps.size(); ++mi) {
        for (std::size_t f = 0; f < maps[mi].features.size(); ++f) {
          auto plus = maps, minus = maps;
          plus[mi].features[f] += step;
          minus[mi].features[f] -= step;
          double fd = (eval(plus) - eval(minus)) / (2 * step);
          double a = analytic.grads[mi][f];
          num2 += a * a;
          diff2 += (a - fd) * (a - fd);
        }
      }
      CHECK(std::sqrt(diff2) <= 1e-4 * std::max(1e-8, std::sqrt(num2)));
    }
  }
}

TEST_CASE("oracle refuses oversized maps") {
  RandomState rng(make_rng(derive_seed(9, "oracle-bound")));
  auto maps = random_maps(rng, 2, 32, 2, 2);
  auto sets = build_contrast_sets(maps, Strategy::supervised_stride, 8, 0, 0);
  CHECK_THROWS(reference_local_loss(maps, sets, 0.1));
}
