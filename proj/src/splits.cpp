#include "contraseg/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "contraseg/rng.hpp"

namespace contraseg::data {

DatasetSplits split_and_select(const std::vector<Volume>& corpus,
                               const std::array<double, 3>& ratios,
                               double label_fraction, std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  check(std::fabs(sum - 1.0) < 1e-6, "split: ratios must sum to 1");
  check(ratios[0] > 0 && ratios[1] > 0 && ratios[2] > 0,
        "split: every ratio must be positive");
  check(label_fraction > 0.0 && label_fraction <= 1.0,
        "split: label_fraction must lie in (0, 1]");
  const int n = static_cast<int>(corpus.size());
  check(n >= 3, "split: corpus too small to populate three splits");

  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = corpus[i].id;
  RandomState rng(make_rng(derive_seed(seed, "split-shuffle")));
  std::shuffle(ids.begin(), ids.end(), rng);

  int n_train = static_cast<int>(std::lround(ratios[0] * n));
  int n_val = static_cast<int>(std::lround(ratios[1] * n));
  n_train = std::clamp(n_train, 1, n - 2);
  n_val = std::clamp(n_val, 1, n - n_train - 1);
  int n_test = n - n_train - n_val;
  check(n_test >= 1, "split: corpus too small to give each split a volume");

  DatasetSplits s;
  s.train.assign(ids.begin(), ids.begin() + n_train);
  s.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  s.test.assign(ids.begin() + n_train + n_val, ids.end());

  int n_labeled = std::max<int>(
      1, static_cast<int>(std::lround(label_fraction * n_train)));
  n_labeled = std::min(n_labeled, n_train);
  std::vector<std::string> train_copy = s.train;
  RandomState label_rng(make_rng(derive_seed(seed, "split-labeled")));
  std::shuffle(train_copy.begin(), train_copy.end(), label_rng);
  s.labeled_train.assign(train_copy.begin(), train_copy.begin() + n_labeled);
  s.unlabeled_train.assign(train_copy.begin() + n_labeled, train_copy.end());
  // keep listing order stable for reproducible logs
  std::sort(s.labeled_train.begin(), s.labeled_train.end());
  std::sort(s.unlabeled_train.begin(), s.unlabeled_train.end());
  return s;
}

}  // namespace contraseg::data
