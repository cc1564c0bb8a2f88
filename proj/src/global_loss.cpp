#include "contraseg/global_loss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace contraseg::losses {

void validate_pair_index(const std::vector<int>& pair_index, int n) {
  check(static_cast<int>(pair_index.size()) == n,
        "pair_index size does not match batch");
  for (int i = 0; i < n; ++i) {
    int j = pair_index[i];
    check(j >= 0 && j < n, "pair_index out of range");
    check(j != i, "pair_index has a fixed point");
    check(pair_index[j] == i, "pair_index is not an involution");
  }
}

namespace {

struct Prepared {
  int n = 0;
  int dim = 0;
  std::vector<std::vector<double>> sims;  // n x n, diagonal unused
};

Prepared similarities(const std::vector<std::vector<double>>& z,
                      const std::vector<int>& pair_index, double tau) {
  check(tau > 0.0, "global_contrastive_loss: tau must be > 0");
  const int n = static_cast<int>(z.size());
  check(n >= 2 && n % 2 == 0,
        "global_contrastive_loss: batch must hold an even number (>= 2) of embeddings");
  validate_pair_index(pair_index, n);
  const int dim = static_cast<int>(z[0].size());
  for (const auto& v : z)
    check(static_cast<int>(v.size()) == dim,
          "global_contrastive_loss: embedding dims differ");

  Prepared p;
  p.n = n;
  p.dim = dim;
  p.sims.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += z[i][d] * z[k][d];
      p.sims[i][k] = s;
      p.sims[k][i] = s;
    }
  }
  return p;
}

}  // namespace

double global_contrastive_loss(const std::vector<std::vector<double>>& z,
                               const std::vector<int>& pair_index, double tau) {
  const Prepared p = similarities(z, pair_index, tau);
  const double inv_tau = 1.0 / tau;
  double loss = 0.0;
  for (int i = 0; i < p.n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < p.n; ++k)
      if (k != i) mx = std::max(mx, p.sims[i][k] * inv_tau);
    double sum = 0.0;
    for (int k = 0; k < p.n; ++k)
      if (k != i) sum += std::exp(p.sims[i][k] * inv_tau - mx);
    double lse = mx + std::log(sum);
    loss += lse - p.sims[i][pair_index[i]] * inv_tau;
  }
  return loss / p.n;
}

GlobalLossGrad global_contrastive_loss_grad(
    const std::vector<std::vector<double>>& raw_z,
    const std::vector<int>& pair_index, double tau) {
  const int n = static_cast<int>(raw_z.size());
  std::vector<std::vector<double>> z(n);
  std::vector<double> norms(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double sq = 0.0;
    for (double v : raw_z[i]) sq += v * v;
    norms[i] = std::sqrt(sq);
    z[i] = raw_z[i];
    if (norms[i] > 0.0) {
      for (double& v : z[i]) v /= norms[i];
    } else {
      if (!z[i].empty()) z[i][0] = 1.0;
      norms[i] = 0.0;
    }
  }

  const Prepared p = similarities(z, pair_index, tau);
  const double inv_tau = 1.0 / tau;
  const double inv_n = 1.0 / p.n;

  GlobalLossGrad out;
  // dL/ds accumulated per ordered pair, then folded onto embeddings
  std::vector<std::vector<double>> ds(n, std::vector<double>(n, 0.0));
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
      if (k != i) mx = std::max(mx, p.sims[i][k] * inv_tau);
    double sum = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != i) sum += std::exp(p.sims[i][k] * inv_tau - mx);
    double lse = mx + std::log(sum);
    loss += lse - p.sims[i][pair_index[i]] * inv_tau;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      double soft = std::exp(p.sims[i][k] * inv_tau - lse);
      double d = inv_n * inv_tau * soft;  // from the log-sum-exp
      if (k == pair_index[i]) d -= inv_n * inv_tau;  // from the positive term
      ds[i][k] += d;
    }
  }
  out.loss = loss * inv_n;

  std::vector<std::vector<double>> gz(n, std::vector<double>(p.dim, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      double d = ds[i][k];
      if (d == 0.0) continue;
      for (int c = 0; c < p.dim; ++c) {
        gz[i][c] += d * z[k][c];
        gz[k][c] += d * z[i][c];
      }
    }
  }

  // chain through the L2 normalization
  out.grads.assign(n, std::vector<double>(p.dim, 0.0));
  for (int i = 0; i < n; ++i) {
    if (norms[i] <= 0.0) continue;
    double dot = 0.0;
    for (int c = 0; c < p.dim; ++c) dot += gz[i][c] * z[i][c];
    for (int c = 0; c < p.dim; ++c)
      out.grads[i][c] = (gz[i][c] - dot * z[i][c]) / norms[i];
  }
  return out;
}

}  // namespace contraseg::losses
