#include "permsgd/herding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "permsgd/rng.hpp"

namespace permsgd {

namespace {

void validate_batch(const VectorBatch& batch) {
  if (batch.vectors.empty()) throw std::invalid_argument("herding: empty batch");
  const std::size_t d = batch.vectors.front().size();
  if (d == 0) throw std::invalid_argument("herding: zero-dimensional vectors");
  Vec sum(d, 0.0);
  double max_norm = 0.0;
  for (const Vec& z : batch.vectors) {
    if (z.size() != d) throw std::invalid_argument("herding: inconsistent dimensions");
    axpy(1.0, z, sum);
    max_norm = std::max(max_norm, norm2(z));
  }
  if (norm2(sum) > batch.tolerance) {
    throw std::invalid_argument("herding: batch does not sum to zero within tolerance");
  }
  if (max_norm > 1.0 + batch.tolerance) {
    throw std::invalid_argument("herding: vectors must be normalized to max norm <= 1");
  }
}

void validate_order(int n, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != n) {
    throw std::invalid_argument("herding: order has wrong length");
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int idx : order) {
    if (idx < 0 || idx >= n || seen[static_cast<std::size_t>(idx)]) {
      throw std::invalid_argument("herding: order is not a permutation of 0..n-1");
    }
    seen[static_cast<std::size_t>(idx)] = 1;
  }
}

double max_prefix_norm(const VectorBatch& batch, const std::vector<int>& order) {
  Vec sum(static_cast<std::size_t>(batch.d()), 0.0);
  double worst = 0.0;
  for (int idx : order) {
    axpy(1.0, batch.vectors[static_cast<std::size_t>(idx)], sum);
    worst = std::max(worst, norm2(sum));
  }
  return worst;
}

}  // namespace

std::vector<double> prefix_norm_profile(const VectorBatch& batch,
                                        const std::vector<int>& order) {
  if (batch.vectors.empty()) throw std::invalid_argument("herding: empty batch");
  validate_order(batch.n(), order);
  std::vector<double> profile;
  profile.reserve(order.size());
  Vec sum(static_cast<std::size_t>(batch.d()), 0.0);
  for (int idx : order) {
    axpy(1.0, batch.vectors[static_cast<std::size_t>(idx)], sum);
    profile.push_back(norm2(sum));
  }
  return profile;
}

HerdingResult herd_greedy(const VectorBatch& batch) {
  validate_batch(batch);
  const int n = batch.n();
  const std::size_t d = static_cast<std::size_t>(batch.d());

  HerdingResult result;
  result.order.reserve(static_cast<std::size_t>(n));
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  Vec sum(d, 0.0);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    double best_norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const Vec& z = batch.vectors[static_cast<std::size_t>(i)];
      double cand = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double v = sum[j] + z[j];
        cand += v * v;
      }
      if (best < 0 || cand < best_norm2) {
        best = i;
        best_norm2 = cand;
      }
    }
    used[static_cast<std::size_t>(best)] = 1;
    axpy(1.0, batch.vectors[static_cast<std::size_t>(best)], sum);
    result.order.push_back(best);
  }
  result.achieved_H = max_prefix_norm(batch, result.order);
  return result;
}

HerdingResult herd_signwalk(const VectorBatch& batch, std::uint64_t rng_seed) {
  validate_batch(batch);
  const int n = batch.n();
  const std::size_t d = static_cast<std::size_t>(batch.d());
  Rng rng(rng_seed);

  // Self-balancing walk: the sign of each vector is drawn with probability
  // tilted against its alignment with the current signed prefix sum, which
  // keeps ||w|| of order c with high probability.
  const double c = std::sqrt(2.0 * static_cast<double>(d) *
                             std::log(2.0 * static_cast<double>(n)));
  std::vector<int> sign(static_cast<std::size_t>(n), 0);
  Vec w(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const Vec& z = batch.vectors[static_cast<std::size_t>(i)];
    const double align = dot(w, z);
    const double p_plus = std::clamp(0.5 * (1.0 - align / c), 0.0, 1.0);
    const int s = rng.next_double() < p_plus ? 1 : -1;
    sign[static_cast<std::size_t>(i)] = s;
    axpy(static_cast<double>(s), z, w);
  }

  // Emit +1 indices in increasing order, then -1 indices in decreasing order:
  // every prefix sum of the emitted order is half of (plain prefix +- signed
  // prefix) of the input order, so both stay small together.
  HerdingResult result;
  result.order.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (sign[static_cast<std::size_t>(i)] > 0) result.order.push_back(i);
  }
  for (int i = n - 1; i >= 0; --i) {
    if (sign[static_cast<std::size_t>(i)] < 0) result.order.push_back(i);
  }
  result.achieved_H = max_prefix_norm(batch, result.order);
  return result;
}

}  // namespace permsgd
