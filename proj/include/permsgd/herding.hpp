// Herding / vector balancing: orderings of a zero-sum batch of vectors that
// keep every prefix sum small.
#pragma once

#include <cstdint>
#include <vector>

#include "permsgd/linalg.hpp"

namespace permsgd {

// A batch of n d-dimensional vectors z_1..z_n that sums to (numerically) zero.
// Callers are expected to center and normalize so max_i ||z_i|| <= 1; both
// properties are validated by the herding entry points up to `tolerance`.
struct VectorBatch {
  std::vector<Vec> vectors;
  double tolerance = 1e-8;

  int n() const { return static_cast<int>(vectors.size()); }
  int d() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
};

// An ordering of the batch together with the prefix-sum bound it achieves:
// achieved_H = max_k || sum_{j<=k} z_{order[j]} ||.
struct HerdingResult {
  std::vector<int> order;   // a permutation of 0..n-1
  double achieved_H = 0.0;
};

// Prefix-sum norms || sum_{j<=k} z_{order[j]} || for k = 1..n.
// `order` must be a permutation of 0..n-1.
std::vector<double> prefix_norm_profile(const VectorBatch& batch,
                                        const std::vector<int>& order);

// Greedy herding: repeatedly append the unused vector minimizing the norm of
// the new prefix sum (ties broken toward the lowest index). O(n^2 d).
HerdingResult herd_greedy(const VectorBatch& batch);

// Randomized self-balancing signed walk: assigns signs eps_i = +-1 by a
// balancing walk over the batch in input order (the probability of +1 is
// tilted against the current signed prefix), then emits all +1 indices in
// increasing order followed by all -1 indices in decreasing order. With high
// probability the achieved prefix bound is O(sqrt(d log n)). Deterministic
// given rng_seed.
HerdingResult herd_signwalk(const VectorBatch& batch, std::uint64_t rng_seed);

}  // namespace permsgd
