// Unit tests for greedy herding and the randomized sign-walk reordering.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "permsgd/herding.hpp"
#include "permsgd/linalg.hpp"
#include "permsgd/rng.hpp"

using namespace permsgd;

namespace {

// Random batch: n standard-normal d-vectors, centered (twice, for numerical
// exactness) and scaled so the largest norm is 1.
VectorBatch random_centered_batch(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  VectorBatch batch;
  batch.vectors.assign(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d)));
  for (auto& z : batch.vectors) {
    for (double& v : z) v = rng.next_normal();
  }
  for (int pass = 0; pass < 2; ++pass) {
    Vec mean(static_cast<std::size_t>(d), 0.0);
    for (const auto& z : batch.vectors) axpy(1.0, z, mean);
    scale(1.0 / static_cast<double>(n), mean);
    for (auto& z : batch.vectors) axpy(-1.0, mean, z);
  }
  double max_norm = 0.0;
  for (const auto& z : batch.vectors) max_norm = std::max(max_norm, norm2(z));
  for (auto& z : batch.vectors) scale(1.0 / max_norm, z);
  return batch;
}

double random_order_H(const VectorBatch& batch, Rng& rng) {
  std::vector<int> order(static_cast<std::size_t>(batch.n()));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto profile = prefix_norm_profile(batch, order);
  return *std::max_element(profile.begin(), profile.end());
}

bool is_permutation_of_n(const std::vector<int>& order, int n) {
  if (static_cast<int>(order.size()) != n) return false;
  std::set<int> seen(order.begin(), order.end());
  return static_cast<int>(seen.size()) == n && *seen.begin() == 0 &&
         *seen.rbegin() == n - 1;
}

}  // namespace

TEST_CASE("batch validation rejects malformed input") {
  CHECK_THROWS_AS(herd_greedy(VectorBatch{}), std::invalid_argument);

  VectorBatch nonzero;
  nonzero.vectors = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(herd_greedy(nonzero), std::invalid_argument);
  CHECK_THROWS_AS(herd_signwalk(nonzero, 1), std::invalid_argument);

  VectorBatch oversized;
  oversized.vectors = {{2.0, 0.0}, {-2.0, 0.0}};
  CHECK_THROWS_AS(herd_greedy(oversized), std::invalid_argument);

  VectorBatch ragged;
  ragged.vectors = {{1.0, 0.0}, {-1.0}};
  CHECK_THROWS_AS(herd_greedy(ragged), std::invalid_argument);

  // A tiny imbalance within tolerance is accepted.
  VectorBatch nearly;
  nearly.vectors = {{1.0, 0.0}, {-1.0, 1e-12}};
  CHECK_NOTHROW(herd_greedy(nearly));
}

TEST_CASE("antipodal pair: H equals the vector norm") {
  VectorBatch batch;
  batch.vectors = {{0.6, 0.8}, {-0.6, -0.8}};
  const auto g = herd_greedy(batch);
  CHECK(is_permutation_of_n(g.order, 2));
  CHECK(g.achieved_H == doctest::Approx(1.0).epsilon(1e-12));

  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto s = herd_signwalk(batch, seed);
    CHECK(is_permutation_of_n(s.order, 2));
    CHECK(s.achieved_H == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("greedy on the 1-D balanced +-1 batch alternates and achieves H = 1") {
  VectorBatch batch;
  batch.vectors = {{1.0}, {1.0}, {-1.0}, {-1.0}};
  const auto g = herd_greedy(batch);
  // Ties break toward the lowest index: +1(0), then -1(2), +1(1), -1(3).
  CHECK(g.order == std::vector<int>{0, 2, 1, 3});
  CHECK(g.achieved_H == 1.0);

  // Brute force over all 24 orders: no order does better than 1.
  std::vector<int> order{0, 1, 2, 3};
  double best = 1e300;
  do {
    const auto profile = prefix_norm_profile(batch, order);
    best = std::min(best, *std::max_element(profile.begin(), profile.end()));
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(best == 1.0);
  CHECK(g.achieved_H == best);
}

TEST_CASE("sign-walk on the 1-D balanced +-1 batch stays within the trivial bound") {
  VectorBatch batch;
  batch.vectors = {{1.0}, {1.0}, {-1.0}, {-1.0}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = herd_signwalk(batch, seed);
    CHECK(is_permutation_of_n(s.order, 4));
    CHECK(s.achieved_H <= 2.0);
  }
}

TEST_CASE("results are deterministic given the inputs") {
  const auto batch = random_centered_batch(32, 4, 99);
  const auto g1 = herd_greedy(batch);
  const auto g2 = herd_greedy(batch);
  CHECK(g1.order == g2.order);
  CHECK(g1.achieved_H == g2.achieved_H);

  const auto s1 = herd_signwalk(batch, 7);
  const auto s2 = herd_signwalk(batch, 7);
  CHECK(s1.order == s2.order);
  CHECK(s1.achieved_H == s2.achieved_H);
}

TEST_CASE("prefix_norm_profile matches a manual accumulation") {
  VectorBatch batch;
  batch.vectors = {{0.5, 0.0}, {0.0, 0.5}, {-0.5, -0.5}};
  const std::vector<int> order{2, 0, 1};
  const auto profile = prefix_norm_profile(batch, order);
  REQUIRE(profile.size() == 3);
  CHECK(profile[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(profile[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(profile[2] == doctest::Approx(0.0));

  CHECK_THROWS_AS(prefix_norm_profile(batch, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(prefix_norm_profile(batch, {0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(prefix_norm_profile(batch, {0, 1, 3}), std::invalid_argument);
}

TEST_CASE("achieved_H equals the max of the profile") {
  const auto batch = random_centered_batch(64, 8, 123);
  for (const auto& result : {herd_greedy(batch), herd_signwalk(batch, 5)}) {
    CHECK(is_permutation_of_n(result.order, 64));
    const auto profile = prefix_norm_profile(batch, result.order);
    const double max_p = *std::max_element(profile.begin(), profile.end());
    CHECK(result.achieved_H == doctest::Approx(max_p).epsilon(1e-12));
    // Centered batch: the full prefix sum returns to (numerical) zero.
    CHECK(profile.back() <= 1e-10);
  }
}

TEST_CASE("greedy beats random orders by a wide margin on random batches") {
  Rng rng(2026);
  std::vector<double> ratios;
  for (int trial = 0; trial < 20; ++trial) {
    const auto batch = random_centered_batch(256, 8, 1000 + static_cast<std::uint64_t>(trial));
    const auto g = herd_greedy(batch);
    ratios.push_back(random_order_H(batch, rng) / g.achieved_H);
  }
  CHECK(median_of(ratios) >= 2.0);
}

TEST_CASE("sign-walk stays under the theoretical prefix bound") {
  const int d = 8, n = 256;
  const double bound = 2.0 * std::sqrt(2.0 * d * std::log(2.0 * n));
  int ok = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto batch = random_centered_batch(n, d, 5000 + static_cast<std::uint64_t>(trial));
    const auto s = herd_signwalk(batch, 9000 + static_cast<std::uint64_t>(trial));
    if (s.achieved_H <= bound) ++ok;
  }
  CHECK(ok >= 39);
}
