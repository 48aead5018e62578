// Permutation policies: strategies that produce the epoch-k component order.
//
// All orders are 0-based permutations of the component ids 0..n-1. Policies
// are deterministic given their seed; stochastic policies must be asked for
// epochs in order 1, 2, 3, ... so that recorded traces replay exactly.
#pragma once

#include <cstdint>
#include <vector>

#include "permsgd/herding.hpp"
#include "permsgd/linalg.hpp"
#include "permsgd/rng.hpp"

namespace permsgd {

enum class PolicyKind {
  kRandomReshuffle,   // fresh uniform permutation every epoch
  kSingleShuffle,     // one uniform permutation drawn at epoch 1, reused
  kIncremental,       // identity order every epoch
  kGrabOffline,       // reorders via herding of the previous epoch's gradients
  kFixed,             // caller-supplied order every epoch
  kExhaustiveBest,    // pre-planned gap-minimizing order sequence (oracle)
  kExhaustiveWorst,   // pre-planned gap-maximizing order sequence (oracle)
};

enum class HerdVariant { kGreedy, kSignwalk };

struct PolicyOptions {
  std::vector<int> fixed_order;    // required for kFixed
  std::vector<int> initial_order;  // kGrabOffline epoch-1 order (default identity)
  HerdVariant herd_variant = HerdVariant::kGreedy;
};

class PermutationPolicy {
 public:
  PermutationPolicy(PolicyKind kind, int n, std::uint64_t seed,
                    PolicyOptions options = {});

  PolicyKind kind() const { return kind_; }
  int n() const { return n_; }
  std::uint64_t seed() const { return seed_; }

  // Order for the given 1-based epoch. Stochastic and gradient-driven kinds
  // must be queried sequentially starting at epoch 1.
  std::vector<int> next_permutation(int epoch);

  // Feeds back the gradients observed during the epoch just run, indexed by
  // component id (grads_by_component[i] is the gradient of component i at the
  // iterate where it was applied). Only kGrabOffline consumes them.
  void record_gradients(const std::vector<Vec>& grads_by_component);

  // True if the policy wants record_gradients calls after each epoch.
  bool wants_gradients() const { return kind_ == PolicyKind::kGrabOffline; }

  // Exhaustive kinds replay a pre-planned order sequence; see
  // plan_exhaustive() in oracle.hpp.
  bool needs_plan() const;
  void set_planned_orders(std::vector<std::vector<int>> orders);

 private:
  PolicyKind kind_;
  int n_;
  std::uint64_t seed_;
  PolicyOptions options_;
  Rng rng_;
  int epochs_served_ = 0;
  std::vector<int> single_order_;           // kSingleShuffle cache
  std::vector<Vec> stored_grads_;           // kGrabOffline feedback
  bool have_grads_ = false;
  std::vector<std::vector<int>> planned_;   // exhaustive kinds
};

// Free-function forms of the policy interface.
std::vector<int> next_permutation(PermutationPolicy& policy, int epoch);
void record_gradients(PermutationPolicy& policy, const std::vector<Vec>& grads_by_component);

// All n! permutations of 0..n-1 in lexicographic order. Guarded to n <= 8.
std::vector<std::vector<int>> enumerate_all_orders(int n);

}  // namespace permsgd
