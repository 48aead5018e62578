#include "permsgd/shuffler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace permsgd {

namespace {

void validate_permutation(int n, const std::vector<int>& order, const char* what) {
  if (static_cast<int>(order.size()) != n) {
    throw std::invalid_argument(std::string(what) + ": wrong length");
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int idx : order) {
    if (idx < 0 || idx >= n || seen[static_cast<std::size_t>(idx)]) {
      throw std::invalid_argument(std::string(what) + ": not a permutation of 0..n-1");
    }
    seen[static_cast<std::size_t>(idx)] = 1;
  }
}

std::vector<int> identity_order(int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  return order;
}

}  // namespace

PermutationPolicy::PermutationPolicy(PolicyKind kind, int n, std::uint64_t seed,
                                     PolicyOptions options)
    : kind_(kind), n_(n), seed_(seed), options_(std::move(options)), rng_(seed) {
  if (n_ < 1) throw std::invalid_argument("PermutationPolicy: n must be >= 1");
  if (kind_ == PolicyKind::kFixed) {
    validate_permutation(n_, options_.fixed_order, "fixed_order");
  }
  if (!options_.initial_order.empty()) {
    validate_permutation(n_, options_.initial_order, "initial_order");
  }
}

bool PermutationPolicy::needs_plan() const {
  return (kind_ == PolicyKind::kExhaustiveBest || kind_ == PolicyKind::kExhaustiveWorst) &&
         planned_.empty();
}

void PermutationPolicy::set_planned_orders(std::vector<std::vector<int>> orders) {
  if (kind_ != PolicyKind::kExhaustiveBest && kind_ != PolicyKind::kExhaustiveWorst) {
    throw std::logic_error("set_planned_orders: policy is not an exhaustive kind");
  }
  for (const auto& order : orders) validate_permutation(n_, order, "planned order");
  planned_ = std::move(orders);
  epochs_served_ = 0;
}

std::vector<int> PermutationPolicy::next_permutation(int epoch) {
  if (epoch < 1) throw std::invalid_argument("next_permutation: epoch is 1-based");

  switch (kind_) {
    case PolicyKind::kIncremental:
      return identity_order(n_);

    case PolicyKind::kFixed:
      return options_.fixed_order;

    case PolicyKind::kExhaustiveBest:
    case PolicyKind::kExhaustiveWorst:
      if (planned_.empty()) {
        throw std::logic_error(
            "next_permutation: exhaustive policy has no plan; call plan_exhaustive first");
      }
      if (epoch > static_cast<int>(planned_.size())) {
        throw std::out_of_range("next_permutation: epoch beyond planned horizon");
      }
      return planned_[static_cast<std::size_t>(epoch - 1)];

    default:
      break;
  }

  // Stateful kinds below must be driven sequentially for replayability.
  if (epoch != epochs_served_ + 1) {
    throw std::logic_error("next_permutation: stochastic policies must be queried "
                           "sequentially starting at epoch 1");
  }
  ++epochs_served_;

  if (kind_ == PolicyKind::kRandomReshuffle) {
    std::vector<int> order = identity_order(n_);
    rng_.shuffle(order);
    return order;
  }

  if (kind_ == PolicyKind::kSingleShuffle) {
    if (single_order_.empty()) {
      single_order_ = identity_order(n_);
      rng_.shuffle(single_order_);
    }
    return single_order_;
  }

  // kGrabOffline: herd the previous epoch's gradients; before any feedback,
  // fall back to the configured initial order (identity by default).
  if (!have_grads_) {
    return options_.initial_order.empty() ? identity_order(n_) : options_.initial_order;
  }
  VectorBatch batch;
  batch.vectors = stored_grads_;
  const std::size_t d = batch.vectors.front().size();

  // Center by component id (twice, to drive the residual mean to rounding
  // level) and normalize so the largest vector has norm 1.
  for (int pass = 0; pass < 2; ++pass) {
    Vec mean(d, 0.0);
    for (const Vec& g : batch.vectors) axpy(1.0, g, mean);
    scale(1.0 / static_cast<double>(n_), mean);
    for (Vec& g : batch.vectors) axpy(-1.0, mean, g);
  }
  double max_norm = 0.0;
  for (const Vec& g : batch.vectors) max_norm = std::max(max_norm, norm2(g));
  if (max_norm > 0.0) {
    for (Vec& g : batch.vectors) scale(1.0 / max_norm, g);
  }

  HerdingResult herd = options_.herd_variant == HerdVariant::kGreedy
                           ? herd_greedy(batch)
                           : herd_signwalk(batch, hash_mix(seed_, static_cast<std::uint64_t>(epoch)));
  return herd.order;
}

void PermutationPolicy::record_gradients(const std::vector<Vec>& grads_by_component) {
  if (kind_ != PolicyKind::kGrabOffline) return;
  if (static_cast<int>(grads_by_component.size()) != n_) {
    throw std::invalid_argument("record_gradients: need one gradient per component");
  }
  const std::size_t d = grads_by_component.front().size();
  for (const Vec& g : grads_by_component) {
    if (g.size() != d) {
      throw std::invalid_argument("record_gradients: inconsistent gradient dimensions");
    }
  }
  stored_grads_ = grads_by_component;
  have_grads_ = true;
}

std::vector<int> next_permutation(PermutationPolicy& policy, int epoch) {
  return policy.next_permutation(epoch);
}

void record_gradients(PermutationPolicy& policy, const std::vector<Vec>& grads_by_component) {
  policy.record_gradients(grads_by_component);
}

std::vector<std::vector<int>> enumerate_all_orders(int n) {
  if (n < 1 || n > 8) {
    throw std::invalid_argument("enumerate_all_orders: n must be in 1..8");
  }
  std::vector<std::vector<int>> all;
  std::vector<int> order = identity_order(n);
  do {
    all.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));
  return all;
}

}  // namespace permsgd
