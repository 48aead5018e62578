#include "permsgd/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "permsgd/constants.hpp"

namespace permsgd {

EpochTrace run_epochs(const FiniteSumObjective& obj, PermutationPolicy& policy,
                      const RunConfig& config) {
  if (config.eta <= 0.0) throw std::invalid_argument("run_epochs: eta must be positive");
  if (config.epochs < 1) throw std::invalid_argument("run_epochs: epochs must be >= 1");
  if (static_cast<int>(config.x0.size()) != obj.dim) {
    throw std::invalid_argument("run_epochs: x0 dimension mismatch");
  }
  if (policy.n() != obj.n) {
    throw std::invalid_argument("run_epochs: policy n does not match objective n");
  }

  EpochTrace trace;
  trace.seed = policy.seed();
  trace.end_points.reserve(static_cast<std::size_t>(config.epochs) + 1);
  trace.permutations_used.reserve(static_cast<std::size_t>(config.epochs));

  Vec x = config.x0;
  trace.end_points.push_back(x);
  if (config.record_steps) trace.step_points.push_back(x);

  const bool feed_gradients = policy.wants_gradients();
  std::vector<Vec> grads_by_component;
  if (feed_gradients) {
    grads_by_component.assign(static_cast<std::size_t>(obj.n),
                              Vec(static_cast<std::size_t>(obj.dim), 0.0));
  }

  Vec g;
  for (int k = 1; k <= config.epochs; ++k) {
    std::vector<int> sigma = policy.next_permutation(k);
    for (int i = 0; i < obj.n; ++i) {
      const int comp = sigma[static_cast<std::size_t>(i)];
      obj.components[static_cast<std::size_t>(comp)].grad_into(x, g);
      if (feed_gradients) grads_by_component[static_cast<std::size_t>(comp)] = g;
      axpy(-config.eta, g, x);
      if (config.record_steps) trace.step_points.push_back(x);
    }
    trace.permutations_used.push_back(std::move(sigma));
    trace.end_points.push_back(x);
    if (!all_finite(x) || norm2(x) > constants::kDivergenceNormLimit) {
      trace.diverged = true;
      trace.diverged_epoch = k;
      break;
    }
    if (feed_gradients) policy.record_gradients(grads_by_component);
  }
  return trace;
}

AveragingScheme AveragingScheme::final_iterate(int epochs) {
  AveragingScheme s;
  s.weights.assign(static_cast<std::size_t>(epochs) + 1, 0.0);
  s.weights.back() = 1.0;
  return s;
}

AveragingScheme AveragingScheme::uniform(int epochs) {
  AveragingScheme s;
  s.weights.assign(static_cast<std::size_t>(epochs) + 1, 1.0);
  return s;
}

AveragingScheme AveragingScheme::tail(int epochs) {
  AveragingScheme s;
  s.weights.assign(static_cast<std::size_t>(epochs) + 1, 0.0);
  const int count = epochs / 2 + 1;
  for (int k = epochs + 1 - count; k <= epochs; ++k) {
    s.weights[static_cast<std::size_t>(k)] = 1.0;
  }
  return s;
}

Vec weighted_average(const EpochTrace& trace, const AveragingScheme& scheme) {
  if (scheme.weights.size() != trace.end_points.size()) {
    throw std::invalid_argument("weighted_average: weight count must match end points");
  }
  double total = 0.0;
  for (double w : scheme.weights) {
    if (w < 0.0) throw std::invalid_argument("weighted_average: weights must be nonnegative");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("weighted_average: weights sum to zero");

  Vec avg(trace.end_points.front().size(), 0.0);
  for (std::size_t k = 0; k < scheme.weights.size(); ++k) {
    if (scheme.weights[k] != 0.0) axpy(scheme.weights[k] / total, trace.end_points[k], avg);
  }
  return avg;
}

// ---------------------------------------------------------------------------
// Step-size schedules
// ---------------------------------------------------------------------------

namespace {

void check_schedule_args(double L, double mu, double nu, double D, int n, int K) {
  if (L <= 0.0 || mu <= 0.0) throw std::invalid_argument("stepsize: L and mu must be positive");
  if (nu < 0.0) throw std::invalid_argument("stepsize: nu must be nonnegative");
  if (D <= 0.0) throw std::invalid_argument("stepsize: D must be positive");
  if (n < 1 || K < 1) throw std::invalid_argument("stepsize: n and K must be >= 1");
}

// max(1, log(mu^3 n D^2 K^2 / (L nu^2))), with the convention that nu = 0
// yields +infinity (so the min picks the constant branch).
double log_branch_factor(double L, double mu, double nu, double D, int n, int K) {
  if (nu == 0.0) return std::numeric_limits<double>::infinity();
  const double arg = mu * mu * mu * static_cast<double>(n) * D * D *
                     static_cast<double>(K) * static_cast<double>(K) / (L * nu * nu);
  return std::max(1.0, std::log(arg));
}

}  // namespace

double stepsize_mishchenko_strcvx(double L, double mu, double nu, double D, int n, int K) {
  check_schedule_args(L, mu, nu, D, n, K);
  const double constant_branch = 2.0 / (L * static_cast<double>(n));
  const double log_branch = log_branch_factor(L, mu, nu, D, n, K) /
                            (mu * static_cast<double>(n) * static_cast<double>(K));
  return std::min(constant_branch, log_branch);
}

double stepsize_tail_average(double L, double mu, double nu, double D, int n, int K) {
  check_schedule_args(L, mu, nu, D, n, K);
  const double constant_branch = 1.0 / (std::sqrt(2.0) * L * static_cast<double>(n));
  const double log_branch = 9.0 * log_branch_factor(L, mu, nu, D, n, K) /
                            (mu * static_cast<double>(n) * static_cast<double>(K));
  return std::min(constant_branch, log_branch);
}

double lambert_w0(double x) {
  constexpr double kInvE = 0.36787944117144232;  // 1/e
  constexpr double kE = 2.718281828459045;
  if (!(x >= -kInvE)) {
    throw std::domain_error("lambert_w0: argument must be >= -1/e");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  if (x >= kE) {
    // Solve the equivalent w + log w = log x by Newton; monotone for w > 0 and
    // free of exp() overflow for huge arguments.
    const double target = std::log(x);
    double w = target <= 1.0 ? 1.0 : target - std::log(target);
    for (int iter = 0; iter < 100; ++iter) {
      const double f = w + std::log(w) - target;
      const double step = f * w / (w + 1.0);
      w -= step;
      if (std::abs(step) <= 1e-16 * w) break;
    }
    return w;
  }

  // Initial guess for -1/e <= x < e (so w < 1 and exp(w) is tame).
  double w;
  const double p2 = 2.0 * (kE * x + 1.0);
  if (p2 <= 1e-3) {
    // Branch-point series around x = -1/e: W = -1 + p - p^2/3 + 11 p^3/72 ...
    const double p = std::sqrt(std::max(p2, 0.0));
    w = -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p * p2;
    if (w <= -1.0) return -1.0;
  } else {
    w = std::log1p(x);  // accurate near 0, adequate as a seed up to e
  }

  // Halley iteration on f(w) = w e^w - x.
  for (int iter = 0; iter < 100; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(w))) break;
  }
  return w;
}

double stepsize_grab(double F0_gap, double L, double mu, double nu, double H,
                     int n, int K) {
  if (L <= 0.0 || mu <= 0.0) throw std::invalid_argument("stepsize_grab: L, mu must be positive");
  if (nu <= 0.0 || H <= 0.0) throw std::invalid_argument("stepsize_grab: nu, H must be positive");
  if (F0_gap < 0.0) throw std::invalid_argument("stepsize_grab: F0_gap must be nonnegative");
  if (n < 1 || K < 1) throw std::invalid_argument("stepsize_grab: n and K must be >= 1");
  const double nd = static_cast<double>(n);
  const double Kd = static_cast<double>(K);
  const double arg = (F0_gap + nu * nu / L) * mu * mu * mu * nd * nd * Kd * Kd /
                     (192.0 * H * H * L * L * nu * nu);
  return 2.0 / (mu * nd * Kd) * lambert_w0(arg);
}

}  // namespace permsgd
