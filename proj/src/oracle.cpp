#include "permsgd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "permsgd/rng.hpp"

namespace permsgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double log_factorial(int m) { return std::lgamma(static_cast<double>(m) + 1.0); }

double log_choose(int m, int k) {
  return log_factorial(m) - log_factorial(k) - log_factorial(m - k);
}

// Enumeration budget guard: base^K <= limit, without overflow.
bool power_within(double base, int K, double limit) {
  double v = 1.0;
  for (int i = 0; i < K; ++i) {
    v *= base;
    if (v > limit) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Balanced-sign prefix statistics
// ---------------------------------------------------------------------------

namespace {

// Exact binomial coefficient for the small arguments used here.
long long choose_ll(int m, int k) {
  if (k < 0 || k > m) return 0;
  long long r = 1;
  for (int j = 1; j <= k; ++j) {
    r = r * static_cast<long long>(m - k + j) / static_cast<long long>(j);
  }
  return r;
}

}  // namespace

SignStats sign_stats_exact(int n) {
  require(n >= 2 && n % 2 == 0, "sign_stats_exact: n must be even and >= 2");
  require(n <= 20, "sign_stats_exact: n is guarded to <= 20");

  SignStats stats;
  stats.n = n;
  stats.e_abs_mean.assign(static_cast<std::size_t>(n), 0.0);
  stats.p_positive.assign(static_cast<std::size_t>(n), 0.0);
  stats.p_zero.assign(static_cast<std::size_t>(n), 0.0);

  // All accumulators are exact integer counts (n <= 20 keeps them well within
  // 64-bit range), so the returned statistics are exact up to one rounding in
  // the final division.
  std::vector<long long> abs_sum(static_cast<std::size_t>(n), 0);
  std::vector<long long> pos_count(static_cast<std::size_t>(n), 0);
  std::vector<long long> zero_count(static_cast<std::size_t>(n), 0);

  // Depth-first over balanced patterns, weighting each prefix by the number
  // of balanced completions below it.
  std::vector<int> prefix(static_cast<std::size_t>(n) + 1, 0);
  auto rec = [&](auto&& self, int pos, int plus_left, int minus_left) -> void {
    if (pos == n) return;
    for (int s : {+1, -1}) {
      if ((s > 0 ? plus_left : minus_left) <= 0) continue;
      const int e = prefix[static_cast<std::size_t>(pos)] + s;
      prefix[static_cast<std::size_t>(pos) + 1] = e;
      const int pl = plus_left - (s > 0 ? 1 : 0);
      const int ml = minus_left - (s > 0 ? 0 : 1);
      const long long completions = choose_ll(pl + ml, pl);
      abs_sum[static_cast<std::size_t>(pos)] += std::abs(e) * completions;
      if (e > 0) pos_count[static_cast<std::size_t>(pos)] += completions;
      if (e == 0) zero_count[static_cast<std::size_t>(pos)] += completions;
      self(self, pos + 1, pl, ml);
    }
  };
  rec(rec, 0, n / 2, n / 2);

  const double total = static_cast<double>(choose_ll(n, n / 2));
  for (int i = 0; i < n; ++i) {
    stats.e_abs_mean[static_cast<std::size_t>(i)] =
        static_cast<double>(abs_sum[static_cast<std::size_t>(i)]) / total;
    stats.p_positive[static_cast<std::size_t>(i)] =
        static_cast<double>(pos_count[static_cast<std::size_t>(i)]) / total;
    stats.p_zero[static_cast<std::size_t>(i)] =
        static_cast<double>(zero_count[static_cast<std::size_t>(i)]) / total;
  }
  return stats;
}

double central_binomial_ratio(int n, int i) {
  require(n >= 4 && n % 2 == 0, "central_binomial_ratio: n must be even and >= 4");
  require(i >= 2 && i % 2 == 0, "central_binomial_ratio: i must be even and >= 2");
  require(i <= n / 2, "central_binomial_ratio: i must be <= n/2");
  const double log_ratio =
      log_choose(i, i / 2) + log_choose(n - i, (n - i) / 2) - log_choose(n, n / 2);
  return std::exp(log_ratio);
}

// ---------------------------------------------------------------------------
// Exhaustive permutation search and exact reshuffling expectations
// ---------------------------------------------------------------------------

namespace {

// Applies one epoch with the given component order; returns false as soon as
// the iterate stops being finite.
bool apply_epoch(const FiniteSumObjective& obj, const std::vector<int>& order, double eta,
                 Vec& x, Vec& scratch) {
  for (int idx : order) {
    obj.components[static_cast<std::size_t>(idx)].grad_into(x, scratch);
    axpy(-eta, scratch, x);
  }
  return all_finite(x);
}

double gap_or_inf(const FiniteSumObjective& obj, const Vec& x) {
  if (!all_finite(x)) return kInf;
  const double g = obj.gap(x);
  return std::isfinite(g) ? g : kInf;
}

}  // namespace

ExhaustiveResult exhaustive_permutation_value(const FiniteSumObjective& obj, const Vec& x0,
                                              double eta, int n, int K,
                                              const AveragingScheme& scheme) {
  require(n == obj.n, "exhaustive_permutation_value: n must match the objective");
  require(static_cast<int>(x0.size()) == obj.dim,
          "exhaustive_permutation_value: x0 dimension mismatch");
  require(eta > 0.0, "exhaustive_permutation_value: eta must be positive");
  require(K >= 1, "exhaustive_permutation_value: K must be >= 1");
  require(static_cast<int>(scheme.weights.size()) == K + 1,
          "exhaustive_permutation_value: scheme must have K+1 weights");
  require(n <= 8, "exhaustive_permutation_value: n is guarded to <= 8");
  const auto orders = enumerate_all_orders(n);
  require(power_within(static_cast<double>(orders.size()), K, 1e6),
          "exhaustive_permutation_value: (n!)^K exceeds the 1e6 enumeration guard");

  double weight_total = 0.0;
  for (double w : scheme.weights) {
    require(w >= 0.0, "exhaustive_permutation_value: negative averaging weight");
    weight_total += w;
  }
  require(weight_total > 0.0, "exhaustive_permutation_value: zero averaging weights");

  ExhaustiveResult result;
  result.min_gap = kInf;
  result.max_gap = -kInf;
  std::vector<int> choice(static_cast<std::size_t>(K), 0);
  std::vector<int> best_choice, worst_choice;

  // end_points[k] holds the iterate after k epochs along the current DFS path.
  std::vector<Vec> end_points(static_cast<std::size_t>(K) + 1);
  end_points[0] = x0;
  Vec scratch;

  auto evaluate_leaf = [&]() {
    Vec avg(static_cast<std::size_t>(obj.dim), 0.0);
    bool finite = true;
    for (int k = 0; k <= K; ++k) {
      const double w = scheme.weights[static_cast<std::size_t>(k)];
      if (w == 0.0) continue;
      if (!all_finite(end_points[static_cast<std::size_t>(k)])) {
        finite = false;
        break;
      }
      axpy(w / weight_total, end_points[static_cast<std::size_t>(k)], avg);
    }
    const double gap = finite ? gap_or_inf(obj, avg) : kInf;
    if (gap < result.min_gap) {
      result.min_gap = gap;
      best_choice = choice;
    }
    if (gap > result.max_gap) {
      result.max_gap = gap;
      worst_choice = choice;
    }
  };

  auto rec = [&](auto&& self, int k) -> void {
    if (k == K) {
      evaluate_leaf();
      return;
    }
    for (std::size_t oi = 0; oi < orders.size(); ++oi) {
      choice[static_cast<std::size_t>(k)] = static_cast<int>(oi);
      Vec x = end_points[static_cast<std::size_t>(k)];
      if (all_finite(x)) {
        apply_epoch(obj, orders[oi], eta, x, scratch);
      }
      end_points[static_cast<std::size_t>(k) + 1] = std::move(x);
      self(self, k + 1);
    }
  };
  rec(rec, 0);

  for (int k = 0; k < K; ++k) {
    result.argmin_orders.push_back(orders[static_cast<std::size_t>(best_choice[static_cast<std::size_t>(k)])]);
    result.argmax_orders.push_back(orders[static_cast<std::size_t>(worst_choice[static_cast<std::size_t>(k)])]);
  }
  return result;
}

double rr_expectation_exact(const FiniteSumObjective& obj, const Vec& x0, double eta,
                            int n, int K, const AveragingScheme& scheme) {
  require(n == obj.n, "rr_expectation_exact: n must match the objective");
  require(static_cast<int>(x0.size()) == obj.dim, "rr_expectation_exact: x0 dimension mismatch");
  require(eta > 0.0, "rr_expectation_exact: eta must be positive");
  require(K >= 1, "rr_expectation_exact: K must be >= 1");
  require(static_cast<int>(scheme.weights.size()) == K + 1,
          "rr_expectation_exact: scheme must have K+1 weights");

  double weight_total = 0.0;
  for (double w : scheme.weights) {
    require(w >= 0.0, "rr_expectation_exact: negative averaging weight");
    weight_total += w;
  }
  require(weight_total > 0.0, "rr_expectation_exact: zero averaging weights");

  // Branching structure: with half-split identical components the trajectory
  // depends on an order only through its balanced sign pattern, and every
  // pattern carries equal probability 1 / C(n, n/2). Otherwise enumerate all
  // n! orders per epoch.
  std::vector<std::vector<int>> branches;
  if (obj.half_split_identical && n % 2 == 0) {
    for (const SignPattern& p : enumerate_sign_patterns(n)) {
      // Map the pattern to a representative order: +1 consumes a first-half
      // component, -1 a second-half component.
      std::vector<int> order;
      order.reserve(static_cast<std::size_t>(n));
      int next_plus = 0, next_minus = n / 2;
      for (int s : p.signs) order.push_back(s > 0 ? next_plus++ : next_minus++);
      branches.push_back(std::move(order));
    }
  } else {
    require(n <= 8, "rr_expectation_exact: n is guarded to <= 8");
    branches = enumerate_all_orders(n);
  }
  require(power_within(static_cast<double>(branches.size()), K, 1e6),
          "rr_expectation_exact: enumeration exceeds the 1e6 guard");

  const double branch_prob = 1.0 / static_cast<double>(branches.size());
  NeumaierSum expectation;
  std::vector<Vec> end_points(static_cast<std::size_t>(K) + 1);
  end_points[0] = x0;
  Vec scratch;

  auto rec = [&](auto&& self, int k, double prob) -> void {
    if (k == K) {
      Vec avg(static_cast<std::size_t>(obj.dim), 0.0);
      for (int j = 0; j <= K; ++j) {
        const double w = scheme.weights[static_cast<std::size_t>(j)];
        if (w != 0.0) axpy(w / weight_total, end_points[static_cast<std::size_t>(j)], avg);
      }
      expectation.add(prob * gap_or_inf(obj, avg));
      return;
    }
    for (const auto& order : branches) {
      Vec x = end_points[static_cast<std::size_t>(k)];
      apply_epoch(obj, order, eta, x, scratch);
      end_points[static_cast<std::size_t>(k) + 1] = std::move(x);
      self(self, k + 1, prob * branch_prob);
    }
  };
  rec(rec, 0, 1.0);
  return expectation.value();
}

void plan_exhaustive(PermutationPolicy& policy, const FiniteSumObjective& obj,
                     const RunConfig& config, const AveragingScheme& scheme) {
  if (policy.kind() != PolicyKind::kExhaustiveBest &&
      policy.kind() != PolicyKind::kExhaustiveWorst) {
    throw std::logic_error("plan_exhaustive: policy is not an exhaustive kind");
  }
  ExhaustiveResult res =
      exhaustive_permutation_value(obj, config.x0, config.eta, obj.n, config.epochs, scheme);
  policy.set_planned_orders(policy.kind() == PolicyKind::kExhaustiveBest ? res.argmin_orders
                                                                         : res.argmax_orders);
}

void plan_exhaustive(PermutationPolicy& policy, const FiniteSumObjective& obj,
                     const RunConfig& config) {
  plan_exhaustive(policy, obj, config, AveragingScheme::final_iterate(config.epochs));
}

// ---------------------------------------------------------------------------
// Coupled two-step recursion
// ---------------------------------------------------------------------------

CoupledCheckReport coupled_recursion_check(double L, double nu, double eta,
                                           long long trials, std::uint64_t seed) {
  require(L > 0.0, "coupled_recursion_check: L must be positive");
  require(nu >= 0.0, "coupled_recursion_check: nu must be nonnegative");
  require(eta > 0.0 && eta * L < 1.0, "coupled_recursion_check: need 0 < eta < 1/L");
  require(trials >= 1, "coupled_recursion_check: trials must be >= 1");

  Rng rng(seed);
  const double scale = 3.0 * std::max(1.0, nu / L);
  const double contraction = (1.0 - 0.5 * eta * L) * (1.0 - eta * L);
  const double floor_term = 0.5 * eta * eta * L * nu;
  auto curvature = [L](double v) { return v < 0.0 ? L : 0.5 * L; };

  CoupledCheckReport report;
  report.trials = trials;
  report.worst_margin = kInf;
  report.worst_mid_sum = kInf;
  const double tol = 1e-12 * std::max(1.0, scale * L + nu);

  for (long long t = 0; t < trials; ++t) {
    double y0, z0;
    do {
      y0 = scale * (2.0 * rng.next_double() - 1.0);
      z0 = scale * (2.0 * rng.next_double() - 1.0);
    } while (y0 + z0 < 0.0);

    // Component types: type A applies +nu to the y-coordinate and -nu to z;
    // type B is mirrored. Check all four two-step assignments.
    for (int first = 0; first < 2; ++first) {
      for (int second = 0; second < 2; ++second) {
        double y = y0, z = z0;
        for (int step = 0; step < 2; ++step) {
          const double s = (step == 0 ? first : second) == 0 ? 1.0 : -1.0;
          const double gy = curvature(y) * y + s * nu;
          const double gz = curvature(z) * z - s * nu;
          y -= eta * gy;
          z -= eta * gz;
          if (step == 0) report.worst_mid_sum = std::min(report.worst_mid_sum, y + z);
        }
        ++report.checks;
        const double margin = (y + z) - (contraction * (y0 + z0) + floor_term);
        report.worst_margin = std::min(report.worst_margin, margin);
        if (margin < -tol) ++report.violations;
      }
    }
  }
  if (report.worst_mid_sum < -tol) ++report.violations;
  report.pass = report.violations == 0;
  return report;
}

// ---------------------------------------------------------------------------
// Inequality suite
// ---------------------------------------------------------------------------

namespace {

LemmaReport check_partial_sum_bounds() {
  LemmaReport rep;
  rep.lemma_id = "partial_sum_abs_mean_bounds";
  rep.grid = "even n in [4,20], prefix lengths i <= n/2";
  rep.worst_margin = kInf;
  for (int n = 4; n <= 20; n += 2) {
    const SignStats stats = sign_stats_exact(n);
    for (int i = 1; i <= n / 2; ++i) {
      const double e_abs = stats.e_abs_mean[static_cast<std::size_t>(i - 1)];
      const double p_pos = stats.p_positive[static_cast<std::size_t>(i - 1)];
      const double root_i = std::sqrt(static_cast<double>(i));
      rep.worst_margin = std::min({rep.worst_margin, e_abs - root_i / 10.0,
                                   root_i - e_abs, p_pos - 1.0 / 6.0});
      ++rep.points;
    }
  }
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

LemmaReport check_central_binomial_bound() {
  LemmaReport rep;
  rep.lemma_id = "central_binomial_ratio_bound";
  rep.grid = "even n in [4,64], even i in [2, n/2]";
  rep.worst_margin = kInf;
  for (int n = 4; n <= 64; n += 2) {
    for (int i = 2; i <= n / 2; i += 2) {
      const double ratio = central_binomial_ratio(n, i);
      rep.worst_margin =
          std::min(rep.worst_margin, ratio - 2.0 / (5.0 * std::sqrt(static_cast<double>(i))));
      ++rep.points;
    }
  }
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

LemmaReport check_power_bound() {
  LemmaReport rep;
  rep.lemma_id = "power_bound_one_minus_inv_t";
  rep.grid = "integer t in [2,1000] plus 200 log-spaced t up to 1e6";
  rep.worst_margin = kInf;
  auto margin_at = [](double t) {
    return std::pow(1.0 - 1.0 / t, t) - (1.0 / std::exp(1.0)) * (1.0 - 1.0 / t);
  };
  for (int t = 2; t <= 1000; ++t) {
    rep.worst_margin = std::min(rep.worst_margin, margin_at(static_cast<double>(t)));
    ++rep.points;
  }
  for (int j = 0; j < 200; ++j) {
    const double t = 1e3 * std::pow(1e3, static_cast<double>(j) / 199.0);
    rep.worst_margin = std::min(rep.worst_margin, margin_at(t));
    ++rep.points;
  }
  rep.pass = rep.worst_margin > 0.0;
  return rep;
}

LemmaReport check_product_poly_bound() {
  LemmaReport rep;
  rep.lemma_id = "product_minus_poly_bound";
  rep.grid = "even n in [104,256], 50 x in (0,2/n], 50 beta in [1-2/n,1)";
  rep.worst_margin = kInf;
  for (int n = 104; n <= 256; n += 2) {
    const int m = n / 2;
    const double xmax = 2.0 / static_cast<double>(n);
    for (int jx = 1; jx <= 50; ++jx) {
      const double x = xmax * static_cast<double>(jx) / 50.0;
      for (int jb = 0; jb < 50; ++jb) {
        const double beta =
            (1.0 - xmax) + xmax * (static_cast<double>(jb) / 50.0) * (1.0 - 1e-9);
        const double pow_bx = std::pow(1.0 + beta * x, m);
        const double pow_1mx = std::pow(1.0 - x, m);
        const double lhs = pow_bx * (beta - 1.0) - beta * pow_bx * pow_1mx + 1.0;
        const double rhs = static_cast<double>(m) * x * x / 30.0;
        rep.worst_margin = std::min(rep.worst_margin, lhs - rhs);
        ++rep.points;
      }
    }
  }
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

LemmaReport check_exp_half_bound() {
  LemmaReport rep;
  rep.lemma_id = "exp_half_quadratic_bound";
  rep.grid = "x = j/10000 for j in [1,10000]";
  rep.worst_margin = kInf;
  for (int j = 1; j <= 10000; ++j) {
    const double x = static_cast<double>(j) / 10000.0;
    const double margin = 1.0 + 0.5 * x + 5.0 * x * x / 32.0 - std::exp(0.5 * x);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    ++rep.points;
  }
  rep.pass = rep.worst_margin > 0.0;
  return rep;
}

LemmaReport check_coupled_recursion() {
  LemmaReport rep;
  rep.lemma_id = "coupled_two_step_recursion";
  rep.grid = "1e4 random states x eta in {0.1,0.5,0.9}/L x 4 assignments";
  rep.worst_margin = kInf;
  bool all_pass = true;
  for (double frac : {0.1, 0.5, 0.9}) {
    const CoupledCheckReport r = coupled_recursion_check(1.0, 1.0, frac, 10000, 918273);
    rep.points += r.checks;
    rep.worst_margin = std::min(rep.worst_margin, r.worst_margin);
    all_pass = all_pass && r.pass;
  }
  rep.pass = all_pass;
  return rep;
}

}  // namespace

std::vector<LemmaReport> verify_lemmas() {
  return {check_partial_sum_bounds(), check_central_binomial_bound(), check_power_bound(),
          check_product_poly_bound(), check_exp_half_bound(), check_coupled_recursion()};
}

// ---------------------------------------------------------------------------
// Closed-form cross-check
// ---------------------------------------------------------------------------

Vec quad_closed_form_final(const FiniteSumObjective& obj, const Vec& x0, double eta,
                           const std::vector<std::vector<int>>& orders) {
  require(obj.is_quadratic(), "quad_closed_form_final: objective must be all-quadratic");
  require(static_cast<int>(x0.size()) == obj.dim, "quad_closed_form_final: x0 dim mismatch");
  for (const auto& order : orders) {
    require(static_cast<int>(order.size()) == obj.n,
            "quad_closed_form_final: each order must list all n components");
    std::vector<bool> seen(static_cast<std::size_t>(obj.n), false);
    for (int idx : order) {
      require(idx >= 0 && idx < obj.n && !seen[static_cast<std::size_t>(idx)],
              "quad_closed_form_final: order is not a permutation");
      seen[static_cast<std::size_t>(idx)] = true;
    }
  }
  const std::size_t d = static_cast<std::size_t>(obj.dim);

  // Compose the affine maps of one epoch: x -> A .* x + v (A diagonal).
  Vec x = x0;
  Vec A(d), v(d);
  for (const auto& order : orders) {
    for (std::size_t j = 0; j < d; ++j) {
      A[j] = 1.0;
      v[j] = 0.0;
    }
    for (int idx : order) {
      const QuadComponent& q = obj.quad[static_cast<std::size_t>(idx)];
      for (std::size_t j = 0; j < d; ++j) {
        const double m = 1.0 - eta * q.a[j];
        A[j] = m * A[j];
        v[j] = m * v[j] - eta * q.b[j];
      }
    }
    for (std::size_t j = 0; j < d; ++j) x[j] = A[j] * x[j] + v[j];
  }
  return x;
}

}  // namespace permsgd
