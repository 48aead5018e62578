// Exact combinatorial oracles: sign-pattern statistics, exhaustive permutation
// search, exact expectations over random reshuffling, and grid verification of
// the auxiliary inequalities used by the rate analyses.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permsgd/objectives.hpp"
#include "permsgd/optimizer.hpp"
#include "permsgd/shuffler.hpp"

namespace permsgd {

// ---------------------------------------------------------------------------
// Balanced-sign prefix statistics
// ---------------------------------------------------------------------------

// Exact statistics of the prefix sums E_i = s_1 + ... + s_i of a uniformly
// random balanced sign pattern of length n. Entry i-1 of each vector refers to
// prefix length i (i = 1..n).
struct SignStats {
  int n = 0;
  std::vector<double> e_abs_mean;  // E |E_i|
  std::vector<double> p_positive;  // P(E_i > 0)
  std::vector<double> p_zero;      // P(E_i = 0)
};

// Exact enumeration over all C(n, n/2) balanced patterns. Guarded to even
// n <= 20.
SignStats sign_stats_exact(int n);

// P(E_i = 0) = C(i, i/2) C(n-i, (n-i)/2) / C(n, n/2), computed via
// log-factorials. Requires even n >= 4 and even i with 2 <= i <= n/2.
double central_binomial_ratio(int n, int i);

// ---------------------------------------------------------------------------
// Exhaustive permutation search and exact reshuffling expectations
// ---------------------------------------------------------------------------

struct ExhaustiveResult {
  double min_gap = 0.0;
  double max_gap = 0.0;
  std::vector<std::vector<int>> argmin_orders;  // one order per epoch
  std::vector<std::vector<int>> argmax_orders;
};

// Evaluates every sequence of per-epoch orders ((n!)^K of them, guarded to at
// most 1e6) and returns the extreme optimality gaps of the averaged point
// under `scheme`, together with extremal order sequences. Runs diverging to
// non-finite values count as gap +infinity.
ExhaustiveResult exhaustive_permutation_value(const FiniteSumObjective& obj, const Vec& x0,
                                              double eta, int n, int K,
                                              const AveragingScheme& scheme);

// Exact expectation of the averaged point's gap under independent uniform
// reshuffling each epoch. Uses the C(n, n/2)^K sign-pattern reduction when the
// objective is half-split identical, otherwise full (n!)^K enumeration; the
// enumeration size is guarded to 1e6.
double rr_expectation_exact(const FiniteSumObjective& obj, const Vec& x0, double eta,
                            int n, int K, const AveragingScheme& scheme);

// Plans an exhaustive-best/worst policy for the given run by exhaustive
// search under the final-iterate criterion (or a supplied scheme).
void plan_exhaustive(PermutationPolicy& policy, const FiniteSumObjective& obj,
                     const RunConfig& config);
void plan_exhaustive(PermutationPolicy& policy, const FiniteSumObjective& obj,
                     const RunConfig& config, const AveragingScheme& scheme);

// ---------------------------------------------------------------------------
// Recursion and inequality verification
// ---------------------------------------------------------------------------

// Verifies the coupled two-step recursion of the two-dimensional construction:
// from any state with y + z >= 0 and any assignment of the two component
// types to the two steps, after two steps
//   y' + z' >= (1 - eta L / 2)(1 - eta L)(y + z) + eta^2 L nu / 2,
// and the intermediate sum stays nonnegative. Requires 0 < eta < 1/L.
struct CoupledCheckReport {
  long long trials = 0;
  long long checks = 0;        // trials x 4 assignments
  long long violations = 0;
  double worst_margin = 0.0;   // min over checks of lhs - rhs (>= -tol when pass)
  double worst_mid_sum = 0.0;  // min intermediate y + z
  bool pass = false;
};

CoupledCheckReport coupled_recursion_check(double L, double nu, double eta,
                                           long long trials, std::uint64_t seed);

// One grid-verified inequality.
struct LemmaReport {
  std::string lemma_id;
  std::string grid;          // human-readable description of the grid swept
  long long points = 0;      // number of grid points checked
  double worst_margin = 0.0; // minimum slack across the grid (>= 0 when pass)
  bool pass = false;
};

// Runs the full inequality suite:
//   partial_sum_abs_mean_bounds   sqrt(i)/10 <= E|E_i| <= sqrt(i), P(E_i>0) >= 1/6
//   central_binomial_ratio_bound  P(E_i = 0) >= 2/(5 sqrt(i))
//   power_bound_one_minus_inv_t   (1-1/t)^t > (1/e)(1-1/t)
//   product_minus_poly_bound      (1+bx)^m (b-1) - b (1+bx)^m (1-x)^m + 1 >= m x^2/30
//   exp_half_quadratic_bound      e^{x/2} < 1 + x/2 + 5x^2/32 on (0,1]
//   coupled_two_step_recursion    the recursion above at eta in {0.1,0.5,0.9}/L
std::vector<LemmaReport> verify_lemmas();

// ---------------------------------------------------------------------------
// Closed-form cross-check for all-quadratic objectives
// ---------------------------------------------------------------------------

// Final iterate after applying the given per-epoch orders with step size eta,
// computed by composing the per-step affine maps x -> (1 - eta a_i) .* x -
// eta b_i in closed form (diagonal quadratics only).
Vec quad_closed_form_final(const FiniteSumObjective& obj, const Vec& x0, double eta,
                           const std::vector<std::vector<int>>& orders);

}  // namespace permsgd
