// Sweep and rate-fitting harness: runs seeded Monte Carlo sweeps over K, n, or
// eta, aggregates gap statistics, fits log-log convergence rates, and compares
// permutation policies. Also owns the JSON/CSV plumbing used by the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "permsgd/linalg.hpp"
#include "permsgd/objectives.hpp"
#include "permsgd/optimizer.hpp"
#include "permsgd/shuffler.hpp"

namespace permsgd {

// Builds a zoo objective from its key. Recognized keys and parameters:
//   f1_quadratic        {mu, dim}
//   f2_piecewise        {L, mu0, nu}
//   f3_quadratic_pm     {L, nu}
//   thm1_aggregate      {L, mu, nu}         (uses K)
//   thm7_coupled        {L, nu}
//   thm9_nonconvex_pair {L, mu, nu}
//   thm9_single_heavy   {L, nu}
//   diverging_quadratic {L, dim}
//   shifted_quadratic   {L, nu, dim}
// n (and K where noted) come from the run, not the parameter map.
FiniteSumObjective objective_from_key(const std::string& key, const nlohmann::json& params,
                                      int n, int K);

// How the per-run step size is resolved.
struct StepsizeSpec {
  // "fixed" (value), "strcvx_log", "tail_average_log", "grab_lambert".
  std::string kind = "fixed";
  double value = 0.0;  // for "fixed"
  double D = 0.0;      // schedules: 0 -> default nu/mu
  double H = 1.0;      // grab_lambert: prefix-sum bound
  double F0_gap = -1.0;  // grab_lambert: <0 -> computed as gap(x0)
};

struct PolicySpec {
  // "rr", "single_shuffle", "incremental", "grab", "fixed",
  // "exhaustive_best", "exhaustive_worst".
  std::string kind = "rr";
  std::string herd = "greedy";  // for "grab": "greedy" or "signwalk"
  std::vector<int> fixed_order;
  std::vector<int> initial_order;
};

struct SweepSpec {
  std::string objective;         // zoo key
  nlohmann::json objective_params;  // numeric parameter map
  PolicySpec policy;
  std::string axis = "K";        // "K", "n", or "eta"
  std::vector<double> axis_values;  // strictly increasing
  int K = 1;                     // fixed K when axis != "K"
  int n = 2;                     // fixed n when axis != "n"
  StepsizeSpec stepsize;         // resolves eta when axis != "eta"
  std::string averaging = "final";  // "final", "uniform", "tail"
  int seeds = 1;
  std::uint64_t master_seed = 1;
  Vec x0;                        // empty -> objective's suggested x0 (error if none)
};

SweepSpec sweep_spec_from_json(const nlohmann::json& j);
nlohmann::json sweep_spec_to_json(const SweepSpec& spec);

// Resolves the step size for one run (schedules read the objective's declared
// constants; D <= 0 defaults to nu/mu, F0_gap < 0 to gap(x0)).
double resolve_stepsize(const StepsizeSpec& spec, const FiniteSumObjective& obj,
                        const Vec& x0, int n, int K);

// Instantiates a policy from its spec with the given seed.
PermutationPolicy make_policy(const PolicySpec& spec, int n, std::uint64_t seed);

struct SweepRow {
  double axis_value = 0.0;
  double eta = 0.0;          // resolved step size
  double mean_gap = 0.0;     // +inf when any seed diverged
  double stderr_gap = 0.0;
  double median_gap = 0.0;
  int diverged = 0;
  int seeds = 0;
};

struct RawRow {
  double axis_value = 0.0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  double gap = 0.0;          // +inf when diverged
  bool diverged = false;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;
  std::vector<RawRow> raw;
};

SweepResult run_sweep(const SweepSpec& spec);

// Log-log least-squares fit gap ~ C * axis^exponent.
struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;    // log C
  double r_squared = 0.0;
  double stderr_exponent = 0.0;
  int points_used = 0;
  bool excluded_smallest = false;  // smallest axis value dropped once (see below)
  double r_squared_before = 0.0;   // fit quality before the drop (if dropped)
};

// Fits on (log axis, log gap). Non-finite and nonpositive gaps are excluded;
// fewer than 4 usable points is an error. If the initial fit has r^2 < 0.98
// the smallest axis value is dropped once (transient-dominated head) and the
// fit is repeated; the drop is recorded in the result.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct CompareReport {
  SweepResult a;
  SweepResult b;
  RateFit fit_a;
  RateFit fit_b;
  std::vector<double> mean_ratio;   // per axis value: mean_b / mean_a
  double b_no_worse_fraction = 0.0; // fraction of (axis, seed) cells with
                                    // gap_b <= gap_a
};

// Runs both sweeps (which must share objective, axis, axis values, seeds, and
// master seed so the Monte Carlo draws pair up) and summarizes the comparison.
CompareReport compare_policies(const SweepSpec& a, const SweepSpec& b);

// ---------------------------------------------------------------------------
// Specialized mean-curve kernel
// ---------------------------------------------------------------------------

struct MeanCurve {
  Vec mean;     // mean[k] = E[iterate after k epochs], k = 0..K
  Vec stderr_;  // standard error of mean[k] across seeds
};

// Exact-arithmetic fast path for the one-dimensional piecewise family
//   f_i(y) = c(y) y^2/2 + s_i nu y,  c(y) = L for y < 0 and mu0 for y >= 0,
// under uniform random reshuffling: per epoch the balanced sign pattern is
// drawn uniformly, and the per-step update y <- y - eta (c(y) y + s nu)
// matches run_epochs bit for bit for the same pattern. Returns the across-seed
// mean and standard error of the end-of-epoch iterates. Guarded to n <= 24.
MeanCurve rr_mean_curve_piecewise(double L, double mu0, double nu, int n, double eta,
                                  int K, int seeds, std::uint64_t master_seed, double y0);

// Single-trajectory form used to validate the kernel against run_epochs: one
// seed, caller-supplied balanced sign pattern per epoch (+1 = first-half
// component). Returns the K+1 end-of-epoch iterates.
Vec piecewise_trajectory(double L, double mu0, double nu, double eta, double y0,
                         const std::vector<std::vector<int>>& patterns);

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

void write_summary_csv(const std::string& path, const SweepResult& result);
void write_raw_csv(const std::string& path, const SweepResult& result);
// Reads (axis_value, mean_gap) pairs back from a summary CSV.
std::vector<std::pair<double, double>> read_summary_csv(const std::string& path);

nlohmann::json rate_fit_to_json(const RateFit& fit);
nlohmann::json sweep_result_to_json(const SweepResult& result);
nlohmann::json compare_report_to_json(const CompareReport& report);

}  // namespace permsgd
