// Permuted-order SGD driver, averaging schemes, and step-size schedules.
#pragma once

#include <cstdint>
#include <vector>

#include "permsgd/linalg.hpp"
#include "permsgd/objectives.hpp"
#include "permsgd/shuffler.hpp"

namespace permsgd {

struct RunConfig {
  double eta = 0.0;   // step size, must be positive
  int epochs = 0;     // number of passes K, must be >= 1
  Vec x0;             // initial point (dimension must match the objective)
  bool record_steps = false;  // also record every within-epoch iterate
};

// Trace of one run. end_points[k] is the iterate after k full epochs (so
// end_points[0] = x0 and, when the run did not diverge, end_points has
// epochs+1 entries). Replaying the same objective, policy kind/seed, and
// config reproduces the trace bit for bit.
struct EpochTrace {
  std::vector<Vec> end_points;
  std::vector<std::vector<int>> permutations_used;  // one per completed epoch
  std::uint64_t seed = 0;
  bool diverged = false;
  int diverged_epoch = 0;         // 1-based epoch at which divergence was flagged
  std::vector<Vec> step_points;   // all iterates incl. x0 (only if record_steps)

  const Vec& final_point() const { return end_points.back(); }
};

EpochTrace run_epochs(const FiniteSumObjective& obj, PermutationPolicy& policy,
                      const RunConfig& config);

// Nonnegative weights over the K+1 end-of-epoch iterates x_0^1 .. x_0^{K+1};
// weighted_average normalizes by the weight sum.
struct AveragingScheme {
  std::vector<double> weights;

  static AveragingScheme final_iterate(int epochs);
  static AveragingScheme uniform(int epochs);
  // Uniform over the last floor(K/2) + 1 end points.
  static AveragingScheme tail(int epochs);
};

Vec weighted_average(const EpochTrace& trace, const AveragingScheme& scheme);

// ---------------------------------------------------------------------------
// Step-size schedules
// ---------------------------------------------------------------------------

// Strongly convex final-iterate schedule:
//   min{ 2/(L n), (1/(mu n K)) max(1, log(mu^3 n D^2 K^2 / (L nu^2))) }.
// D is the initial distance scale ||x0 - x*||. When nu = 0 the log argument is
// taken as +infinity and the schedule returns 2/(L n).
double stepsize_mishchenko_strcvx(double L, double mu, double nu, double D, int n, int K);

// Tail-averaged variant: min{ 1/(sqrt(2) L n), (9/(mu n K)) max(1, log(...)) }
// with the same log argument as above.
double stepsize_tail_average(double L, double mu, double nu, double D, int n, int K);

// Principal branch of the Lambert W function (W >= -1, defined for
// x >= -1/e), solved to |W e^W - x| <= 1e-12 max(1, |x|).
double lambert_w0(double x);

// Herded-order schedule: eta = (2/(mu n K)) W0(arg) with
//   arg = (F0_gap + nu^2/L) mu^3 n^2 K^2 / (192 H^2 L^2 nu^2),
// where H is the prefix-sum bound achieved by the ordering and F0_gap the
// initial optimality gap. Requires nu > 0 and H > 0.
double stepsize_grab(double F0_gap, double L, double mu, double nu, double H,
                     int n, int K);

}  // namespace permsgd
