// Finite-sum objectives and the zoo of worst-case constructions.
//
// A FiniteSumObjective is F(x) = (1/n) * sum_i f_i(x) together with declared
// regularity constants (L, mu, tau, nu), its optimum, and optional structural
// metadata (diagonal-quadratic components, half-split sign symmetry, curvature
// breakpoints) that the oracles and fast paths exploit.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "permsgd/linalg.hpp"

namespace permsgd {

// Which regularity class the objective is declared to belong to.
enum class ClassTag {
  kSmoothStronglyConvex,   // smooth, strongly convex components and mean
  kPolyakLojasiewicz,      // mean satisfies a PL inequality; components may be nonconvex
};

// Declared constants: L-smooth components, mu-strong convexity (or PL constant)
// of the mean, and gradient-error bound ||grad f_i(x) - grad F(x)|| <=
// tau * ||grad F(x)|| + nu.
struct ObjectiveConstants {
  double L = 0.0;
  double mu = 0.0;
  double tau = 0.0;
  double nu = 0.0;
};

// One component f_i: value and gradient at a point of fixed dimension.
struct ComponentFn {
  int dim = 1;
  std::function<double(const Vec&)> eval;
  std::function<void(const Vec&, Vec&)> grad_into;  // resizes the output to dim

  Vec grad(const Vec& x) const {
    Vec g;
    grad_into(x, g);
    return g;
  }
};

// Diagonal-quadratic component metadata: f_i(x) = 1/2 sum_j a_j x_j^2 +
// sum_j b_j x_j + c, so grad f_i(x) = a .* x + b. Present for every component
// exactly when the whole objective is quadratic; enables closed-form oracles.
struct QuadComponent {
  Vec a;
  Vec b;
  double c = 0.0;
};

struct FiniteSumObjective {
  std::string name;
  int n = 0;
  int dim = 0;
  std::vector<ComponentFn> components;
  ObjectiveConstants constants;
  ClassTag class_tag = ClassTag::kSmoothStronglyConvex;

  // Known optimum of the mean F.
  Vec x_star;
  double f_star = 0.0;

  // Construction metadata (may be empty / false for custom objectives).
  Vec x0_suggested;                 // canonical initial point, if the
                                    // construction prescribes one
  bool half_split_identical = false;  // components 1..n/2 are one function and
                                      // n/2+1..n another (sign-split noise)
  std::vector<QuadComponent> quad;  // size n iff all components quadratic
  std::vector<int> kink_dims;      // coordinates whose gradient has a
                                   // curvature breakpoint at 0

  bool is_quadratic() const { return !quad.empty(); }

  double F(const Vec& x) const;
  void F_grad_into(const Vec& x, Vec& g) const;
  Vec F_grad(const Vec& x) const;
  double gap(const Vec& x) const { return F(x) - f_star; }
};

// A balanced sign assignment: exactly n/2 entries +1 and n/2 entries -1.
struct SignPattern {
  std::vector<int> signs;

  bool valid() const;
};

// All C(n, n/2) balanced sign patterns of even length n, in lexicographic
// order with +1 < -1 (i.e. the all-plus-first pattern comes first).
std::vector<SignPattern> enumerate_sign_patterns(int n);

// ---------------------------------------------------------------------------
// Objective zoo. Factory names follow the harness keys (see objective_from_key).
// ---------------------------------------------------------------------------

// All components identical: f_i(x) = (mu/2) ||x||^2. No gradient noise.
FiniteSumObjective make_f1_quadratic(double mu, int dim, int n);

// One-dimensional piecewise quadratic with sign-split linear noise:
//   f_i(x) = c(x) x^2 / 2 + s_i * nu * x,  c(x) = L for x < 0, mu0 for x >= 0,
// where s_i = +1 for i <= n/2 and -1 otherwise. Requires even n, 0 < mu0 <= L.
FiniteSumObjective make_f2_piecewise(double L, double mu0, double nu, int n);

// One-dimensional quadratic with sign-split linear noise:
//   f_i(x) = (L/2) x^2 + s_i * nu * x. Requires even n.
FiniteSumObjective make_f3_quadratic_pm(double L, double nu, int n);

// Three-dimensional aggregate of the families above, one per coordinate, with
// the noise budget split as nu/sqrt(3) per noisy block. The curvature of the
// flat branch in the middle block is L / constants::kCurvatureRatio, so the
// condition number L/mu must be at least constants::kCurvatureRatio.
// x0_suggested encodes the canonical initialization, which depends on K.
FiniteSumObjective make_thm1_aggregate(double L, double mu, double nu, int n, int K);

// Two-dimensional coupled construction: for i <= n/2,
//   f_i(y, z) = g_plus(y) + g_minus(z), and the mirrored pair otherwise, with
//   g_pm(x) = c(x) x^2 / 2 +- nu x, c(x) = L for x < 0, L/2 for x >= 0.
// Declared class F(L, L/2, 0, sqrt(2) nu). Requires even n.
FiniteSumObjective make_thm7_coupled(double L, double nu, int n);

// One-dimensional PL pair: half the components are g1(y) = (L/2) y^2 - nu y,
// half are g2(y) = -(L/2)(1 - 2 mu / L) y^2 + nu y, so F(y) = (mu/2) y^2.
// Requires even n and mu < L (the interesting regime has L/mu > n).
FiniteSumObjective make_thm9_nonconvex_pair(double L, double mu, double nu, int n);

// One-dimensional PL construction with a single heavy component:
//   f_1(z) = (L/2) z^2 - nu z,  f_i(z) = -L/(4(n-1)) z^2 + nu/(n-1) z (i >= 2),
// so F(z) = L/(4n) z^2. Requires n >= 2.
FiniteSumObjective make_thm9_single_heavy(double L, double nu, int n);

// Identical steep components f_i(w) = L ||w||^2 (declared smoothness 2L):
// gradient descent with any fixed permutation diverges once eta > 1/L.
FiniteSumObjective make_diverging_quadratic(double L, int dim, int n);

// Noisy quadratic with shifted minima: f_i(x) = (L/2) ||x - b_i||^2.
// With spread_seed == 0 the shifts are the balanced sign split
// b_i = s_i * (nu / (L sqrt(dim))) * ones, so the mean is
// (L/2)||x||^2 + nu^2/(2L) with optimum at the origin. With spread_seed > 0
// the shifts are seeded standard-normal draws, centered so they sum to zero
// and rescaled so max_i ||grad f_i(x*)|| = L max_i ||b_i|| = nu exactly; the
// optimum stays at the origin but the shifts are heterogeneous, which keeps
// gradient-balancing orders nontrivial. Even n in both modes.
FiniteSumObjective make_shifted_quadratic(double L, double nu, int dim, int n,
                                          std::uint64_t spread_seed = 0);

// Opt-in helper for odd component counts: appends one identically-zero
// component and rescales the original components by (n+1)/n so the mean F is
// unchanged. Declared constants are adjusted conservatively (in particular
// tau' >= 1 because the zero component's gradient error equals ||grad F||).
FiniteSumObjective pad_to_even(const FiniteSumObjective& obj);

// ---------------------------------------------------------------------------
// Invariant checking (used by the test suites and the CLI).
// ---------------------------------------------------------------------------

struct ObjectiveCheckOptions {
  int num_points = 1000;
  std::uint64_t seed = 20260813;
  double radius = 0.0;  // 0 -> auto: 2 * (1 + ||x0_suggested|| + ||x_star||)
};

struct ObjectiveCheckReport {
  double max_grad_fd_rel_err = 0.0;        // vs central differences
  double max_assumption1_violation = 0.0;  // ||dev|| - (tau ||grad F|| + nu)
  double max_smoothness_violation = 0.0;   // ||dg_i|| - L ||dx||
  double max_pl_violation = 0.0;           // mu (F - f*) - 1/2 ||grad F||^2
  double optimum_mean_grad_norm = 0.0;     // ||grad F(x_star)||
  double optimum_value_err = 0.0;          // |F(x_star) - f_star|
  bool pass = false;
};

// Samples num_points points (and pairs) in a box of the given radius and
// verifies the declared invariants: finite-difference gradients (rel. 1e-5,
// skipping a band of width 1e-6 around curvature breakpoints), the gradient
// error bound and component smoothness (slack 1e-9), the PL inequality for
// PL-tagged objectives (slack 1e-9), and stationarity/value at the optimum
// (1e-12).
ObjectiveCheckReport check_objective(const FiniteSumObjective& obj,
                                     const ObjectiveCheckOptions& opts = {});

}  // namespace permsgd
