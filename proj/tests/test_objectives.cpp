// Unit tests for the objective zoo. Every numeric expectation below was
// derived by hand from the closed-form definitions before being frozen here.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "permsgd/constants.hpp"
#include "permsgd/objectives.hpp"

using namespace permsgd;

namespace {

// One pass over the components in the given order: x <- x - eta * grad f_i(x).
Vec manual_epoch(const FiniteSumObjective& obj, Vec x, double eta,
                 const std::vector<int>& order) {
  Vec g;
  for (int i : order) {
    obj.components[static_cast<std::size_t>(i)].grad_into(x, g);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] -= eta * g[j];
  }
  return x;
}

}  // namespace

TEST_CASE("f1: identical quadratics") {
  const auto obj = make_f1_quadratic(0.5, 1, 4);
  CHECK(obj.n == 4);
  CHECK(obj.dim == 1);
  CHECK(obj.is_quadratic());
  CHECK(obj.constants.nu == 0.0);
  CHECK(obj.components[2].grad({3.0})[0] == doctest::Approx(1.5));
  CHECK(obj.F({2.0}) == doctest::Approx(1.0));  // 0.25 * 4
  CHECK(obj.gap({0.0}) == 0.0);

  // One epoch of eta = 0.1 from x = 1: each step multiplies by 0.95.
  const Vec x1 = manual_epoch(obj, {1.0}, 0.1, {0, 1, 2, 3});
  CHECK(x1[0] == doctest::Approx(0.81450625).epsilon(1e-14));

  CHECK_THROWS_AS(make_f1_quadratic(0.0, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_f1_quadratic(1.0, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_f1_quadratic(1.0, 1, 0), std::invalid_argument);
}

TEST_CASE("f2: piecewise curvature with sign-split noise") {
  const auto obj = make_f2_piecewise(2.0, 0.5, 0.3, 4);
  // Component 0 carries +nu; at x = -1 the steep branch applies.
  CHECK(obj.components[0].grad({-1.0})[0] == doctest::Approx(-1.7));
  // Component 3 carries -nu; at x = +1 the flat branch applies.
  CHECK(obj.components[3].grad({1.0})[0] == doctest::Approx(0.2));
  // Values: f_0(-1) = 0.5*2*1 - 0.3 = 0.7, f_3(1) = 0.5*0.5 - 0.3 = -0.05.
  CHECK(obj.components[0].eval({-1.0}) == doctest::Approx(0.7));
  CHECK(obj.components[3].eval({1.0}) == doctest::Approx(-0.05));
  // The linear terms cancel in the mean.
  CHECK(obj.F({-1.0}) == doctest::Approx(1.0));
  CHECK(obj.F_grad({0.0})[0] == 0.0);
  CHECK(obj.constants.L == 2.0);
  CHECK(obj.constants.mu == 0.5);
  CHECK(obj.constants.nu == 0.3);
  CHECK(obj.kink_dims == std::vector<int>{0});
  CHECK(obj.half_split_identical);
  CHECK_FALSE(obj.is_quadratic());  // curvature breakpoint: no quad metadata

  CHECK_THROWS_AS(make_f2_piecewise(2.0, 0.5, 0.3, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_f2_piecewise(0.5, 2.0, 0.3, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_f2_piecewise(2.0, 0.0, 0.3, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_f2_piecewise(2.0, 0.5, -0.1, 4), std::invalid_argument);
}

TEST_CASE("f3: quadratic with sign-split noise, hand-unrolled epoch") {
  const auto obj = make_f3_quadratic_pm(1.0, 1.0, 2);
  CHECK(obj.is_quadratic());
  CHECK(obj.quad[0].b[0] == 1.0);
  CHECK(obj.quad[1].b[0] == -1.0);

  // From x = 0 with eta = 0.1: order (0,1) gives
  //   x1 = -0.1, then grad = -0.1 - 1 = -1.1, x2 = -0.1 + 0.11 = +0.01.
  const Vec plus = manual_epoch(obj, {0.0}, 0.1, {0, 1});
  const Vec minus = manual_epoch(obj, {0.0}, 0.1, {1, 0});
  CHECK(plus[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(minus[0] == doctest::Approx(-0.01).epsilon(1e-12));

  // F(x) = x^2 / 2, so both orders end at gap 5e-5.
  CHECK(obj.gap(plus) == doctest::Approx(5e-5).epsilon(1e-10));
  CHECK(obj.gap(minus) == doctest::Approx(5e-5).epsilon(1e-10));

  CHECK_THROWS_AS(make_f3_quadratic_pm(1.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("aggregate: block structure and canonical initialization") {
  const double L = 2415.0, mu = 1.0, nu = 0.6;
  const int n = 8, K = 100;
  const auto obj = make_thm1_aggregate(L, mu, nu, n, K);
  CHECK(obj.dim == 3);
  CHECK(obj.F({0.0, 0.0, 0.0}) == 0.0);
  // The +-nu/sqrt(3) noise terms cancel only up to plain-summation roundoff;
  // the declared contract for the mean gradient at the optimum is 1e-12.
  CHECK(norm2(obj.F_grad({0.0, 0.0, 0.0})) <= 1e-12);

  // Per-component deviation from the mean gradient: the noisy second and
  // third blocks each contribute (nu / sqrt(3))^2.
  const Vec x{0.4, -0.2, 0.7};
  const Vec gmean = obj.F_grad(x);
  for (const auto& comp : obj.components) {
    const Vec dev = sub(comp.grad(x), gmean);
    CHECK(norm2(dev) == doctest::Approx(std::sqrt(2.0 / 3.0) * nu).epsilon(1e-12));
  }

  // Canonical initialization: (nu/mu, small positive, 0).
  REQUIRE(obj.x0_suggested.size() == 3);
  CHECK(obj.x0_suggested[0] == doctest::Approx(nu / mu));
  CHECK(obj.x0_suggested[1] ==
        doctest::Approx(constants::kInitFactor * nu / (mu * std::sqrt(8.0) * 100.0))
            .epsilon(1e-15));
  CHECK(obj.x0_suggested[2] == 0.0);
  CHECK(obj.x0_suggested[1] > 0.0);

  // Flat-branch curvature of the middle block is L / kCurvatureRatio.
  const double mu0 = L / constants::kCurvatureRatio;
  const Vec gp = obj.components[0].grad({0.0, 1.0, 0.0});
  CHECK(gp[1] == doctest::Approx(mu0 * 1.0 + nu / std::sqrt(3.0)).epsilon(1e-12));
  const Vec gm = obj.components[0].grad({0.0, -1.0, 0.0});
  CHECK(gm[1] == doctest::Approx(-L + nu / std::sqrt(3.0)).epsilon(1e-12));

  // Condition-number guard.
  CHECK_THROWS_AS(make_thm1_aggregate(1000.0, 1.0, nu, n, K), std::invalid_argument);
  CHECK_THROWS_AS(make_thm1_aggregate(L, mu, nu, 7, K), std::invalid_argument);
  CHECK_THROWS_AS(make_thm1_aggregate(L, mu, nu, n, 0), std::invalid_argument);
}

TEST_CASE("coupled: mirrored piecewise pair") {
  const double L = 2.0, nu = 0.5;
  const auto obj = make_thm7_coupled(L, nu, 4);
  CHECK(obj.dim == 2);
  // Component 0 at (1, 1): flat branch, grads (L/2*1 + nu, L/2*1 - nu).
  const Vec g0 = obj.components[0].grad({1.0, 1.0});
  CHECK(g0[0] == doctest::Approx(1.5));
  CHECK(g0[1] == doctest::Approx(0.5));
  // Component 0 at (-1, -1): steep branch.
  const Vec g0n = obj.components[0].grad({-1.0, -1.0});
  CHECK(g0n[0] == doctest::Approx(-1.5));
  CHECK(g0n[1] == doctest::Approx(-2.5));
  // Mirrored component swaps the noise signs.
  const Vec g2 = obj.components[2].grad({1.0, 1.0});
  CHECK(g2[0] == doctest::Approx(0.5));
  CHECK(g2[1] == doctest::Approx(1.5));

  CHECK(obj.constants.L == L);
  CHECK(obj.constants.mu == 0.5 * L);
  CHECK(obj.constants.nu == doctest::Approx(std::sqrt(2.0) * nu).epsilon(1e-15));
  CHECK(obj.x0_suggested == Vec{nu / (2.0 * L), 0.0});

  // Deviation from the mean gradient is exactly (+-nu, -+nu).
  const Vec x{0.3, -0.8};
  const Vec gmean = obj.F_grad(x);
  for (const auto& comp : obj.components) {
    CHECK(norm2(sub(comp.grad(x), gmean)) ==
          doctest::Approx(std::sqrt(2.0) * nu).epsilon(1e-12));
  }
}

TEST_CASE("nonconvex pair: mean is (mu/2) y^2 and swaps shift the iterate by 2 eta^2 mu nu") {
  const auto obj = make_thm9_nonconvex_pair(10.0, 0.1, 0.5, 4);
  CHECK(obj.F({2.0}) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(obj.class_tag == ClassTag::kPolyakLojasiewicz);
  CHECK(obj.quad[0].a[0] == 10.0);
  CHECK(obj.quad[0].b[0] == -0.5);
  CHECK(obj.quad[2].a[0] == doctest::Approx(-(10.0 - 0.2)));
  CHECK(obj.quad[2].b[0] == 0.5);
  CHECK(obj.x0_suggested == Vec{0.5 / 600.0});

  // Adjacent-transposition identity: running (g1 then g2) vs (g2 then g1)
  // moves the final point by exactly 2 eta^2 mu nu.
  const double L = 1.0, mu = 0.1, nu = 0.3, eta = 0.05;
  const auto pair2 = make_thm9_nonconvex_pair(L, mu, nu, 2);
  const Vec a = manual_epoch(pair2, {0.7}, eta, {0, 1});
  const Vec b = manual_epoch(pair2, {0.7}, eta, {1, 0});
  CHECK(std::abs(a[0] - b[0]) ==
        doctest::Approx(2.0 * eta * eta * mu * nu).epsilon(1e-10));

  CHECK_THROWS_AS(make_thm9_nonconvex_pair(1.0, 1.0, 0.5, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_thm9_nonconvex_pair(10.0, 0.1, 0.5, 3), std::invalid_argument);
}

TEST_CASE("single heavy component: F(z) = L/(4n) z^2") {
  const double L = 4.0, nu = 1.0;
  const auto obj = make_thm9_single_heavy(L, nu, 4);
  CHECK(obj.F({1.0}) == doctest::Approx(0.25).epsilon(1e-14));
  // Mean gradient is L/(2n) z.
  CHECK(obj.F_grad({2.0})[0] == doctest::Approx(L / 8.0 * 2.0).epsilon(1e-13));
  CHECK(obj.constants.tau == 7.0);  // 2n - 1
  CHECK(obj.constants.mu == doctest::Approx(L / 8.0));
  CHECK(obj.x0_suggested == Vec{3.0 * nu / (8.0 * 4.0 * L)});
  CHECK(obj.class_tag == ClassTag::kPolyakLojasiewicz);

  // Odd n is allowed here.
  const auto odd = make_thm9_single_heavy(2.0, 0.5, 5);
  CHECK(odd.n == 5);
  CHECK(odd.F({1.0}) == doctest::Approx(2.0 / 20.0).epsilon(1e-13));
}

TEST_CASE("diverging quadratic: one half-step lands on the optimum") {
  const auto obj = make_diverging_quadratic(1.0, 2, 3);
  CHECK(obj.constants.L == 2.0);
  const Vec g = obj.components[1].grad({0.5, -2.0});
  CHECK(g == Vec{1.0, -4.0});
  // eta = 1/(2L): w - eta * 2L w = 0.
  const Vec x1 = manual_epoch(obj, {3.0, -1.0}, 0.5, {0});
  CHECK(norm2(x1) == 0.0);
}

TEST_CASE("shifted quadratic: offset noise with positive optimal value") {
  const double L = 2.0, nu = 0.4;
  const auto obj = make_shifted_quadratic(L, nu, 4, 6);
  CHECK(obj.f_star == doctest::Approx(nu * nu / (2.0 * L)).epsilon(1e-15));
  CHECK(obj.F({0.0, 0.0, 0.0, 0.0}) == doctest::Approx(obj.f_star).epsilon(1e-14));
  // The origin is the optimum (the shifts are centered), so its gap vanishes
  // even though the optimal value itself is positive.
  CHECK(std::fabs(obj.gap({0.0, 0.0, 0.0, 0.0})) <= 1e-15);
  // Deviation from the mean gradient is exactly nu at every point.
  const Vec x{1.0, -2.0, 0.3, 0.0};
  const Vec gmean = obj.F_grad(x);
  for (const auto& comp : obj.components) {
    CHECK(norm2(sub(comp.grad(x), gmean)) == doctest::Approx(nu).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_shifted_quadratic(L, nu, 4, 5), std::invalid_argument);
}

TEST_CASE("pad_to_even preserves the mean and adjusts constants") {
  const auto base = make_thm9_single_heavy(3.0, 0.6, 3);
  const auto padded = pad_to_even(base);
  CHECK(padded.n == 4);
  CHECK(padded.dim == 1);
  // F unchanged at sample points.
  for (double z : {-1.3, 0.2, 2.0}) {
    CHECK(padded.F({z}) == doctest::Approx(base.F({z})).epsilon(1e-14));
    CHECK(padded.F_grad({z})[0] == doctest::Approx(base.F_grad({z})[0]).epsilon(1e-13));
  }
  // The appended component is identically zero.
  CHECK(padded.components[3].eval({5.0}) == 0.0);
  CHECK(padded.components[3].grad({5.0})[0] == 0.0);
  // Constants: L' = (4/3) L, tau' = ((n+1) tau + 1)/n with tau = 2n-1 = 5.
  CHECK(padded.constants.L == doctest::Approx(4.0));
  CHECK(padded.constants.mu == base.constants.mu);
  CHECK(padded.constants.tau == doctest::Approx(7.0));
  CHECK(padded.constants.nu == doctest::Approx(0.8));
  CHECK(padded.is_quadratic());
  CHECK(padded.quad.size() == 4);

  // Even input is returned unchanged.
  const auto even = make_f3_quadratic_pm(1.0, 1.0, 4);
  CHECK(pad_to_even(even).n == 4);
  CHECK(pad_to_even(even).name == even.name);
}

TEST_CASE("balanced sign patterns enumerate in lexicographic order") {
  const auto pats = enumerate_sign_patterns(4);
  REQUIRE(pats.size() == 6);
  CHECK(pats[0].signs == std::vector<int>{1, 1, -1, -1});
  CHECK(pats[5].signs == std::vector<int>{-1, -1, 1, 1});
  std::set<std::vector<int>> uniq;
  for (const auto& p : pats) {
    CHECK(p.valid());
    uniq.insert(p.signs);
  }
  CHECK(uniq.size() == 6);
  CHECK(enumerate_sign_patterns(2).size() == 2);
  CHECK(enumerate_sign_patterns(6).size() == 20);
  CHECK_THROWS_AS(enumerate_sign_patterns(3), std::invalid_argument);

  CHECK(SignPattern{{1, -1}}.valid());
  CHECK_FALSE(SignPattern{{1, 1}}.valid());
  CHECK_FALSE(SignPattern{{1, -1, 1}}.valid());
  CHECK_FALSE(SignPattern{{2, -1}}.valid());
}

TEST_CASE("check_objective accepts the whole zoo") {
  std::vector<FiniteSumObjective> zoo;
  zoo.push_back(make_f1_quadratic(0.5, 2, 4));
  zoo.push_back(make_f2_piecewise(2.0, 0.5, 0.3, 6));
  zoo.push_back(make_f3_quadratic_pm(1.0, 1.0, 4));
  zoo.push_back(make_thm1_aggregate(2415.0, 1.0, 0.6, 8, 100));
  zoo.push_back(make_thm7_coupled(2.0, 0.5, 4));
  zoo.push_back(make_thm9_nonconvex_pair(10.0, 0.1, 0.5, 4));
  zoo.push_back(make_thm9_single_heavy(4.0, 1.0, 4));
  zoo.push_back(make_thm9_single_heavy(4.0, 1.0, 5));
  zoo.push_back(make_diverging_quadratic(1.0, 2, 4));
  zoo.push_back(make_shifted_quadratic(2.0, 0.4, 3, 6));
  zoo.push_back(pad_to_even(make_thm9_single_heavy(3.0, 0.6, 3)));

  ObjectiveCheckOptions opts;
  opts.num_points = 400;
  for (const auto& obj : zoo) {
    const auto rep = check_objective(obj, opts);
    INFO(obj.name, ": fd=", rep.max_grad_fd_rel_err,
         " a1=", rep.max_assumption1_violation, " sm=", rep.max_smoothness_violation,
         " pl=", rep.max_pl_violation);
    CHECK(rep.pass);
  }
}

TEST_CASE("check_objective rejects a broken gradient") {
  auto obj = make_f1_quadratic(1.0, 1, 2);
  obj.components[0].grad_into = [](const Vec& x, Vec& g) {
    g.assign(1, 0.5 * x[0]);  // wrong slope
  };
  ObjectiveCheckOptions opts;
  opts.num_points = 50;
  const auto rep = check_objective(obj, opts);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_grad_fd_rel_err > 1e-5);
}
