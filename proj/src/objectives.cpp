#include "permsgd/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "permsgd/constants.hpp"
#include "permsgd/rng.hpp"

namespace permsgd {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Balanced sign for component index i (0-based): +1 for the first half.
double half_split_sign(int i, int n) { return i < n / 2 ? 1.0 : -1.0; }

// One-dimensional piecewise quadratic c(x) x^2/2 + s*nu*x with curvature
// c_neg for x < 0 and c_pos for x >= 0. The gradient is continuous; only its
// slope jumps at 0.
ComponentFn piecewise_component_1d(double c_neg, double c_pos, double s_nu) {
  ComponentFn f;
  f.dim = 1;
  f.eval = [=](const Vec& x) {
    double c = x[0] < 0.0 ? c_neg : c_pos;
    return 0.5 * c * x[0] * x[0] + s_nu * x[0];
  };
  f.grad_into = [=](const Vec& x, Vec& g) {
    g.assign(1, 0.0);
    double c = x[0] < 0.0 ? c_neg : c_pos;
    g[0] = c * x[0] + s_nu;
  };
  return f;
}

// Diagonal-quadratic component from its metadata.
ComponentFn quad_component(const QuadComponent& q) {
  ComponentFn f;
  f.dim = static_cast<int>(q.a.size());
  f.eval = [q](const Vec& x) {
    double v = q.c;
    for (std::size_t j = 0; j < q.a.size(); ++j) {
      v += 0.5 * q.a[j] * x[j] * x[j] + q.b[j] * x[j];
    }
    return v;
  };
  f.grad_into = [q](const Vec& x, Vec& g) {
    g.resize(q.a.size());
    for (std::size_t j = 0; j < q.a.size(); ++j) g[j] = q.a[j] * x[j] + q.b[j];
  };
  return f;
}

}  // namespace

double FiniteSumObjective::F(const Vec& x) const {
  NeumaierSum s;
  for (const auto& c : components) s.add(c.eval(x));
  return s.value() / static_cast<double>(n);
}

void FiniteSumObjective::F_grad_into(const Vec& x, Vec& g) const {
  g.assign(static_cast<std::size_t>(dim), 0.0);
  Vec tmp;
  for (const auto& c : components) {
    c.grad_into(x, tmp);
    axpy(1.0, tmp, g);
  }
  scale(1.0 / static_cast<double>(n), g);
}

Vec FiniteSumObjective::F_grad(const Vec& x) const {
  Vec g;
  F_grad_into(x, g);
  return g;
}

bool SignPattern::valid() const {
  if (signs.size() % 2 != 0) return false;
  int plus = 0;
  for (int s : signs) {
    if (s != 1 && s != -1) return false;
    if (s == 1) ++plus;
  }
  return plus * 2 == static_cast<int>(signs.size());
}

std::vector<SignPattern> enumerate_sign_patterns(int n) {
  require(n >= 2 && n % 2 == 0, "enumerate_sign_patterns: n must be even and >= 2");
  std::vector<SignPattern> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  // Depth-first with +1 explored before -1 so patterns come out in
  // lexicographic order with +1 < -1.
  auto rec = [&](auto&& self, int pos, int plus_left, int minus_left) -> void {
    if (pos == n) {
      out.push_back(SignPattern{cur});
      return;
    }
    if (plus_left > 0) {
      cur[static_cast<std::size_t>(pos)] = 1;
      self(self, pos + 1, plus_left - 1, minus_left);
    }
    if (minus_left > 0) {
      cur[static_cast<std::size_t>(pos)] = -1;
      self(self, pos + 1, plus_left, minus_left - 1);
    }
  };
  rec(rec, 0, n / 2, n / 2);
  return out;
}

// ---------------------------------------------------------------------------
// Zoo factories
// ---------------------------------------------------------------------------

FiniteSumObjective make_f1_quadratic(double mu, int dim, int n) {
  require(mu > 0.0, "make_f1_quadratic: mu must be positive");
  require(dim >= 1, "make_f1_quadratic: dim must be >= 1");
  require(n >= 1, "make_f1_quadratic: n must be >= 1");
  FiniteSumObjective obj;
  obj.name = "f1_quadratic";
  obj.n = n;
  obj.dim = dim;
  QuadComponent q{Vec(static_cast<std::size_t>(dim), mu),
                  Vec(static_cast<std::size_t>(dim), 0.0), 0.0};
  for (int i = 0; i < n; ++i) {
    obj.quad.push_back(q);
    obj.components.push_back(quad_component(q));
  }
  obj.constants = {mu, mu, 0.0, 0.0};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star.assign(static_cast<std::size_t>(dim), 0.0);
  obj.f_star = 0.0;
  obj.half_split_identical = n % 2 == 0;
  return obj;
}

FiniteSumObjective make_f2_piecewise(double L, double mu0, double nu, int n) {
  require(L > 0.0 && mu0 > 0.0 && mu0 <= L, "make_f2_piecewise: need 0 < mu0 <= L");
  require(nu >= 0.0, "make_f2_piecewise: nu must be nonnegative");
  require(n >= 2 && n % 2 == 0, "make_f2_piecewise: n must be even and >= 2");
  FiniteSumObjective obj;
  obj.name = "f2_piecewise";
  obj.n = n;
  obj.dim = 1;
  for (int i = 0; i < n; ++i) {
    obj.components.push_back(piecewise_component_1d(L, mu0, half_split_sign(i, n) * nu));
  }
  obj.constants = {L, mu0, 0.0, nu};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star = {0.0};
  obj.f_star = 0.0;
  obj.half_split_identical = true;
  obj.kink_dims = {0};
  return obj;
}

FiniteSumObjective make_f3_quadratic_pm(double L, double nu, int n) {
  require(L > 0.0, "make_f3_quadratic_pm: L must be positive");
  require(nu >= 0.0, "make_f3_quadratic_pm: nu must be nonnegative");
  require(n >= 2 && n % 2 == 0, "make_f3_quadratic_pm: n must be even and >= 2");
  FiniteSumObjective obj;
  obj.name = "f3_quadratic_pm";
  obj.n = n;
  obj.dim = 1;
  for (int i = 0; i < n; ++i) {
    QuadComponent q{{L}, {half_split_sign(i, n) * nu}, 0.0};
    obj.quad.push_back(q);
    obj.components.push_back(quad_component(q));
  }
  obj.constants = {L, L, 0.0, nu};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star = {0.0};
  obj.f_star = 0.0;
  obj.half_split_identical = true;
  return obj;
}

FiniteSumObjective make_thm1_aggregate(double L, double mu, double nu, int n, int K) {
  require(L > 0.0 && mu > 0.0, "make_thm1_aggregate: L and mu must be positive");
  require(L / mu >= constants::kCurvatureRatio,
          "make_thm1_aggregate: condition number L/mu must be >= kCurvatureRatio");
  require(nu >= 0.0, "make_thm1_aggregate: nu must be nonnegative");
  require(n >= 2 && n % 2 == 0, "make_thm1_aggregate: n must be even and >= 2");
  require(K >= 1, "make_thm1_aggregate: K must be >= 1");
  const double nu_block = nu / std::sqrt(3.0);
  const double mu0 = L / constants::kCurvatureRatio;

  FiniteSumObjective obj;
  obj.name = "thm1_aggregate";
  obj.n = n;
  obj.dim = 3;
  for (int i = 0; i < n; ++i) {
    const double s = half_split_sign(i, n);
    ComponentFn f;
    f.dim = 3;
    f.eval = [=](const Vec& v) {
      const double x = v[0], y = v[1], z = v[2];
      const double cy = y < 0.0 ? L : mu0;
      return 0.5 * mu * x * x + (0.5 * cy * y * y + s * nu_block * y) +
             (0.5 * L * z * z + s * nu_block * z);
    };
    f.grad_into = [=](const Vec& v, Vec& g) {
      g.resize(3);
      const double x = v[0], y = v[1], z = v[2];
      const double cy = y < 0.0 ? L : mu0;
      g[0] = mu * x;
      g[1] = cy * y + s * nu_block;
      g[2] = L * z + s * nu_block;
    };
    obj.components.push_back(std::move(f));
  }
  obj.constants = {L, mu, 0.0, nu};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star = {0.0, 0.0, 0.0};
  obj.f_star = 0.0;
  obj.half_split_identical = true;
  obj.kink_dims = {1};
  obj.x0_suggested = {nu / mu,
                      constants::kInitFactor * nu /
                          (mu * std::sqrt(static_cast<double>(n)) * static_cast<double>(K)),
                      0.0};
  return obj;
}

FiniteSumObjective make_thm7_coupled(double L, double nu, int n) {
  require(L > 0.0, "make_thm7_coupled: L must be positive");
  require(nu >= 0.0, "make_thm7_coupled: nu must be nonnegative");
  require(n >= 2 && n % 2 == 0, "make_thm7_coupled: n must be even and >= 2");
  FiniteSumObjective obj;
  obj.name = "thm7_coupled";
  obj.n = n;
  obj.dim = 2;
  auto curvature = [L](double x) { return x < 0.0 ? L : 0.5 * L; };
  for (int i = 0; i < n; ++i) {
    // First-half components apply g_plus to y and g_minus to z; second-half
    // components are mirrored.
    const double sy = half_split_sign(i, n);
    ComponentFn f;
    f.dim = 2;
    f.eval = [=](const Vec& v) {
      const double y = v[0], z = v[1];
      return 0.5 * curvature(y) * y * y + sy * nu * y +
             0.5 * curvature(z) * z * z - sy * nu * z;
    };
    f.grad_into = [=](const Vec& v, Vec& g) {
      g.resize(2);
      const double y = v[0], z = v[1];
      g[0] = curvature(y) * y + sy * nu;
      g[1] = curvature(z) * z - sy * nu;
    };
    obj.components.push_back(std::move(f));
  }
  obj.constants = {L, 0.5 * L, 0.0, std::sqrt(2.0) * nu};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star = {0.0, 0.0};
  obj.f_star = 0.0;
  obj.half_split_identical = true;
  obj.kink_dims = {0, 1};
  obj.x0_suggested = {nu / (2.0 * L), 0.0};
  return obj;
}

FiniteSumObjective make_thm9_nonconvex_pair(double L, double mu, double nu, int n) {
  require(L > 0.0 && mu > 0.0 && mu < L, "make_thm9_nonconvex_pair: need 0 < mu < L");
  require(nu >= 0.0, "make_thm9_nonconvex_pair: nu must be nonnegative");
  require(n >= 2 && n % 2 == 0, "make_thm9_nonconvex_pair: n must be even and >= 2");
  FiniteSumObjective obj;
  obj.name = "thm9_nonconvex_pair";
  obj.n = n;
  obj.dim = 1;
  const double a1 = L;                        // g1 curvature
  const double a2 = -(L - 2.0 * mu);          // g2 curvature (negative when L > 2 mu)
  for (int i = 0; i < n; ++i) {
    const bool first_half = i < n / 2;
    QuadComponent q{{first_half ? a1 : a2}, {first_half ? -nu : nu}, 0.0};
    obj.quad.push_back(q);
    obj.components.push_back(quad_component(q));
  }
  obj.constants = {L, mu, L / mu, nu};
  obj.class_tag = ClassTag::kPolyakLojasiewicz;
  obj.x_star = {0.0};
  obj.f_star = 0.0;
  obj.half_split_identical = true;
  obj.x0_suggested = {nu / (60.0 * L)};
  return obj;
}

FiniteSumObjective make_thm9_single_heavy(double L, double nu, int n) {
  require(L > 0.0, "make_thm9_single_heavy: L must be positive");
  require(nu >= 0.0, "make_thm9_single_heavy: nu must be nonnegative");
  require(n >= 2, "make_thm9_single_heavy: n must be >= 2");
  FiniteSumObjective obj;
  obj.name = "thm9_single_heavy";
  obj.n = n;
  obj.dim = 1;
  const double nm1 = static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) {
    QuadComponent q = i == 0 ? QuadComponent{{L}, {-nu}, 0.0}
                             : QuadComponent{{-L / (2.0 * nm1)}, {nu / nm1}, 0.0};
    obj.quad.push_back(q);
    obj.components.push_back(quad_component(q));
  }
  // F(z) = L/(4n) z^2, a PL function with constant L/(2n); the heavy first
  // component dominates the gradient-error bound.
  const double mu_pl = L / (2.0 * static_cast<double>(n));
  obj.constants = {L, mu_pl, 2.0 * static_cast<double>(n) - 1.0, nu};
  obj.class_tag = ClassTag::kPolyakLojasiewicz;
  obj.x_star = {0.0};
  obj.f_star = 0.0;
  obj.x0_suggested = {3.0 * nu / (8.0 * static_cast<double>(n) * L)};
  return obj;
}

FiniteSumObjective make_diverging_quadratic(double L, int dim, int n) {
  require(L > 0.0, "make_diverging_quadratic: L must be positive");
  require(dim >= 1, "make_diverging_quadratic: dim must be >= 1");
  require(n >= 1, "make_diverging_quadratic: n must be >= 1");
  FiniteSumObjective obj;
  obj.name = "diverging_quadratic";
  obj.n = n;
  obj.dim = dim;
  QuadComponent q{Vec(static_cast<std::size_t>(dim), 2.0 * L),
                  Vec(static_cast<std::size_t>(dim), 0.0), 0.0};
  for (int i = 0; i < n; ++i) {
    obj.quad.push_back(q);
    obj.components.push_back(quad_component(q));
  }
  obj.constants = {2.0 * L, 2.0 * L, 0.0, 0.0};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star.assign(static_cast<std::size_t>(dim), 0.0);
  obj.f_star = 0.0;
  obj.half_split_identical = n % 2 == 0;
  return obj;
}

FiniteSumObjective make_shifted_quadratic(double L, double nu, int dim, int n,
                                          std::uint64_t spread_seed) {
  require(L > 0.0, "make_shifted_quadratic: L must be positive");
  require(nu >= 0.0, "make_shifted_quadratic: nu must be nonnegative");
  require(dim >= 1, "make_shifted_quadratic: dim must be >= 1");
  require(n >= 2 && n % 2 == 0, "make_shifted_quadratic: n must be even and >= 2");

  const std::size_t d = static_cast<std::size_t>(dim);
  std::vector<Vec> shifts(static_cast<std::size_t>(n));
  if (spread_seed == 0) {
    const double shift = nu / (L * std::sqrt(static_cast<double>(dim)));
    for (int i = 0; i < n; ++i) {
      shifts[static_cast<std::size_t>(i)].assign(d, half_split_sign(i, n) * shift);
    }
  } else {
    // Seeded heterogeneous shifts: center so they sum to zero (keeping the
    // optimum at the origin), then rescale so the largest ||grad f_i(x*)||
    // equals nu exactly.
    Rng rng(spread_seed);
    for (Vec& b : shifts) {
      b.resize(d);
      for (double& v : b) v = rng.next_normal();
    }
    Vec mean(d, 0.0);
    for (const Vec& b : shifts) axpy(1.0 / static_cast<double>(n), b, mean);
    double max_norm = 0.0;
    for (Vec& b : shifts) {
      axpy(-1.0, mean, b);
      max_norm = std::max(max_norm, norm2(b));
    }
    require(max_norm > 0.0, "make_shifted_quadratic: degenerate shift draw");
    const double s = nu / (L * max_norm);
    for (Vec& b : shifts) scale(s, b);
  }

  FiniteSumObjective obj;
  obj.name = "shifted_quadratic";
  obj.n = n;
  obj.dim = dim;
  double mean_sq = 0.0;
  for (const Vec& b : shifts) {
    // f_i(x) = (L/2) ||x - b||^2
    QuadComponent q{Vec(d, L), Vec(d, 0.0), 0.5 * L * dot(b, b)};
    for (std::size_t j = 0; j < d; ++j) q.b[j] = -L * b[j];
    obj.quad.push_back(q);
    obj.components.push_back(quad_component(q));
    mean_sq += dot(b, b) / static_cast<double>(n);
  }
  obj.constants = {L, L, 0.0, nu};
  obj.class_tag = ClassTag::kSmoothStronglyConvex;
  obj.x_star.assign(d, 0.0);
  // F(x) = (L/2)||x||^2 + (L/2) * mean_i ||b_i||^2, so F* is the constant term.
  obj.f_star = 0.5 * L * mean_sq;
  obj.half_split_identical = (spread_seed == 0);
  return obj;
}

FiniteSumObjective pad_to_even(const FiniteSumObjective& obj) {
  if (obj.n % 2 == 0) return obj;
  const int n = obj.n;
  const double c = static_cast<double>(n + 1) / static_cast<double>(n);

  FiniteSumObjective out;
  out.name = obj.name + "_padded";
  out.n = n + 1;
  out.dim = obj.dim;
  for (int i = 0; i < n; ++i) {
    const ComponentFn& base = obj.components[static_cast<std::size_t>(i)];
    ComponentFn f;
    f.dim = base.dim;
    f.eval = [c, base](const Vec& x) { return c * base.eval(x); };
    f.grad_into = [c, base](const Vec& x, Vec& g) {
      base.grad_into(x, g);
      scale(c, g);
    };
    out.components.push_back(std::move(f));
  }
  ComponentFn zero;
  zero.dim = obj.dim;
  zero.eval = [](const Vec&) { return 0.0; };
  zero.grad_into = [dim = obj.dim](const Vec&, Vec& g) {
    g.assign(static_cast<std::size_t>(dim), 0.0);
  };
  out.components.push_back(std::move(zero));

  // The mean F is unchanged; the scaled components are (n+1)/n * L smooth,
  // and the zero component forces tau >= 1.
  out.constants.L = c * obj.constants.L;
  out.constants.mu = obj.constants.mu;
  out.constants.tau =
      std::max((c * obj.constants.tau * static_cast<double>(n) + 1.0) / static_cast<double>(n),
               1.0);
  out.constants.nu = c * obj.constants.nu;
  out.class_tag = obj.class_tag;
  out.x_star = obj.x_star;
  out.f_star = obj.f_star;
  out.x0_suggested = obj.x0_suggested;
  out.kink_dims = obj.kink_dims;
  out.half_split_identical = false;
  if (obj.is_quadratic()) {
    out.quad = obj.quad;
    for (auto& q : out.quad) {
      scale(c, q.a);
      scale(c, q.b);
      q.c *= c;
    }
    out.quad.push_back(QuadComponent{Vec(static_cast<std::size_t>(obj.dim), 0.0),
                                     Vec(static_cast<std::size_t>(obj.dim), 0.0), 0.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariant checking
// ---------------------------------------------------------------------------

namespace {

// Central finite-difference gradient of a component.
Vec fd_gradient(const ComponentFn& f, const Vec& x) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    g[j] = (f.eval(xp) - f.eval(xm)) / (xp[j] - xm[j]);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return g;
}

bool in_kink_band(const Vec& x, const std::vector<int>& kink_dims, double band) {
  for (int d : kink_dims) {
    if (std::abs(x[static_cast<std::size_t>(d)]) < band) return true;
  }
  return false;
}

}  // namespace

ObjectiveCheckReport check_objective(const FiniteSumObjective& obj,
                                     const ObjectiveCheckOptions& opts) {
  ObjectiveCheckReport rep;
  Rng rng(opts.seed);
  double radius = opts.radius;
  if (radius <= 0.0) {
    radius = 2.0 * (1.0 + norm2(obj.x_star) +
                    (obj.x0_suggested.empty() ? 0.0 : norm2(obj.x0_suggested)));
  }
  const double kink_band = 2e-6 * std::max(1.0, radius);

  auto sample_point = [&](bool avoid_kinks) {
    Vec x(static_cast<std::size_t>(obj.dim));
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (double& v : x) v = radius * (2.0 * rng.next_double() - 1.0);
      if (!avoid_kinks || !in_kink_band(x, obj.kink_dims, kink_band)) break;
    }
    return x;
  };

  Vec g, gi, gx, gy;
  for (int p = 0; p < opts.num_points; ++p) {
    // Gradient vs. finite differences, away from curvature breakpoints.
    Vec x = sample_point(true);
    for (const auto& comp : obj.components) {
      comp.grad_into(x, gi);
      Vec fd = fd_gradient(comp, x);
      for (std::size_t j = 0; j < fd.size(); ++j) {
        const double scale_ref = std::max(1.0, norm2(gi));
        rep.max_grad_fd_rel_err =
            std::max(rep.max_grad_fd_rel_err, std::abs(fd[j] - gi[j]) / scale_ref);
      }
    }

    // Gradient-error bound: ||grad f_i(x) - grad F(x)|| <= tau ||grad F|| + nu.
    x = sample_point(false);
    obj.F_grad_into(x, g);
    const double bound = obj.constants.tau * norm2(g) + obj.constants.nu;
    for (const auto& comp : obj.components) {
      comp.grad_into(x, gi);
      rep.max_assumption1_violation =
          std::max(rep.max_assumption1_violation, norm2(sub(gi, g)) - bound);
    }

    // Component smoothness along a random pair.
    Vec y = sample_point(false);
    const double dxy = norm2(sub(x, y));
    if (dxy > 1e-12) {
      for (const auto& comp : obj.components) {
        comp.grad_into(x, gx);
        comp.grad_into(y, gy);
        rep.max_smoothness_violation = std::max(
            rep.max_smoothness_violation, norm2(sub(gx, gy)) - obj.constants.L * dxy);
      }
    }

    // PL inequality for PL-tagged objectives.
    if (obj.class_tag == ClassTag::kPolyakLojasiewicz) {
      obj.F_grad_into(x, g);
      const double lhs = 0.5 * dot(g, g);
      const double rhs = obj.constants.mu * (obj.F(x) - obj.f_star);
      rep.max_pl_violation = std::max(rep.max_pl_violation, rhs - lhs);
    }
  }

  rep.optimum_mean_grad_norm = norm2(obj.F_grad(obj.x_star));
  rep.optimum_value_err = std::abs(obj.F(obj.x_star) - obj.f_star);
  rep.pass = rep.max_grad_fd_rel_err <= 1e-5 && rep.max_assumption1_violation <= 1e-9 &&
             rep.max_smoothness_violation <= 1e-9 && rep.max_pl_violation <= 1e-9 &&
             rep.optimum_mean_grad_norm <= 1e-12 && rep.optimum_value_err <= 1e-12;
  return rep;
}

}  // namespace permsgd
