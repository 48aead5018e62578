#include "permsgd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "permsgd/oracle.hpp"
#include "permsgd/rng.hpp"

namespace permsgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double param(const nlohmann::json& j, const char* key) {
  require(j.contains(key), std::string("objective params: missing '") + key + "'");
  return j.at(key).get<double>();
}

int int_param_or(const nlohmann::json& j, const char* key, int def) {
  return j.contains(key) ? j.at(key).get<int>() : def;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FiniteSumObjective objective_from_key(const std::string& key, const nlohmann::json& params,
                                      int n, int K) {
  if (key == "f1_quadratic") {
    return make_f1_quadratic(param(params, "mu"), int_param_or(params, "dim", 1), n);
  }
  if (key == "f2_piecewise") {
    return make_f2_piecewise(param(params, "L"), param(params, "mu0"), param(params, "nu"), n);
  }
  if (key == "f3_quadratic_pm") {
    return make_f3_quadratic_pm(param(params, "L"), param(params, "nu"), n);
  }
  if (key == "thm1_aggregate") {
    return make_thm1_aggregate(param(params, "L"), param(params, "mu"), param(params, "nu"), n,
                               K);
  }
  if (key == "thm7_coupled") {
    return make_thm7_coupled(param(params, "L"), param(params, "nu"), n);
  }
  if (key == "thm9_nonconvex_pair") {
    return make_thm9_nonconvex_pair(param(params, "L"), param(params, "mu"),
                                    param(params, "nu"), n);
  }
  if (key == "thm9_single_heavy") {
    return make_thm9_single_heavy(param(params, "L"), param(params, "nu"), n);
  }
  if (key == "diverging_quadratic") {
    return make_diverging_quadratic(param(params, "L"), int_param_or(params, "dim", 1), n);
  }
  if (key == "shifted_quadratic") {
    return make_shifted_quadratic(
        param(params, "L"), param(params, "nu"), int_param_or(params, "dim", 1), n,
        static_cast<std::uint64_t>(int_param_or(params, "spread_seed", 0)));
  }
  throw std::invalid_argument(
      "unknown objective key '" + key +
      "' (expected one of: f1_quadratic, f2_piecewise, f3_quadratic_pm, thm1_aggregate, "
      "thm7_coupled, thm9_nonconvex_pair, thm9_single_heavy, diverging_quadratic, "
      "shifted_quadratic)");
}

namespace {

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "rr") return PolicyKind::kRandomReshuffle;
  if (s == "single_shuffle") return PolicyKind::kSingleShuffle;
  if (s == "incremental") return PolicyKind::kIncremental;
  if (s == "grab") return PolicyKind::kGrabOffline;
  if (s == "fixed") return PolicyKind::kFixed;
  if (s == "exhaustive_best") return PolicyKind::kExhaustiveBest;
  if (s == "exhaustive_worst") return PolicyKind::kExhaustiveWorst;
  throw std::invalid_argument("unknown policy kind '" + s + "'");
}

HerdVariant herd_variant_from_string(const std::string& s) {
  if (s == "greedy") return HerdVariant::kGreedy;
  if (s == "signwalk") return HerdVariant::kSignwalk;
  throw std::invalid_argument("unknown herding variant '" + s + "'");
}

AveragingScheme averaging_from_string(const std::string& s, int epochs) {
  if (s == "final") return AveragingScheme::final_iterate(epochs);
  if (s == "uniform") return AveragingScheme::uniform(epochs);
  if (s == "tail") return AveragingScheme::tail(epochs);
  throw std::invalid_argument("unknown averaging scheme '" + s + "'");
}

}  // namespace

PermutationPolicy make_policy(const PolicySpec& spec, int n, std::uint64_t seed) {
  PolicyOptions options;
  options.fixed_order = spec.fixed_order;
  options.initial_order = spec.initial_order;
  options.herd_variant = herd_variant_from_string(spec.herd);
  return PermutationPolicy(policy_kind_from_string(spec.kind), n, seed, options);
}

double resolve_stepsize(const StepsizeSpec& spec, const FiniteSumObjective& obj, const Vec& x0,
                        int n, int K) {
  const ObjectiveConstants& c = obj.constants;
  if (spec.kind == "fixed") {
    require(spec.value > 0.0, "stepsize: fixed step size must be positive");
    return spec.value;
  }
  double D = spec.D;
  if (D <= 0.0) {
    require(c.mu > 0.0, "stepsize: cannot derive default D with mu = 0");
    D = c.nu / c.mu;
  }
  if (spec.kind == "strcvx_log") {
    return stepsize_mishchenko_strcvx(c.L, c.mu, c.nu, D, n, K);
  }
  if (spec.kind == "tail_average_log") {
    return stepsize_tail_average(c.L, c.mu, c.nu, D, n, K);
  }
  if (spec.kind == "grab_lambert") {
    const double F0 = spec.F0_gap >= 0.0 ? spec.F0_gap : obj.gap(x0);
    return stepsize_grab(F0, c.L, c.mu, c.nu, spec.H, n, K);
  }
  throw std::invalid_argument("unknown stepsize kind '" + spec.kind + "'");
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  SweepSpec spec;
  require(j.contains("objective"), "sweep spec: missing 'objective'");
  spec.objective = j.at("objective").get<std::string>();
  spec.objective_params = j.value("objective_params", nlohmann::json::object());
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    spec.policy.kind = p.value("kind", std::string("rr"));
    spec.policy.herd = p.value("herd", std::string("greedy"));
    if (p.contains("fixed_order")) {
      spec.policy.fixed_order = p.at("fixed_order").get<std::vector<int>>();
    }
    if (p.contains("initial_order")) {
      spec.policy.initial_order = p.at("initial_order").get<std::vector<int>>();
    }
  }
  spec.axis = j.value("axis", std::string("K"));
  require(j.contains("axis_values"), "sweep spec: missing 'axis_values'");
  spec.axis_values = j.at("axis_values").get<std::vector<double>>();
  spec.K = j.value("K", 1);
  spec.n = j.value("n", 2);
  if (j.contains("stepsize")) {
    const auto& s = j.at("stepsize");
    spec.stepsize.kind = s.value("kind", std::string("fixed"));
    spec.stepsize.value = s.value("value", 0.0);
    spec.stepsize.D = s.value("D", 0.0);
    spec.stepsize.H = s.value("H", 1.0);
    spec.stepsize.F0_gap = s.value("F0_gap", -1.0);
  }
  spec.averaging = j.value("averaging", std::string("final"));
  spec.seeds = j.value("seeds", 1);
  spec.master_seed = j.value("master_seed", static_cast<std::uint64_t>(1));
  if (j.contains("x0")) spec.x0 = j.at("x0").get<Vec>();
  return spec;
}

nlohmann::json sweep_spec_to_json(const SweepSpec& spec) {
  nlohmann::json j;
  j["objective"] = spec.objective;
  j["objective_params"] = spec.objective_params;
  j["policy"] = {{"kind", spec.policy.kind}, {"herd", spec.policy.herd}};
  if (!spec.policy.fixed_order.empty()) j["policy"]["fixed_order"] = spec.policy.fixed_order;
  if (!spec.policy.initial_order.empty()) {
    j["policy"]["initial_order"] = spec.policy.initial_order;
  }
  j["axis"] = spec.axis;
  j["axis_values"] = spec.axis_values;
  j["K"] = spec.K;
  j["n"] = spec.n;
  j["stepsize"] = {{"kind", spec.stepsize.kind},
                   {"value", spec.stepsize.value},
                   {"D", spec.stepsize.D},
                   {"H", spec.stepsize.H},
                   {"F0_gap", spec.stepsize.F0_gap}};
  j["averaging"] = spec.averaging;
  j["seeds"] = spec.seeds;
  j["master_seed"] = spec.master_seed;
  if (!spec.x0.empty()) j["x0"] = spec.x0;
  return j;
}

SweepResult run_sweep(const SweepSpec& spec) {
  require(spec.axis == "K" || spec.axis == "n" || spec.axis == "eta",
          "sweep: axis must be 'K', 'n', or 'eta'");
  require(!spec.axis_values.empty(), "sweep: axis_values must be nonempty");
  for (std::size_t i = 0; i + 1 < spec.axis_values.size(); ++i) {
    require(spec.axis_values[i] < spec.axis_values[i + 1],
            "sweep: axis_values must be strictly increasing");
  }
  require(spec.seeds >= 1, "sweep: seeds must be >= 1");
  if (spec.axis != "eta") {
    require(spec.stepsize.kind != "fixed" || spec.stepsize.value > 0.0,
            "sweep: fixed stepsize requires a positive value");
  }

  SweepResult result;
  result.spec = spec;
  for (double axis_value : spec.axis_values) {
    int K = spec.K;
    int n = spec.n;
    double eta = 0.0;
    if (spec.axis == "K" || spec.axis == "n") {
      require(axis_value > 0.0 && axis_value == std::floor(axis_value),
              "sweep: K/n axis values must be positive integers");
      (spec.axis == "K" ? K : n) = static_cast<int>(axis_value);
    } else {
      require(axis_value > 0.0, "sweep: eta axis values must be positive");
      eta = axis_value;
    }
    require(K >= 1, "sweep: K must be >= 1");
    require(n >= 1, "sweep: n must be >= 1");

    const FiniteSumObjective obj = objective_from_key(spec.objective, spec.objective_params, n, K);
    Vec x0 = spec.x0;
    if (x0.empty()) {
      require(!obj.x0_suggested.empty(),
              "sweep: x0 not given and the objective has no suggested initial point");
      x0 = obj.x0_suggested;
    }
    require(static_cast<int>(x0.size()) == obj.dim, "sweep: x0 dimension mismatch");
    if (spec.axis != "eta") eta = resolve_stepsize(spec.stepsize, obj, x0, n, K);
    const AveragingScheme scheme = averaging_from_string(spec.averaging, K);

    SweepRow row;
    row.axis_value = axis_value;
    row.eta = eta;
    row.seeds = spec.seeds;
    std::vector<double> gaps;
    gaps.reserve(static_cast<std::size_t>(spec.seeds));
    for (int s = 0; s < spec.seeds; ++s) {
      const std::uint64_t seed = derive_run_seed(spec.master_seed, axis_value,
                                                 static_cast<std::uint64_t>(s));
      PermutationPolicy policy = make_policy(spec.policy, n, seed);
      RunConfig config{eta, K, x0, false};
      if (policy.needs_plan()) plan_exhaustive(policy, obj, config, scheme);
      const EpochTrace trace = run_epochs(obj, policy, config);

      double gap = kInf;
      bool diverged = trace.diverged;
      if (!diverged) {
        const double g = obj.gap(weighted_average(trace, scheme));
        if (std::isfinite(g)) {
          gap = g;
        } else {
          diverged = true;
        }
      }
      if (diverged) ++row.diverged;
      gaps.push_back(gap);
      result.raw.push_back(RawRow{axis_value, s, seed, gap, diverged});
    }

    if (row.diverged > 0) {
      row.mean_gap = kInf;
      row.stderr_gap = kInf;
    } else {
      const MeanStderr ms = mean_stderr(gaps);
      row.mean_gap = ms.mean;
      row.stderr_gap = ms.stderr_;
    }
    row.median_gap = median_of(gaps);
    result.rows.push_back(row);
  }
  return result;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> usable;
  for (const auto& [x, y] : points) {
    if (std::isfinite(x) && std::isfinite(y) && x > 0.0 && y > 0.0) {
      usable.emplace_back(std::log(x), std::log(y));
    }
  }

  auto ols = [](const std::vector<std::pair<double, double>>& pts) {
    RateFit fit;
    const double m = static_cast<double>(pts.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : pts) {
      sxx += (x - mx) * (x - mx);
      sxy += (x - mx) * (y - my);
      syy += (y - my) * (y - my);
    }
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double ssr = 0.0;
    for (const auto& [x, y] : pts) {
      const double r = y - (fit.intercept + fit.exponent * x);
      ssr += r * r;
    }
    fit.r_squared = syy > 1e-30 ? 1.0 - ssr / syy : 1.0;
    fit.stderr_exponent =
        pts.size() > 2 ? std::sqrt(ssr / (m - 2.0) / sxx) : 0.0;
    fit.points_used = static_cast<int>(pts.size());
    return fit;
  };

  if (usable.size() < 4) {
    throw std::invalid_argument("fit_rate: need at least 4 finite positive points");
  }
  RateFit fit = ols(usable);
  if (fit.r_squared < 0.98 && usable.size() >= 5) {
    // The smallest axis value is the one most affected by transients; drop it
    // once and refit.
    const double before = fit.r_squared;
    std::vector<std::pair<double, double>> trimmed(usable.begin() + 1, usable.end());
    fit = ols(trimmed);
    fit.excluded_smallest = true;
    fit.r_squared_before = before;
  }
  return fit;
}

CompareReport compare_policies(const SweepSpec& a, const SweepSpec& b) {
  require(a.objective == b.objective && a.objective_params == b.objective_params,
          "compare_policies: objectives must match");
  require(a.axis == b.axis && a.axis_values == b.axis_values,
          "compare_policies: sweep axes must match");
  require(a.seeds == b.seeds && a.master_seed == b.master_seed,
          "compare_policies: seeds and master_seed must match so draws pair up");
  require(a.K == b.K && a.n == b.n && a.averaging == b.averaging && a.x0 == b.x0,
          "compare_policies: run shape must match");

  CompareReport report;
  report.a = run_sweep(a);
  report.b = run_sweep(b);

  std::vector<std::pair<double, double>> pts_a, pts_b;
  for (std::size_t i = 0; i < report.a.rows.size(); ++i) {
    const SweepRow& ra = report.a.rows[i];
    const SweepRow& rb = report.b.rows[i];
    pts_a.emplace_back(ra.axis_value, ra.mean_gap);
    pts_b.emplace_back(rb.axis_value, rb.mean_gap);
    report.mean_ratio.push_back(rb.mean_gap / ra.mean_gap);
  }
  report.fit_a = fit_rate(pts_a);
  report.fit_b = fit_rate(pts_b);

  long long wins = 0;
  for (std::size_t i = 0; i < report.a.raw.size(); ++i) {
    if (report.b.raw[i].gap <= report.a.raw[i].gap) ++wins;
  }
  report.b_no_worse_fraction =
      report.a.raw.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(report.a.raw.size());
  return report;
}

// ---------------------------------------------------------------------------
// Specialized mean-curve kernel
// ---------------------------------------------------------------------------

namespace {

// One step of the piecewise family; this exact expression shape is shared by
// the kernel and the trajectory helper so both match run_epochs bit for bit.
inline double piecewise_step(double y, double L, double mu0, double eta, double s_nu) {
  const double c = y < 0.0 ? L : mu0;
  const double g = c * y + s_nu;
  return y + (-eta) * g;
}

}  // namespace

Vec piecewise_trajectory(double L, double mu0, double nu, double eta, double y0,
                         const std::vector<std::vector<int>>& patterns) {
  Vec out;
  out.reserve(patterns.size() + 1);
  double y = y0;
  out.push_back(y);
  for (const auto& pattern : patterns) {
    for (int s : pattern) {
      y = piecewise_step(y, L, mu0, eta, s > 0 ? nu : -nu);
    }
    out.push_back(y);
  }
  return out;
}

MeanCurve rr_mean_curve_piecewise(double L, double mu0, double nu, int n, double eta,
                                  int K, int seeds, std::uint64_t master_seed, double y0) {
  require(L > 0.0 && mu0 > 0.0, "rr_mean_curve_piecewise: L and mu0 must be positive");
  require(n >= 2 && n % 2 == 0, "rr_mean_curve_piecewise: n must be even and >= 2");
  require(n <= 24, "rr_mean_curve_piecewise: n is guarded to <= 24");
  require(eta > 0.0 && K >= 1 && seeds >= 1, "rr_mean_curve_piecewise: bad run shape");

  // All balanced n-bit masks; bit i set means position i takes +nu.
  std::vector<std::uint32_t> patterns;
  {
    std::vector<int> cur;
    auto rec = [&](auto&& self, std::uint32_t mask, int pos, int plus_left) -> void {
      if (pos == n) {
        if (plus_left == 0) patterns.push_back(mask);
        return;
      }
      if (plus_left > 0) self(self, mask | (1u << pos), pos + 1, plus_left - 1);
      if (n - pos > plus_left) self(self, mask, pos + 1, plus_left);
    };
    rec(rec, 0u, 0, n / 2);
  }
  const std::uint64_t npat = patterns.size();

  // One RNG stream per seed, derived the same way run_sweep derives run seeds
  // (axis value = eta).
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(seeds));
  for (int s = 0; s < seeds; ++s) {
    rngs.emplace_back(derive_run_seed(master_seed, eta, static_cast<std::uint64_t>(s)));
  }
  std::vector<double> y(static_cast<std::size_t>(seeds), y0);

  MeanCurve curve;
  curve.mean.assign(static_cast<std::size_t>(K) + 1, y0);
  curve.stderr_.assign(static_cast<std::size_t>(K) + 1, 0.0);

  const double inv_seeds = 1.0 / static_cast<double>(seeds);
  for (int k = 1; k <= K; ++k) {
    for (int s = 0; s < seeds; ++s) {
      const std::uint32_t mask = patterns[rngs[static_cast<std::size_t>(s)].next_below(npat)];
      double ys = y[static_cast<std::size_t>(s)];
      for (int i = 0; i < n; ++i) {
        ys = piecewise_step(ys, L, mu0, eta, (mask >> i) & 1u ? nu : -nu);
      }
      y[static_cast<std::size_t>(s)] = ys;
    }
    // Mean and standard error with a shift to avoid cancellation.
    const double shift = y[0];
    double sum_d = 0.0, sum_d2 = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const double d = y[static_cast<std::size_t>(s)] - shift;
      sum_d += d;
      sum_d2 += d * d;
    }
    const double mean = shift + sum_d * inv_seeds;
    curve.mean[static_cast<std::size_t>(k)] = mean;
    if (seeds > 1) {
      const double var =
          std::max(0.0, (sum_d2 - sum_d * sum_d * inv_seeds) / static_cast<double>(seeds - 1));
      curve.stderr_[static_cast<std::size_t>(k)] = std::sqrt(var * inv_seeds);
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

void write_summary_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "axis,axis_value,eta,mean_gap,stderr_gap,median_gap,diverged,seeds\n";
  for (const SweepRow& row : result.rows) {
    out << result.spec.axis << ',' << format_double(row.axis_value) << ','
        << format_double(row.eta) << ',' << format_double(row.mean_gap) << ','
        << format_double(row.stderr_gap) << ',' << format_double(row.median_gap) << ','
        << row.diverged << ',' << row.seeds << '\n';
  }
}

void write_raw_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "axis_value,seed_index,seed,gap,diverged\n";
  for (const RawRow& row : result.raw) {
    out << format_double(row.axis_value) << ',' << row.seed_index << ',' << row.seed << ','
        << format_double(row.gap) << ',' << (row.diverged ? 1 : 0) << '\n';
  }
}

std::vector<std::pair<double, double>> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::pair<double, double>> points;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (first) {
      first = false;
      // Header row: locate by name; require the expected columns.
      if (line.find("axis_value") != std::string::npos) continue;
    }
    if (fields.size() < 4) {
      throw std::runtime_error("summary CSV: expected at least 4 columns per row");
    }
    points.emplace_back(std::stod(fields[1]), std::stod(fields[3]));
  }
  return points;
}

nlohmann::json rate_fit_to_json(const RateFit& fit) {
  return {{"exponent", fit.exponent},
          {"intercept", fit.intercept},
          {"r_squared", fit.r_squared},
          {"stderr_exponent", fit.stderr_exponent},
          {"points_used", fit.points_used},
          {"excluded_smallest", fit.excluded_smallest},
          {"r_squared_before", fit.r_squared_before}};
}

nlohmann::json sweep_result_to_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& row : result.rows) {
    rows.push_back({{"axis_value", row.axis_value},
                    {"eta", row.eta},
                    {"mean_gap", row.mean_gap},
                    {"stderr_gap", row.stderr_gap},
                    {"median_gap", row.median_gap},
                    {"diverged", row.diverged},
                    {"seeds", row.seeds}});
  }
  return {{"spec", sweep_spec_to_json(result.spec)}, {"rows", rows}};
}

nlohmann::json compare_report_to_json(const CompareReport& report) {
  return {{"a", sweep_result_to_json(report.a)},
          {"b", sweep_result_to_json(report.b)},
          {"fit_a", rate_fit_to_json(report.fit_a)},
          {"fit_b", rate_fit_to_json(report.fit_b)},
          {"mean_ratio", report.mean_ratio},
          {"b_no_worse_fraction", report.b_no_worse_fraction}};
}

}  // namespace permsgd
