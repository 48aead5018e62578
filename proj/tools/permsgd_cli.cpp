// permsgd command-line interface.
//
// Subcommands:
//   run             single seeded run; trace CSV + JSON summary
//   sweep           Monte Carlo sweep over K, n, or eta from a JSON spec
//   fit-rate        log-log rate fit of a sweep summary CSV
//   verify-lemmas   grid verification of the auxiliary inequalities
//   verify-herding  herding on a random zero-sum batch; prefix-norm profile
//   compare         paired-seed comparison of two sweep specs
//
// Every subcommand exits 0 iff it ran successfully and all checks it
// performed passed.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "permsgd/harness.hpp"
#include "permsgd/herding.hpp"
#include "permsgd/oracle.hpp"

namespace {

using nlohmann::json;
using namespace permsgd;

Vec parse_vec(const std::string& s) {
  Vec out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) out.push_back(std::stod(field));
  }
  return out;
}

std::vector<int> parse_int_vec(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_vec(s)) out.push_back(static_cast<int>(v));
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  in >> j;
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string objective;
  std::string params_json = "{}";
  int n = 0;
  int epochs = 0;
  std::string policy = "rr";
  std::string herd = "greedy";
  std::string fixed_order;
  std::string initial_order;
  double eta = 0.0;
  std::string stepsize = "fixed";
  double D = 0.0;
  double H = 1.0;
  double F0_gap = -1.0;
  std::string x0;
  std::string averaging = "final";
  std::uint64_t seed = 1;
  std::string out_trace;
  std::string out_summary;
};

int cmd_run(const RunArgs& args) {
  const json params = json::parse(args.params_json);
  const FiniteSumObjective obj = objective_from_key(args.objective, params, args.n, args.epochs);

  Vec x0 = args.x0.empty() ? obj.x0_suggested : parse_vec(args.x0);
  if (x0.empty()) {
    throw std::runtime_error("run: --x0 not given and the objective has no suggested x0");
  }

  PolicySpec pspec;
  pspec.kind = args.policy;
  pspec.herd = args.herd;
  if (!args.fixed_order.empty()) pspec.fixed_order = parse_int_vec(args.fixed_order);
  if (!args.initial_order.empty()) pspec.initial_order = parse_int_vec(args.initial_order);
  PermutationPolicy policy = make_policy(pspec, obj.n, args.seed);

  StepsizeSpec sspec;
  sspec.kind = args.stepsize;
  sspec.value = args.eta;
  sspec.D = args.D;
  sspec.H = args.H;
  sspec.F0_gap = args.F0_gap;
  const double eta = resolve_stepsize(sspec, obj, x0, obj.n, args.epochs);

  RunConfig config{eta, args.epochs, x0, false};
  AveragingScheme scheme = [&] {
    if (args.averaging == "final") return AveragingScheme::final_iterate(args.epochs);
    if (args.averaging == "uniform") return AveragingScheme::uniform(args.epochs);
    if (args.averaging == "tail") return AveragingScheme::tail(args.epochs);
    throw std::runtime_error("run: unknown averaging scheme '" + args.averaging + "'");
  }();
  if (policy.needs_plan()) plan_exhaustive(policy, obj, config, scheme);

  const EpochTrace trace = run_epochs(obj, policy, config);

  if (!args.out_trace.empty()) {
    std::ofstream out(args.out_trace);
    if (!out) throw std::runtime_error("cannot open '" + args.out_trace + "' for writing");
    out << "epoch,coord,value\n";
    char buf[64];
    for (std::size_t k = 0; k < trace.end_points.size(); ++k) {
      for (std::size_t j = 0; j < trace.end_points[k].size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", trace.end_points[k][j]);
        out << k << ',' << j << ',' << buf << '\n';
      }
    }
  }

  json summary;
  summary["objective"] = args.objective;
  summary["objective_params"] = params;
  summary["n"] = obj.n;
  summary["epochs"] = args.epochs;
  summary["eta"] = eta;
  summary["policy"] = args.policy;
  summary["seed"] = args.seed;
  summary["averaging"] = args.averaging;
  summary["diverged"] = trace.diverged;
  if (trace.diverged) {
    summary["diverged_epoch"] = trace.diverged_epoch;
  } else {
    const Vec avg = weighted_average(trace, scheme);
    summary["final_point"] = trace.final_point();
    summary["gap_final"] = obj.gap(trace.final_point());
    summary["gap_averaged"] = obj.gap(avg);
  }
  if (!args.out_summary.empty()) {
    save_json_file(args.out_summary, summary);
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_sweep(const std::string& spec_path, const std::string& out_summary,
              const std::string& out_raw, const std::string& out_json,
              const std::string& out_fit) {
  const SweepSpec spec = sweep_spec_from_json(load_json_file(spec_path));
  const SweepResult result = run_sweep(spec);
  if (!out_summary.empty()) write_summary_csv(out_summary, result);
  if (!out_raw.empty()) write_raw_csv(out_raw, result);
  if (!out_json.empty()) save_json_file(out_json, sweep_result_to_json(result));
  for (const SweepRow& row : result.rows) {
    std::printf("%s=%-12g eta=%-12g mean_gap=%-14g stderr=%-12g median=%-14g diverged=%d/%d\n",
                spec.axis.c_str(), row.axis_value, row.eta, row.mean_gap, row.stderr_gap,
                row.median_gap, row.diverged, row.seeds);
  }
  if (!out_fit.empty()) {
    std::vector<std::pair<double, double>> pts;
    for (const SweepRow& row : result.rows) pts.emplace_back(row.axis_value, row.mean_gap);
    const RateFit fit = fit_rate(pts);
    save_json_file(out_fit, rate_fit_to_json(fit));
    std::printf("fit: exponent=%.4f r2=%.4f\n", fit.exponent, fit.r_squared);
  }
  return 0;
}

int cmd_fit_rate(const std::string& in_csv, const std::string& out_json) {
  const auto points = read_summary_csv(in_csv);
  const RateFit fit = fit_rate(points);
  const json j = rate_fit_to_json(fit);
  if (!out_json.empty()) save_json_file(out_json, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_verify_lemmas(const std::string& out_json) {
  const std::vector<LemmaReport> reports = verify_lemmas();
  json arr = json::array();
  bool all_pass = true;
  for (const LemmaReport& rep : reports) {
    arr.push_back({{"lemma_id", rep.lemma_id},
                   {"grid", rep.grid},
                   {"points", rep.points},
                   {"worst_margin", rep.worst_margin},
                   {"pass", rep.pass}});
    all_pass = all_pass && rep.pass;
    std::printf("%-32s points=%-8lld worst_margin=%-14.6g %s\n", rep.lemma_id.c_str(),
                rep.points, rep.worst_margin, rep.pass ? "PASS" : "FAIL");
  }
  if (!out_json.empty()) save_json_file(out_json, arr);
  return all_pass ? 0 : 1;
}

int cmd_verify_herding(int n, int d, std::uint64_t seed, const std::string& variant,
                       const std::string& out_profile) {
  // Random centered batch, normalized to max norm 1.
  Rng rng(seed);
  VectorBatch batch;
  batch.vectors.assign(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d), 0.0));
  for (Vec& z : batch.vectors) {
    for (double& v : z) v = rng.next_normal();
  }
  for (int pass = 0; pass < 2; ++pass) {
    Vec mean(static_cast<std::size_t>(d), 0.0);
    for (const Vec& z : batch.vectors) axpy(1.0, z, mean);
    scale(1.0 / static_cast<double>(n), mean);
    for (Vec& z : batch.vectors) axpy(-1.0, mean, z);
  }
  double max_norm = 0.0;
  for (const Vec& z : batch.vectors) max_norm = std::max(max_norm, norm2(z));
  for (Vec& z : batch.vectors) scale(1.0 / max_norm, z);

  const HerdingResult herd = variant == "signwalk" ? herd_signwalk(batch, seed ^ 0x5eedULL)
                                                   : herd_greedy(batch);
  const std::vector<double> profile = prefix_norm_profile(batch, herd.order);

  // Consistency checks: achieved_H must equal the profile maximum, and the
  // random-order baseline gives context.
  double recomputed = 0.0;
  for (double v : profile) recomputed = std::max(recomputed, v);
  const bool consistent = std::abs(recomputed - herd.achieved_H) <= 1e-12;

  std::vector<int> random_order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) random_order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(random_order);
  double random_H = 0.0;
  for (double v : prefix_norm_profile(batch, random_order)) random_H = std::max(random_H, v);

  if (!out_profile.empty()) {
    std::ofstream out(out_profile);
    if (!out) throw std::runtime_error("cannot open '" + out_profile + "' for writing");
    out << "k,prefix_norm\n";
    char buf[64];
    for (std::size_t k = 0; k < profile.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", profile[k]);
      out << (k + 1) << ',' << buf << '\n';
    }
  }
  std::printf("herding %s: n=%d d=%d achieved_H=%.6g random_order_H=%.6g ratio=%.3g %s\n",
              variant.c_str(), n, d, herd.achieved_H, random_H, random_H / herd.achieved_H,
              consistent ? "PASS" : "FAIL");
  return consistent ? 0 : 1;
}

int cmd_compare(const std::string& spec_a, const std::string& spec_b,
                const std::string& out_json) {
  const SweepSpec a = sweep_spec_from_json(load_json_file(spec_a));
  const SweepSpec b = sweep_spec_from_json(load_json_file(spec_b));
  const CompareReport report = compare_policies(a, b);
  if (!out_json.empty()) save_json_file(out_json, compare_report_to_json(report));
  std::printf("fit_a: exponent=%.4f r2=%.4f   fit_b: exponent=%.4f r2=%.4f\n",
              report.fit_a.exponent, report.fit_a.r_squared, report.fit_b.exponent,
              report.fit_b.r_squared);
  std::printf("b_no_worse_fraction=%.4f\n", report.b_no_worse_fraction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permsgd: permutation-based SGD policies, worst-case objectives, and oracles"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "single seeded run");
  run->add_option("--objective", run_args.objective, "objective zoo key")->required();
  run->add_option("--params", run_args.params_json, "objective parameters (JSON object)");
  run->add_option("--n", run_args.n, "number of components")->required();
  run->add_option("--epochs", run_args.epochs, "number of epochs K")->required();
  run->add_option("--policy", run_args.policy,
                  "rr|single_shuffle|incremental|grab|fixed|exhaustive_best|exhaustive_worst");
  run->add_option("--herd", run_args.herd, "grab herding variant: greedy|signwalk");
  run->add_option("--fixed-order", run_args.fixed_order, "comma-separated 0-based order");
  run->add_option("--initial-order", run_args.initial_order, "grab epoch-1 order");
  run->add_option("--eta", run_args.eta, "fixed step size");
  run->add_option("--stepsize", run_args.stepsize,
                  "fixed|strcvx_log|tail_average_log|grab_lambert");
  run->add_option("--D", run_args.D, "distance scale for log schedules (default nu/mu)");
  run->add_option("--H", run_args.H, "prefix bound for grab_lambert");
  run->add_option("--F0-gap", run_args.F0_gap, "initial gap for grab_lambert");
  run->add_option("--x0", run_args.x0, "comma-separated initial point (default: suggested)");
  run->add_option("--averaging", run_args.averaging, "final|uniform|tail");
  run->add_option("--seed", run_args.seed, "policy seed");
  run->add_option("--out-trace", run_args.out_trace, "end-of-epoch trace CSV");
  run->add_option("--out-summary", run_args.out_summary, "summary JSON");

  std::string sweep_spec, sweep_summary, sweep_raw, sweep_json, sweep_fit;
  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep from a JSON spec");
  sweep->add_option("--spec", sweep_spec, "sweep spec JSON file")->required();
  sweep->add_option("--out-summary", sweep_summary, "summary CSV");
  sweep->add_option("--out-raw", sweep_raw, "per-seed raw CSV");
  sweep->add_option("--out-json", sweep_json, "full result JSON");
  sweep->add_option("--out-fit", sweep_fit, "rate-fit JSON of the sweep means");

  std::string fit_in, fit_out;
  CLI::App* fit = app.add_subcommand("fit-rate", "log-log rate fit of a summary CSV");
  fit->add_option("--in", fit_in, "summary CSV from 'sweep'")->required();
  fit->add_option("--out", fit_out, "fit JSON");

  std::string lemmas_out;
  CLI::App* lemmas = app.add_subcommand("verify-lemmas", "verify the inequality suite");
  lemmas->add_option("--out", lemmas_out, "report JSON");

  int herd_n = 256, herd_d = 8;
  std::uint64_t herd_seed = 1;
  std::string herd_variant = "greedy", herd_profile;
  CLI::App* herd = app.add_subcommand("verify-herding", "herding on a random zero-sum batch");
  herd->add_option("--n", herd_n, "batch size");
  herd->add_option("--d", herd_d, "vector dimension");
  herd->add_option("--seed", herd_seed, "batch/walk seed");
  herd->add_option("--variant", herd_variant, "greedy|signwalk");
  herd->add_option("--out-profile", herd_profile, "prefix-norm profile CSV");

  std::string cmp_a, cmp_b, cmp_out;
  CLI::App* cmp = app.add_subcommand("compare", "paired-seed comparison of two sweeps");
  cmp->add_option("--spec-a", cmp_a, "baseline sweep spec JSON")->required();
  cmp->add_option("--spec-b", cmp_b, "contender sweep spec JSON")->required();
  cmp->add_option("--out", cmp_out, "comparison report JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (sweep->parsed()) return cmd_sweep(sweep_spec, sweep_summary, sweep_raw, sweep_json, sweep_fit);
    if (fit->parsed()) return cmd_fit_rate(fit_in, fit_out);
    if (lemmas->parsed()) return cmd_verify_lemmas(lemmas_out);
    if (herd->parsed()) return cmd_verify_herding(herd_n, herd_d, herd_seed, herd_variant, herd_profile);
    if (cmp->parsed()) return cmd_compare(cmp_a, cmp_b, cmp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
