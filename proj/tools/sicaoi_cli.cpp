// Command-line front end: policy building, analytic and simulated
// evaluation, sweeps, comparison and the acceptance suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sicaoi/sicaoi.hpp"

namespace fs = std::filesystem;
using namespace sicaoi;

namespace {

struct Common {
  std::string config_path;
  std::string policy_path;
  std::string cache_dir = ".sicaoi-cache";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool with_policy = true) {
  app->add_option("-c,--config", c.config_path, "config file (key = value); defaults when omitted");
  if (with_policy) {
    app->add_option("-p,--policy", c.policy_path, "policy artifact to load instead of building one");
    app->add_option("--cache", c.cache_dir, "directory for cached policy artifacts");
  }
  app->add_option("--seed", c.seed, "override the config seed");
}

SystemConfig load(const Common& c) {
  SystemConfig cfg = c.config_path.empty() ? SystemConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Explicit file, else the cache entry for this config, else build and cache.
PolicyArtifact obtain_policy(const SystemConfig& cfg, const Common& c) {
  if (!c.policy_path.empty()) {
    auto art = load_artifact(c.policy_path);
    check_artifact(art, cfg);
    return art;
  }
  const fs::path cached = fs::path(c.cache_dir) / ("policy-" + hex(policy_config_hash(cfg)) + ".txt");
  if (fs::exists(cached)) {
    auto art = load_artifact(cached.string());
    check_artifact(art, cfg);
    return art;
  }
  std::fprintf(stderr, "building policy (%lld trials per cell)...\n", static_cast<long long>(cfg.mc_trials));
  auto art = build_policy_artifact(cfg);
  std::error_code ec;
  fs::create_directories(cached.parent_path(), ec);
  if (!ec) save_artifact(cached.string(), art);
  return art;
}

std::vector<double> parse_grid(const std::string& spec) {
  // "lo:hi:count" (log-spaced, seconds) or a comma list of seconds.
  if (auto a = spec.find(':'); a != std::string::npos) {
    const auto b = spec.find(':', a + 1);
    if (b == std::string::npos) throw CLI::ValidationError("--S-grid", "expected lo:hi:count");
    return numeric::logspace(std::stod(spec.substr(0, a)), std::stod(spec.substr(a + 1, b - a - 1)),
                             std::stoul(spec.substr(b + 1)));
  }
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

void print_report(const MetricsReport& r) {
  std::printf("S            %.6g ms\n", r.S * 1e3);
  std::printf("b            %.6g\n", r.b);
  std::printf("P_s          %.6f\n", r.P_s);
  std::printf("theta        %.6g msg/s  (norm %.6f, %.6g kbit/s)\n", r.theta, r.theta_norm, r.theta_bps * 1e-3);
  std::printf("CBR          %.6f\n", r.cbr);
  std::printf("E[D]         %.6g ms\n", r.E_D * 1e3);
  std::printf("E[H]         %.6g ms\n", r.E_H * 1e3);
  std::printf("zeta         %.6g 1/s\n", r.zeta);
  std::printf("Ebar         %.6g mJ\n", r.E_bar * 1e3);
  std::printf("E[Q], Std[Q] %.6g, %.6g\n", r.E_Q, r.Std_Q);
  std::printf("U_inf        %.6g bit/s/Hz (S_inf %.6g ms)\n", r.U_inf, r.S_inf * 1e3);
  std::printf("coverage R   %.6g m\n", r.coverage_R);
}

void print_estimate(const char* name, const MetricEstimate& e, double scale, const char* unit) {
  std::printf("%-12s %.6g +- %.3g %s\n", name, e.mean * scale, e.ci * scale, unit);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIC random access: policy optimization, analytic model, simulation"};
  app.require_subcommand(1);

  // policy build|show
  auto* policy = app.add_subcommand("policy", "build or inspect access policy artifacts");
  policy->require_subcommand(1);
  Common pb;
  std::string pb_out = "policy.txt";
  auto* policy_build = policy->add_subcommand("build", "estimate m_h, optimize, fit and write an artifact");
  add_common(policy_build, pb, false);
  policy_build->add_option("-o,--out", pb_out, "artifact path");
  std::string ps_path;
  auto* policy_show = policy->add_subcommand("show", "print an artifact's constants and table");
  policy_show->add_option("artifact", ps_path, "artifact path")->required();

  // config dump
  auto* config = app.add_subcommand("config", "print the resolved configuration");
  Common cd;
  add_common(config, cd, false);

  // analytic run
  auto* analytic = app.add_subcommand("analytic", "mean-field model");
  analytic->require_subcommand(1);
  auto* analytic_run = analytic->add_subcommand("run", "evaluate the model at one or more S values");
  Common ar;
  std::string ar_S;
  add_common(analytic_run, ar);
  analytic_run->add_option("--S", ar_S, "mean generation time(s) in seconds, comma list; config value by default");

  // simulate run
  auto* simulate = app.add_subcommand("simulate", "slot-level simulation");
  simulate->require_subcommand(1);
  auto* simulate_run = simulate->add_subcommand("run", "simulate one S value");
  Common sr;
  std::optional<double> sr_S;
  std::size_t sr_reps = 10;
  std::int64_t sr_horizon = 100000;
  std::vector<double> sr_freeze;
  add_common(simulate_run, sr);
  simulate_run->add_option("--S", sr_S, "mean generation time in seconds");
  simulate_run->add_option("-r,--replications", sr_reps, "independent replications")->check(CLI::Range(2, 100000));
  simulate_run->add_option("--horizon", sr_horizon, "slots per replication");
  simulate_run->add_option("--freeze", sr_freeze, "p gamma: use a k-independent policy")->expected(2);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "sweep S, write sweep.csv and summary.json");
  Common sw;
  std::string sw_out = "out", sw_grid, sw_mode = "both";
  SweepSpec sw_spec;
  add_common(sweep, sw);
  sweep->add_option("-o,--out", sw_out, "output directory");
  sweep->add_option("--S-grid", sw_grid, "lo:hi:count (log-spaced) or comma list, seconds");
  sweep->add_option("--mode", sw_mode, "analytic | simulate | both")
      ->check(CLI::IsMember({"analytic", "simulate", "both"}));
  sweep->add_option("-r,--replications", sw_spec.replications, "replications per point");
  sweep->add_option("--horizon", sw_spec.horizon_slots, "slots per replication");

  // compare
  auto* compare = app.add_subcommand("compare", "analytic vs simulated agreement from a sweep CSV");
  std::string cmp_csv;
  double cmp_tol = 0.05, cmp_need = 0.90;
  compare->add_option("csv", cmp_csv, "sweep.csv with both modes")->required();
  compare->add_option("--rel-tol", cmp_tol, "relative tolerance accepted outside the CI");
  compare->add_option("--need", cmp_need, "fraction of agreeing cells required for exit status 0");

  // accept
  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  Common ac;
  AcceptanceOptions ac_opt;
  add_common(accept, ac);
  accept->add_option("-r,--replications", ac_opt.replications, "replications per simulated point");
  accept->add_option("--horizon", ac_opt.horizon_slots, "slots per replication");
  accept->add_option("--points", ac_opt.sweep_points, "sweep points over [1 ms, 1 s]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (policy_build->parsed()) {
      const auto cfg = load(pb);
      const auto art = build_policy_artifact(cfg);
      save_artifact(pb_out, art);
      std::printf("wrote %s (hash %s)\n", pb_out.c_str(), hex(art.config_hash).c_str());
      std::printf("fitted: k_c=%lld a_gamma=%.4f b_gamma=%.4f a_D=%.4f\n", static_cast<long long>(art.fit.k_c),
                  art.fit.a_gamma, art.fit.b_gamma, art.fit.a_D);
      std::printf("in use: k_c=%lld a_gamma=%.4f b_gamma=%.4f a_D=%.4f\n", static_cast<long long>(art.policy.k_c),
                  art.policy.a_gamma, art.policy.b_gamma, art.policy.a_D);
      return 0;
    }
    if (policy_show->parsed()) {
      const auto art = load_artifact(ps_path);
      std::printf("hash %s, kind %s, profile %zu x %zu (%lld trials)\n", hex(art.config_hash).c_str(),
                  to_string(art.policy.kind), art.profile.max_h(), art.profile.gamma_grid().size(),
                  static_cast<long long>(art.profile.trials()));
      std::printf("fitted: k_c=%lld a_gamma=%.4f b_gamma=%.4f a_D=%.4f\n", static_cast<long long>(art.fit.k_c),
                  art.fit.a_gamma, art.fit.b_gamma, art.fit.a_D);
      std::printf("%4s %10s %10s %10s | %10s %10s %8s\n", "k", "p", "gamma", "T_ms", "p*", "gamma*", "U*");
      for (std::size_t k = 1; k < art.policy.p.size(); ++k) {
        const auto& raw = art.raw.at(k - 1);
        std::printf("%4zu %10.4f %10.4f %10.4f | %10.4f %10.4f %8.4f\n", k, art.policy.p[k], art.policy.gamma[k],
                    art.policy.T[k] * 1e3, raw.p, raw.gamma, raw.U);
      }
      return 0;
    }
    if (config->parsed()) {
      std::cout << dump_config_string(load(cd));
      return 0;
    }
    if (analytic_run->parsed()) {
      const auto cfg = load(ar);
      const auto art = obtain_policy(cfg, ar);
      const auto grid = ar_S.empty() ? std::vector<double>{cfg.S_s} : parse_grid(ar_S);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i) std::printf("\n");
        print_report(evaluate_analytic(cfg, art.policy, art.profile, 1.0 / grid[i]));
      }
      return 0;
    }
    if (simulate_run->parsed()) {
      auto cfg = load(sr);
      if (sr_S) cfg.S_s = *sr_S;
      cfg.validate();
      AccessPolicy pol;
      if (sr_freeze.size() == 2) {
        pol = constant_policy(cfg, sr_freeze[0], sr_freeze[1]);
      } else {
        pol = obtain_policy(cfg, sr).policy;
      }
      SimOptions opt;
      opt.horizon_slots = sr_horizon;
      const auto reps = run_replications(cfg, pol, cfg.seed, sr_reps, opt);
      const auto s = estimate_metrics(reps);
      std::printf("S %.6g ms, %zu replications x %lld slots (95%% CI)\n", cfg.S_s * 1e3, sr_reps,
                  static_cast<long long>(sr_horizon));
      print_estimate("PDR", s.pdr, 1.0, "");
      print_estimate("theta", s.theta, 1.0, "msg/s");
      print_estimate("theta_norm", s.theta_norm, 1.0, "");
      print_estimate("CBR", s.cbr, 1.0, "");
      print_estimate("E[D]", s.E_D, 1e3, "ms");
      print_estimate("E[H]", s.E_H, 1e3, "ms");
      print_estimate("Ebar", s.E_bar, 1e3, "mJ");
      print_estimate("E[Q]", s.E_Q, 1.0, "");
      print_estimate("Std[Q]", s.Std_Q, 1.0, "");
      print_estimate("lag-1 tx", s.tx_lag1, 1.0, "");
      return 0;
    }
    if (sweep->parsed()) {
      const auto cfg = load(sw);
      const auto art = obtain_policy(cfg, sw);
      if (!sw_grid.empty()) sw_spec.S_grid = parse_grid(sw_grid);
      sw_spec.mode = sw_mode == "analytic" ? SweepMode::analytic : sw_mode == "simulate" ? SweepMode::simulate : SweepMode::both;
      sw_spec.seed = cfg.seed;
      const auto res = run_sweep(cfg, art.policy, art.profile, sw_spec);
      write_sweep_outputs(sw_out, res, art.policy);
      std::printf("wrote %s/sweep.csv and %s/summary.json\n", sw_out.c_str(), sw_out.c_str());
      return 0;
    }
    if (compare->parsed()) {
      std::ifstream in(cmp_csv);
      if (!in) throw std::runtime_error("cannot open " + cmp_csv);
      const auto [a, s] = split_rows(read_sweep_csv(in));
      const auto cmp = compare_report(a, s, cmp_tol);
      std::printf("%10s %-11s %12s %12s %10s %9s %s\n", "S_ms", "metric", "analytic", "simulated", "ci", "rel_err", "ok");
      for (const auto& c : cmp.cells)
        std::printf("%10.4g %-11s %12.6g %12.6g %10.3g %8.2f%% %s\n", c.S_ms, c.metric.c_str(), c.analytic,
                    c.simulated, c.ci, 100.0 * c.rel_error, c.agrees ? (c.in_ci ? "ci" : "tol") : "NO");
      std::printf("agreeing %zu/%zu (%.1f%%), inside CI %.1f%%\n", cmp.agreeing, cmp.cells.size(),
                  100.0 * cmp.fraction(), 100.0 * cmp.fraction_in_ci());
      return cmp.fraction() >= cmp_need ? 0 : 1;
    }
    if (accept->parsed()) {
      const auto cfg = load(ac);
      const auto art = obtain_policy(cfg, ac);
      ac_opt.seed = cfg.seed;
      ac_opt.progress = [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); };
      bool all = true;
      for (const auto& r : run_acceptance(cfg, art, ac_opt)) {
        std::printf("%s\n", format_criterion(r).c_str());
        all = all && r.passed;
      }
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
