#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "sicaoi/artifact.hpp"
#include "sicaoi/harness.hpp"

using namespace sicaoi;
using Catch::Approx;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sicaoi-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing", "[harness]") {
  CHECK(parse_config_string("") == SystemConfig{});
  CHECK(parse_config_string("# only a comment\n\n").n == 50);
  const auto cfg = parse_config_string("n = 12\nS_s = 0.25  # seconds\n");
  CHECK(cfg.n == 12);
  CHECK(cfg.S_s == 0.25);
  CHECK(cfg.lambda() == 4.0);
  CHECK(cfg.c() == Approx(-std::log(0.9)));

  CHECK(message_of("n = 0\n").find("line 1") != std::string::npos);
  CHECK(message_of("\n\nbogus = 3\n").find("line 3") != std::string::npos);
  CHECK(message_of("\n\nbogus = 3\n").find("bogus") != std::string::npos);
  CHECK_FALSE(message_of("n = 5\nn = 6\n").empty());
  CHECK_FALSE(message_of("epsilon = 1.5\n").empty());
  CHECK_FALSE(message_of("S_s = fast\n").empty());
  CHECK_FALSE(message_of("n 5\n").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/sicaoi.conf"), ConfigError);
}

TEST_CASE("config dump round-trips", "[harness]") {
  SystemConfig cfg;
  cfg.S_s = 0.1234567890123;
  cfg.gamma_max = 17.0 / 3.0;
  cfg.seed = 99;
  const auto text = dump_config_string(cfg);
  CHECK(text.find("c = ") != std::string::npos);
  CHECK(parse_config_string(text) == cfg);
}

TEST_CASE("sweep csv round-trips", "[harness]") {
  SweepRow a;
  a.S_ms = 1.5;
  a.mode = "analytic";
  a.P_s = 0.78;
  a.zeta_per_s = std::numeric_limits<double>::infinity();
  a.EH_ms = 12.25;
  SweepRow s = a;
  s.mode = "simulate";
  s.zeta_per_s = NAN;
  s.P_s_ci = 0.01;
  std::stringstream buf;
  write_sweep_csv(buf, {a, s});
  const auto rows = read_sweep_csv(buf);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].S_ms == 1.5);
  CHECK(std::isinf(rows[0].zeta_per_s));
  CHECK(std::isnan(rows[0].P_s_ci));
  CHECK(std::isnan(rows[1].zeta_per_s));
  CHECK(rows[1].P_s_ci == 0.01);
  CHECK(rows[1].EH_ms == 12.25);

  std::stringstream bad("S_ms,mode\n1,analytic\n");
  CHECK_THROWS(read_sweep_csv(bad));
  std::stringstream ragged(std::string("# schema ") + kSweepSchema + "\nS_ms,mode,P_s\n1,analytic\n");
  CHECK_THROWS(read_sweep_csv(ragged));
}

TEST_CASE("analytic sweep is deterministic", "[harness]") {
  const SystemConfig cfg;
  SweepSpec spec;
  spec.mode = SweepMode::analytic;
  const auto one = run_sweep(cfg, fixtures::reference_policy(), fixtures::reference_profile(), spec);
  const auto two = run_sweep(cfg, fixtures::reference_policy(), fixtures::reference_profile(), spec);
  REQUIRE(one.analytic.size() == 30);
  CHECK(one.simulated.empty());
  std::ostringstream a, b;
  write_sweep_csv(a, one.analytic);
  write_sweep_csv(b, two.analytic);
  CHECK(a.str() == b.str());
  for (std::size_t i = 1; i < one.analytic.size(); ++i) CHECK(one.analytic[i].cbr <= one.analytic[i - 1].cbr + 1e-12);
  CHECK(one.knee.S >= spec.S_grid.front());
  CHECK(one.knee.S <= spec.S_grid.back());
  for (double S : spec.S_grid) {
    const auto r = evaluate_analytic(cfg, fixtures::reference_policy(), fixtures::reference_profile(), 1.0 / S);
    CHECK(one.knee.E_H * one.knee.E_bar <= r.E_H * r.E_bar * (1.0 + 1e-9));
  }
}

TEST_CASE("comparison report", "[harness]") {
  const SystemConfig cfg;
  SweepSpec spec;
  spec.mode = SweepMode::analytic;
  spec.S_grid = {0.002, 0.02, 0.2};
  const auto res = run_sweep(cfg, fixtures::reference_policy(), fixtures::reference_profile(), spec);
  auto sim = res.analytic;
  for (auto& r : sim) r.mode = "simulate";
  const auto same = compare_report(res.analytic, sim);
  CHECK(same.cells.size() == 15);
  CHECK(same.fraction() == 1.0);
  CHECK(same.fraction_in_ci() == 1.0);

  sim[1].ED_ms *= 1.2;
  sim[1].ED_ms_ci = 0.0;
  sim[2].P_s *= 1.2;
  sim[2].P_s_ci = 0.5;
  const auto off = compare_report(res.analytic, sim);
  CHECK(off.agreeing == 14);
  CHECK(off.fraction_in_ci() == Approx(14.0 / 15.0));

  auto shifted = sim;
  shifted[0].S_ms *= 2.0;
  CHECK_THROWS(compare_report(res.analytic, shifted));
  shifted.pop_back();
  CHECK_THROWS(compare_report(res.analytic, shifted));
  CHECK_THROWS(split_rows({SweepRow{}}));
}

TEST_CASE("policy artifact round-trips", "[harness]") {
  const auto cfg = fixtures::small_config();
  const auto art = build_policy_artifact(cfg);
  CHECK(art.policy.n() == 8);
  CHECK(art.raw.size() == 8);
  std::stringstream buf;
  write_artifact(buf, art);
  const auto back = read_artifact(buf);
  CHECK(back.config_hash == art.config_hash);
  CHECK(back.policy == art.policy);
  CHECK(back.profile == art.profile);
  CHECK(back.fit.k_c == art.fit.k_c);
  CHECK(back.fit.a_gamma == art.fit.a_gamma);
  CHECK_NOTHROW(check_artifact(back, cfg));

  auto other = cfg;
  other.gamma_max = 20.0;
  CHECK_THROWS_AS(check_artifact(back, other), ArtifactError);
  other = cfg;
  other.S_s = 0.5;  // load is not part of the policy stage
  CHECK_NOTHROW(check_artifact(back, other));

  std::string text = buf.str();
  std::stringstream broken(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_artifact(broken), ArtifactError);
}

TEST_CASE("small end-to-end sweep writes its outputs", "[harness]") {
  const auto cfg = fixtures::small_config();
  const auto art = build_policy_artifact(cfg);
  SweepSpec spec;
  spec.S_grid = {0.002, 0.01, 0.05};
  spec.replications = 3;
  spec.horizon_slots = 3000;
  const auto res = run_sweep(cfg, art.policy, art.profile, spec);
  REQUIRE(res.analytic.size() == 3);
  REQUIRE(res.simulated.size() == 3);
  for (const auto& r : res.simulated) {
    CHECK(r.P_s_ci >= 0.0);
    CHECK(r.cbr <= 1.0);
  }
  const auto dir = scratch_dir("sweep");
  write_sweep_outputs(dir, res, art.policy);
  std::ifstream csv(dir / "sweep.csv");
  const auto rows = read_sweep_csv(csv);
  CHECK(rows.size() == 6);
  const auto [a, s] = split_rows(rows);
  CHECK(a.size() == 3);
  CHECK(s.size() == 3);
  std::ifstream js(dir / "summary.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j["schema"] == kSweepSchema);
  CHECK(j.contains("agreement_fraction"));
  CHECK(j["knee"]["S_ms"].get<double>() > 0.0);
  std::filesystem::remove_all(dir);

  SweepSpec bad = spec;
  bad.S_grid = {0.01, 0.005};
  CHECK_THROWS(run_sweep(cfg, art.policy, art.profile, bad));
}
