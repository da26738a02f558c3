#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "fixtures.hpp"
#include "sicaoi/analytic.hpp"
#include "sicaoi/simulator.hpp"

using namespace sicaoi;
using Catch::Approx;

TEST_CASE("node distances are area-uniform", "[simulator]") {
  const std::size_t N = 200000;
  const double R = 700.0;
  Rng rng = make_stream(5, 0);
  auto r = sample_node_distances(N, R, 1.0, rng);
  double mean = 0.0;
  for (double x : r) {
    REQUIRE(x <= R);
    REQUIRE(x >= 1.0);
    mean += x;
  }
  mean /= static_cast<double>(N);
  CHECK(std::abs(mean - 2.0 * R / 3.0) < 3.0 * R / std::sqrt(18.0 * static_cast<double>(N)));

  std::sort(r.begin(), r.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double F = r[i] * r[i] / (R * R);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / N), std::abs(F - static_cast<double>(i + 1) / N)});
  }
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(N)));  // 1% level
  CHECK_THROWS(sample_node_distances(3, 0.5, 1.0, rng));
}

TEST_CASE("single node matches the model", "[simulator]") {
  // With one node the backlog process has no interaction to approximate.
  SystemConfig cfg;
  cfg.n = 1;
  cfg.S_s = 0.02;
  const auto prof = build_sic_profile(cfg, 400000, 3, default_gamma_grid(cfg));
  const auto pol = closed_form_policy(cfg, cfg.k_c, cfg.a_gamma, cfg.b_gamma);
  const auto a = evaluate_analytic(cfg, pol, prof, cfg.lambda());
  SimOptions opt;
  opt.horizon_slots = 100000;
  const auto sim = estimate_metrics(run_replications(cfg, pol, 17, 10, opt), 0.999);
  INFO("pdr " << sim.pdr.mean << " +- " << sim.pdr.ci << " vs " << a.P_s);
  CHECK(std::abs(sim.pdr.mean - a.P_s) <= sim.pdr.ci + 3.0 * prof.stderr_at(1, prof.gamma_grid().size() - 1));
  INFO("cbr " << sim.cbr.mean << " +- " << sim.cbr.ci << " vs " << a.cbr);
  CHECK(sim.cbr.contains(a.cbr));
  INFO("E[D] " << sim.E_D.mean << " +- " << sim.E_D.ci << " vs " << a.E_D);
  CHECK(sim.E_D.contains(a.E_D));
  INFO("E[Y] " << sim.interdeparture.mean << " +- " << sim.interdeparture.ci << " vs " << a.E_Y);
  CHECK(sim.interdeparture.contains(a.E_Y));
  INFO("theta_norm " << sim.theta_norm.mean << " +- " << sim.theta_norm.ci << " vs " << a.theta_norm);
  CHECK(std::abs(sim.theta_norm.mean - a.theta_norm) <= sim.theta_norm.ci + 0.005);
  INFO("E[H] " << sim.E_H.mean << " +- " << sim.E_H.ci << " vs " << a.E_H);
  CHECK(sim.E_H.mean == Approx(a.E_H).epsilon(0.03));
  INFO("E_bar " << sim.E_bar.mean << " +- " << sim.E_bar.ci << " vs " << a.E_bar);
  CHECK(sim.E_bar.contains(a.E_bar));
}

TEST_CASE("silent policy transmits nothing", "[simulator]") {
  SystemConfig cfg = fixtures::small_config();
  cfg.S_s = 0.01;
  const auto pol = constant_policy(cfg, 0.0, 1.0);
  SimOptions opt;
  opt.horizon_slots = 5000;
  opt.coverage_R = coverage_radius(cfg);
  const auto t = run_replication(cfg, pol, 4, opt);
  CHECK(t.transmitted == 0);
  CHECK(t.delivered == 0);
  CHECK(t.busy_time == 0.0);
  CHECK(t.cbr() == 0.0);
  CHECK(std::isinf(t.mean_aoi()));
  CHECK(std::isinf(t.energy_per_delivered()));
  CHECK(t.mean_backlog() == Approx(8.0).margin(0.01));
}

TEST_CASE("message conservation", "[simulator]") {
  const SystemConfig base;
  const auto& pol = fixtures::reference_policy();
  for (double S : {1e-3, 0.05, 1.0}) {
    SystemConfig cfg = base;
    cfg.S_s = S;
    SimOptions opt;
    opt.horizon_slots = 4000;
    opt.coverage_R = coverage_radius(cfg);
    const auto t = run_replication(cfg, pol, 11, opt);
    CHECK(t.generated_all == t.delivered_all + t.failed_all + t.dropped_all + t.in_flight);
    CHECK(t.in_flight <= cfg.n);
    CHECK(t.delivered <= t.transmitted);
    CHECK(t.cbr() <= 1.0);
  }
}

TEST_CASE("replications are reproducible and thread-count independent", "[simulator]") {
  SystemConfig cfg;
  cfg.S_s = 0.02;
  const auto& pol = fixtures::reference_policy();
  SimOptions opt;
  opt.horizon_slots = 3000;
  ::setenv("SICAOI_WORKERS", "1", 1);
  const auto one = run_replications(cfg, pol, 21, 3, opt);
  ::setenv("SICAOI_WORKERS", "3", 1);
  const auto three = run_replications(cfg, pol, 21, 3, opt);
  ::unsetenv("SICAOI_WORKERS");
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(one[r].delivered == three[r].delivered);
    CHECK(one[r].energy == three[r].energy);
    CHECK(one[r].aoi_area == three[r].aoi_area);
  }
  CHECK(one[0].delivered != one[1].delivered);
}

TEST_CASE("heavy traffic alternates transmit groups", "[simulator]") {
  SystemConfig cfg;
  cfg.S_s = 0.01;
  SimOptions opt;
  opt.horizon_slots = 20000;
  const auto sim = estimate_metrics(run_replications(cfg, fixtures::reference_policy(), 8, 3, opt));
  const auto peak = std::max_element(sim.backlog_histogram.begin(), sim.backlog_histogram.end()) -
                    sim.backlog_histogram.begin();
  CHECK(std::abs(static_cast<double>(peak) - 25.0) <= 4.0);
  CHECK(sim.E_Q.mean == Approx(25.0).margin(2.0));
  CHECK(sim.tx_lag1.mean < -0.5);
}

TEST_CASE("replication estimates", "[simulator]") {
  const auto same = estimate_metric({2.0, 2.0, 2.0});
  CHECK(same.mean == 2.0);
  CHECK(same.ci == 0.0);
  const auto two = estimate_metric({1.0, 3.0});
  CHECK(two.mean == 2.0);
  // s = sqrt(2), half-width t_{0.975,1} s / sqrt(2).
  CHECK(two.ci == Approx(12.706204736));
  CHECK(two.contains(14.7));
  CHECK_FALSE(two.contains(14.8));
  CHECK_THROWS(estimate_metric({1.0}));
}
