#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "sicaoi/acceptance.hpp"
#include "sicaoi/analytic.hpp"

using namespace sicaoi;
using Catch::Approx;

namespace {

BacklogModel point_mass(const AccessPolicy& pol, std::size_t k_all) {
  BacklogModel m = make_backlog(0.0, pol);
  m.w.assign(pol.n() + 1, 0.0);
  m.w[k_all] = 1.0;
  return m;
}

}  // namespace

TEST_CASE("backlog pmf", "[analytic]") {
  const auto q = backlog_pdf(0.5, 3, true);
  REQUIRE(q.size() == 3);
  CHECK(q[0] == Approx(0.25));
  CHECK(q[1] == Approx(0.5));
  CHECK(q[2] == Approx(0.25));
  const auto w = backlog_pdf(0.0, 4, false);
  REQUIRE(w.size() == 5);
  CHECK(w[0] == 1.0);
}

TEST_CASE("slot-time transforms", "[analytic]") {
  const SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  const auto m = make_backlog(0.3, pol);
  CHECK(phi_slot(0.0, m, pol, false) == Approx(1.0).epsilon(1e-12));
  CHECK(phi_slot(0.0, m, pol, true) == Approx(1.0).epsilon(1e-12));
  const auto idle = make_backlog(0.0, pol);
  CHECK(phi_slot(10.0, idle, pol, false) == Approx(std::exp(-10.0 * cfg.T_oh_s)).epsilon(1e-14));

  double max_T = 0.0, mean_T = 0.0;
  for (std::size_t k = 0; k < m.q.size(); ++k) {
    max_T = std::max(max_T, pol.T[k]);
    mean_T += m.q[k] * pol.T[k];
  }
  const double h = 1e-6 * max_T;
  const double fd = (phi_slot(h, m, pol, false) - phi_slot(-h, m, pol, false)) / (2.0 * h);
  CHECK(fd == Approx(-mean_T).epsilon(1e-6));
}

TEST_CASE("backlog fixed point", "[analytic]") {
  const auto& pol = fixtures::reference_policy();
  const auto light = solve_backlog_fixed_point(pol, 1e-6);
  CHECK(light.b < 1e-3);
  const auto heavy = solve_backlog_fixed_point(pol, 1e6);
  CHECK(std::abs(heavy.b - 1.0 / (1.0 + heavy.p_bar_prime)) < 1e-3);
  for (double S : {1e-3, 1e-2, 0.1, 1.0}) {
    const auto m = solve_backlog_fixed_point(pol, 1.0 / S);
    CHECK(std::abs(fixed_point_map(m.b, pol, 1.0 / S) - m.b) < 1e-10);
    CHECK(m.b > 0.0);
    CHECK(m.b < 1.0 / (1.0 + m.p_bar_prime) + 1e-9);
  }
  const auto m10 = solve_backlog_fixed_point(pol, 100.0);
  CHECK(50.0 * m10.b == Approx(25.0).margin(2.0));

  const SystemConfig cfg;
  const auto dead = constant_policy(cfg, 0.0, 1.0);
  CHECK_THROWS_AS(solve_backlog_fixed_point(dead, 10.0), ModelInconsistency);
}

TEST_CASE("contention time on a single atom", "[analytic]") {
  const SystemConfig cfg;
  const double p = 0.3;
  const auto pol = constant_policy(cfg, p, 1.0);
  const double T = pol.T[1];
  const auto m = make_backlog(0.4, pol);
  const auto c = contention_moments(m, pol);
  CHECK(c.mean == Approx(T / p).epsilon(1e-12));
  CHECK(c.second == Approx(T * T * (2.0 - p) / (p * p)).epsilon(1e-12));
  CHECK(c.phi(0.0) == Approx(1.0).epsilon(1e-12));

  const auto eager = constant_policy(cfg, 1.0, 1.0);
  const auto me = make_backlog(0.4, eager);
  const auto ce = contention_moments(me, eager);
  CHECK(ce.mean == Approx(me.T_bar_prime).epsilon(1e-12));
  for (double s : {0.5, 10.0, 200.0}) CHECK(ce.phi(s) == Approx(phi_slot(s, me, eager, true)).epsilon(1e-13));

  const auto dead = constant_policy(cfg, 0.0, 1.0);
  CHECK_THROWS_AS(contention_moments(make_backlog(0.4, dead), dead), ModelInconsistency);
}

TEST_CASE("idle time on a single atom", "[analytic]") {
  const SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  const auto m = make_backlog(0.0, pol);  // others never backlogged: X = T_oh
  const double T = cfg.T_oh_s;
  for (double lambda : {1.0, 50.0, 5000.0}) {
    const auto r = idle_moments(m, pol, lambda);
    const double a = 1.0 - std::exp(-lambda * T);  // per-slot arrival probability
    CHECK(r.mean == Approx(T / a).epsilon(1e-10));
    CHECK(r.second == Approx(T * T * (2.0 - a) / (a * a)).epsilon(1e-10));
    CHECK(r.phi(0.0) == Approx(1.0).epsilon(1e-13));
  }
  const auto fast = idle_moments(make_backlog(0.3, pol), pol, 1e9);
  double ex = 0.0;
  const auto m3 = make_backlog(0.3, pol);
  for (std::size_t k = 0; k < m3.q.size(); ++k) ex += m3.q[k] * pol.T[k];
  CHECK(fast.mean == Approx(ex).epsilon(1e-9));
}

TEST_CASE("success probability reductions", "[analytic]") {
  SystemConfig one;
  one.n = 1;
  const auto prof1 = build_sic_profile(one, 200000, 9, default_gamma_grid(one));
  const auto pol1 = closed_form_policy(one, one.k_c, one.a_gamma, one.b_gamma);
  const auto m1 = solve_backlog_fixed_point(pol1, 10.0);
  CHECK(success_probability(m1, pol1, prof1) == Approx(prof1.mean_decoded(1, pol1.gamma[1])).epsilon(1e-12));
  CHECK(success_probability(m1, pol1, prof1) == Approx(1.0 - one.epsilon).margin(0.005));

  const auto& prof = fixtures::reference_profile();
  const auto& pol = fixtures::reference_policy();
  for (std::size_t k : {10u, 30u}) {
    const auto m = point_mass(pol, k);
    CHECK(success_probability(m, pol, prof) ==
          Approx(prof.mean_decoded(k, pol.gamma[k]) / static_cast<double>(k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(success_probability(point_mass(pol, 0), pol, prof), ModelInconsistency);
}

TEST_CASE("throughput and busy ratio", "[analytic]") {
  const auto th = throughput(0.9, 1.0, 2.0, 4000.0);
  CHECK(th.theta == Approx(0.9));
  CHECK(th.theta_norm == Approx(0.45));
  CHECK(th.theta_bps == Approx(3600.0));

  const SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  CHECK(channel_busy_ratio(point_mass(pol, 0), pol) == 0.0);
  const auto eager = constant_policy(cfg, 1.0, 0.5);
  const auto m = make_backlog(0.05, eager);
  double total = 0.0;
  for (std::size_t k = 0; k < m.w.size(); ++k) total += m.w[k] * eager.T[k];
  CHECK(channel_busy_ratio(m, eager) == Approx(1.0 - m.w[0] * eager.T[0] / total).epsilon(1e-12));
}

TEST_CASE("access delay", "[analytic]") {
  const SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  const auto m = make_backlog(0.0, pol);
  const double T = cfg.T_oh_s;
  for (double lambda : {10.0, 1e4}) {
    const auto d = access_delay(m, pol, lambda);
    const double e = std::exp(-lambda * T);
    CHECK(d.mean_v == Approx(1.0 / lambda - T * e / (1.0 - e)).epsilon(1e-9));
    CHECK(d.phi_v(0.0) == Approx(1.0).epsilon(1e-13));
    CHECK(d.mean == Approx(contention_moments(m, pol).mean + d.mean_v).epsilon(1e-14));
  }
  // Many arrivals per slot: the gap after the last one is about 1/lambda.
  CHECK(access_delay(m, pol, 1e5).mean_v <= 1e-5);
  CHECK(access_delay(m, pol, 1e5).mean_v == Approx(1e-5).epsilon(1e-6));
}

TEST_CASE("age of information on a deterministic renewal", "[analytic]") {
  const double T = 0.01, ED = 0.004;
  const Transform phi = [T](double s) { return std::exp(-s * T); };
  const auto perfect = aoi_metrics(phi, ED, T, T * T, 1.0);
  CHECK(perfect.mean == Approx(ED + T / 2.0));
  CHECK(std::isinf(perfect.zeta));
  const auto lossy = aoi_metrics(phi, ED, T, T * T, 0.7);
  CHECK(lossy.mean == Approx(ED + T / 2.0 + T * (1.0 / 0.7 - 1.0)));
  CHECK(lossy.zeta == Approx(-std::log(0.3) / T).epsilon(1e-10));
  CHECK(lossy.ccdf(0.0) == 1.0);
  CHECK(lossy.ccdf(lossy.mean + 1.0 / lossy.zeta) == Approx(std::exp(-2.0)));
  CHECK_THROWS(aoi_metrics(phi, ED, T, T * T, 0.0));
}

TEST_CASE("coverage radius follows the fourth-power law", "[analytic]") {
  SystemConfig cfg;
  const double R = coverage_radius(cfg, 1e-6);
  const double K = cfg.h_tx_m * cfg.h_tx_m * cfg.h_rx_m * cfg.h_rx_m;
  CHECK(R == Approx(std::pow(K * cfg.P_tx_max_W * cfg.c() / (cfg.P_N_W() * cfg.gamma_max), 0.25)).epsilon(1e-8));
  SystemConfig strong = cfg;
  strong.P_tx_max_W *= 16.0;
  CHECK(coverage_radius(strong, 1e-6) / R == Approx(2.0).epsilon(1e-6));
  SystemConfig relaxed = cfg;
  relaxed.gamma_max /= 2.0;
  CHECK(coverage_radius(relaxed, 1e-6) / R == Approx(std::pow(2.0, 0.25)).epsilon(1e-6));
  SystemConfig calibrated = cfg;
  calibrated.path_gain_offset_dB = 40.0 * std::log10(876.0 / R);
  CHECK(coverage_radius(calibrated, 1e-6) == Approx(876.0).epsilon(1e-6));
  SystemConfig deaf = cfg;
  deaf.P_tx_max_W = 1e-20;
  CHECK_THROWS_AS(coverage_radius(deaf), ModelInconsistency);
}

TEST_CASE("energy per delivered packet", "[analytic]") {
  SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  const auto& prof = fixtures::reference_profile();
  const double R = coverage_radius(cfg);
  const double K = cfg.h_tx_m * cfg.h_tx_m * cfg.h_rx_m * cfg.h_rx_m;
  CHECK(mean_inverse_path_gain(cfg, R) ==
        Approx((std::pow(R, 6) - std::pow(cfg.r_min_m, 6)) / (3.0 * K * R * R)).epsilon(1e-8));

  cfg.E_g_J = 0.0;
  cfg.P_a_W = 0.0;
  cfg.P_d_W = 0.0;
  const double lambda = 20.0;
  const auto m = solve_backlog_fixed_point(pol, lambda);
  const auto c = contention_moments(m, pol);
  const auto r = idle_moments(m, pol, lambda);
  const double Ps = success_probability(m, pol, prof);
  const auto e = energy_per_delivered(m, pol, lambda, cfg, R, c.mean, r.mean, c.mean + r.mean, Ps);
  const double inv = (std::pow(R, 6) - std::pow(cfg.r_min_m, 6)) / (3.0 * K * R * R);
  double etx = 0.0;
  for (std::size_t k = 0; k < m.q.size(); ++k) etx += m.q[k] * cfg.P_N_W() * pol.gamma[k + 1] / cfg.c() * inv * pol.T[k + 1];
  CHECK(e.E_tx == Approx(etx).epsilon(1e-7));
  CHECK(e.E_bar == Approx(etx / Ps).epsilon(1e-7));
}

TEST_CASE("first- and last-arrival residuals add up to the activating slot", "[analytic]") {
  const SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  const auto R = coverage_radius(cfg);
  for (double S : numeric::logspace(1e-3, 10.0, 25)) {
    const double lambda = 1.0 / S;
    const auto m = solve_backlog_fixed_point(pol, lambda);
    const auto c = contention_moments(m, pol);
    const auto r = idle_moments(m, pol, lambda);
    const auto d = access_delay(m, pol, lambda);
    const auto e = energy_per_delivered(m, pol, lambda, cfg, R, c.mean, r.mean, c.mean + r.mean, 0.9);
    // Length of the slot holding the first arrival, size-biased by arrival.
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < m.q.size(); ++k) {
      const double a = -std::expm1(-lambda * pol.T[k]);
      num += m.q[k] * pol.T[k] * a;
      den += m.q[k] * a;
    }
    CHECK(e.mean_v_first + d.mean_v == Approx(num / den).epsilon(1e-10));
    CHECK(e.mean_v_first >= 0.0);
    CHECK(d.mean_v >= 0.0);
  }
}

TEST_CASE("metrics across the load sweep", "[analytic]") {
  const SystemConfig cfg;
  const auto& pol = fixtures::reference_policy();
  const auto& prof = fixtures::reference_profile();
  double prev_cbr = 2.0, prev_q = 1e9;
  for (double S : numeric::logspace(1e-3, 1.0, 30)) {
    const auto r = evaluate_analytic(cfg, pol, prof, 1.0 / S);
    CHECK(r.P_s >= 0.0);
    CHECK(r.P_s <= 1.0);
    CHECK(r.cbr >= 0.0);
    CHECK(r.cbr <= 1.0);
    CHECK(r.theta_norm <= 1.0 - cfg.epsilon + 0.01);
    CHECK(r.E_H >= r.E_D);
    CHECK(r.zeta > 0.0);
    CHECK(r.cbr <= prev_cbr + 1e-12);
    CHECK(r.E_Q <= prev_q + 1e-9);
    prev_cbr = r.cbr;
    prev_q = r.E_Q;
  }
  const auto heavy = evaluate_analytic(cfg, pol, prof, 1000.0);
  CHECK(heavy.cbr == Approx(1.0).margin(0.02));
  CHECK(heavy.S_inf == Approx(critical_rate(pol.a_D, pol.a_gamma, cfg).S_inf));
}

TEST_CASE("operating point near the trade-off knee", "[analytic]") {
  const SystemConfig cfg;
  const auto r = evaluate_analytic(cfg, fixtures::reference_policy(), fixtures::reference_profile(), 1.0 / 0.053);
  CHECK(r.E_H == Approx(0.101).epsilon(0.10));
  CHECK(r.E_bar == Approx(0.06e-3).epsilon(0.15));
}

TEST_CASE("property suite", "[analytic]") {
  const SystemConfig cfg;
  for (const auto& check : run_property_suite(cfg, fixtures::reference_policy(), fixtures::reference_profile())) {
    INFO(check.name << ": " << check.detail);
    CHECK(check.passed);
  }
}
