#ifndef SICAOI_TESTS_FIXTURES_HPP
#define SICAOI_TESTS_FIXTURES_HPP

#include "sicaoi/sicaoi.hpp"

namespace fixtures {

// Reference scenario with a 1e5-trial profile, shared by the test cases of
// one process.
inline const sicaoi::SicProfile& reference_profile() {
  static const sicaoi::SicProfile profile = sicaoi::build_sic_profile(sicaoi::SystemConfig{});
  return profile;
}

inline const sicaoi::AccessPolicy& reference_policy() {
  static const sicaoi::AccessPolicy policy = [] {
    const sicaoi::SystemConfig cfg;
    auto pol = sicaoi::closed_form_policy(cfg, cfg.k_c, cfg.a_gamma, cfg.b_gamma);
    pol.a_D = sicaoi::fit_decoded_slope(static_cast<std::size_t>(cfg.n), cfg.k_c, cfg.a_gamma, cfg.b_gamma,
                                        cfg.gamma_max, reference_profile());
    return pol;
  }();
  return policy;
}

// Small scenario for tests that need a full policy stage quickly.
inline sicaoi::SystemConfig small_config() {
  sicaoi::SystemConfig cfg;
  cfg.n = 8;
  cfg.mc_trials = 4000;
  cfg.gamma_points = 40;
  cfg.p_points = 40;
  cfg.k_c = 3;
  return cfg;
}

}  // namespace fixtures

#endif
