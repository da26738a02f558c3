#ifndef SICAOI_ARTIFACT_HPP
#define SICAOI_ARTIFACT_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sicaoi/config.hpp"
#include "sicaoi/error.hpp"
#include "sicaoi/policy.hpp"
#include "sicaoi/sic.hpp"

namespace sicaoi {

inline constexpr const char* kArtifactSchema = "sicaoi-policy/1";

/// Everything the sweeps need from the policy stage.
struct PolicyArtifact {
  std::uint64_t config_hash = 0;
  PolicyFit fit;               // constants recovered from the raw table
  AccessPolicy policy;         // the policy the sweeps run
  std::vector<PolicyPoint> raw;  // per-k argmax, k = 1..n
  SicProfile profile;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Hash of the configuration subset that determines the policy stage:
/// everything the profile and the optimizer read, plus the closed-form
/// constants the sweeps use.
inline std::uint64_t policy_config_hash(const SystemConfig& cfg) {
  std::ostringstream os;
  os << "n=" << cfg.n << ";gamma_max=" << detail::fmt17(cfg.gamma_max) << ";epsilon=" << detail::fmt17(cfg.epsilon)
     << ";L=" << detail::fmt17(cfg.L_bits) << ";W=" << detail::fmt17(cfg.W_Hz) << ";T_oh=" << detail::fmt17(cfg.T_oh_s)
     << ";gamma_min=" << detail::fmt17(cfg.gamma_min) << ";gamma_points=" << cfg.gamma_points
     << ";p_points=" << cfg.p_points << ";mc_trials=" << cfg.mc_trials << ";seed=" << cfg.seed
     << ";k_c=" << cfg.k_c << ";a_gamma=" << detail::fmt17(cfg.a_gamma) << ";b_gamma=" << detail::fmt17(cfg.b_gamma);
  return detail::fnv1a(os.str());
}

/// Runs the whole policy stage: profile, per-k optimization, constant fit,
/// and the closed-form policy built from the configured constants (with its
/// decoded-per-slot slope evaluated on the profile).
inline PolicyArtifact build_policy_artifact(const SystemConfig& cfg) {
  cfg.validate();
  PolicyArtifact art;
  art.config_hash = policy_config_hash(cfg);
  art.profile = build_sic_profile(cfg);
  art.raw = optimize_all(cfg, art.profile, default_optimizer_grid(cfg, art.profile));
  art.fit = fit_policy_constants(art.raw, art.profile, cfg.gamma_max);
  art.policy = closed_form_policy(cfg, cfg.k_c, cfg.a_gamma, cfg.b_gamma);
  art.policy.a_D = fit_decoded_slope(static_cast<std::size_t>(cfg.n), cfg.k_c, cfg.a_gamma, cfg.b_gamma,
                                     cfg.gamma_max, art.profile);
  return art;
}

inline void write_artifact(std::ostream& os, const PolicyArtifact& art) {
  using detail::fmt17;
  const auto& pol = art.policy;
  os << kArtifactSchema << '\n';
  os << "config_hash " << art.config_hash << '\n';
  os << "policy_kind " << to_string(pol.kind) << '\n';
  os << "k_c " << pol.k_c << '\n';
  os << "a_gamma " << fmt17(pol.a_gamma) << '\n';
  os << "b_gamma " << fmt17(pol.b_gamma) << '\n';
  os << "a_D " << fmt17(pol.a_D) << '\n';
  os << "fit_k_c " << art.fit.k_c << '\n';
  os << "fit_a_gamma " << fmt17(art.fit.a_gamma) << '\n';
  os << "fit_b_gamma " << fmt17(art.fit.b_gamma) << '\n';
  os << "fit_a_D " << fmt17(art.fit.a_D) << '\n';
  os << "[table] " << pol.p.size() << '\n';
  os << "# k p gamma T_s\n";
  for (std::size_t k = 0; k < pol.p.size(); ++k)
    os << k << ' ' << fmt17(pol.p[k]) << ' ' << fmt17(pol.gamma[k]) << ' ' << fmt17(pol.T[k]) << '\n';
  os << "[raw] " << art.raw.size() << '\n';
  os << "# k p gamma U D\n";
  for (const auto& pt : art.raw)
    os << pt.k << ' ' << fmt17(pt.p) << ' ' << fmt17(pt.gamma) << ' ' << fmt17(pt.U) << ' ' << fmt17(pt.D) << '\n';
  const auto& grid = art.profile.gamma_grid();
  os << "[profile] " << art.profile.max_h() << ' ' << grid.size() << ' ' << art.profile.trials() << '\n';
  os << "gamma";
  for (double g : grid) os << ' ' << fmt17(g);
  os << '\n';
  for (std::size_t h = 0; h <= art.profile.max_h(); ++h) {
    os << "mh " << h;
    for (double v : art.profile.table()[h]) os << ' ' << fmt17(v);
    os << '\n';
    os << "se " << h;
    for (double v : art.profile.stderr_table()[h]) os << ' ' << fmt17(v);
    os << '\n';
  }
  os << "[end]\n";
}

inline void save_artifact(const std::string& path, const PolicyArtifact& art) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write artifact: " + path);
  write_artifact(out, art);
  if (!out) throw ArtifactError("write failed: " + path);
}

namespace detail {

class ArtifactReader {
 public:
  explicit ArtifactReader(std::istream& is) : is_(is) {}

  std::string line() {
    std::string s;
    while (std::getline(is_, s)) {
      ++lineno_;
      if (!s.empty() && s[0] != '#') return s;
    }
    fail("unexpected end of artifact");
  }

  template <class T>
  T keyed(const std::string& key) {
    std::istringstream ls(line());
    std::string k;
    T v{};
    if (!(ls >> k >> v) || k != key) fail("expected '" + key + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ArtifactError("artifact line " + std::to_string(lineno_) + ": " + what);
  }

 private:
  std::istream& is_;
  std::size_t lineno_ = 0;
};

inline PolicyKind parse_policy_kind(const std::string& s, ArtifactReader& rd) {
  for (auto kind : {PolicyKind::closed_form, PolicyKind::optimized_table, PolicyKind::constant})
    if (s == to_string(kind)) return kind;
  rd.fail("unknown policy kind '" + s + "'");
}

}  // namespace detail

/// Parses an artifact; the slot times are taken from the file as written.
inline PolicyArtifact read_artifact(std::istream& is) {
  detail::ArtifactReader rd(is);
  PolicyArtifact art;
  if (rd.line() != kArtifactSchema) rd.fail(std::string("schema is not ") + kArtifactSchema);
  art.config_hash = rd.keyed<std::uint64_t>("config_hash");
  auto& pol = art.policy;
  pol.kind = detail::parse_policy_kind(rd.keyed<std::string>("policy_kind"), rd);
  pol.k_c = rd.keyed<std::int64_t>("k_c");
  pol.a_gamma = rd.keyed<double>("a_gamma");
  pol.b_gamma = rd.keyed<double>("b_gamma");
  pol.a_D = rd.keyed<double>("a_D");
  art.fit.k_c = rd.keyed<std::int64_t>("fit_k_c");
  art.fit.a_gamma = rd.keyed<double>("fit_a_gamma");
  art.fit.b_gamma = rd.keyed<double>("fit_b_gamma");
  art.fit.a_D = rd.keyed<double>("fit_a_D");

  const auto rows = rd.keyed<std::size_t>("[table]");
  pol.p.resize(rows);
  pol.gamma.resize(rows);
  pol.T.resize(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    std::istringstream ls(rd.line());
    std::size_t idx = 0;
    if (!(ls >> idx >> pol.p[k] >> pol.gamma[k] >> pol.T[k]) || idx != k) rd.fail("bad table row");
  }

  const auto raw_rows = rd.keyed<std::size_t>("[raw]");
  art.raw.resize(raw_rows);
  for (auto& pt : art.raw) {
    std::istringstream ls(rd.line());
    if (!(ls >> pt.k >> pt.p >> pt.gamma >> pt.U >> pt.D)) rd.fail("bad raw row");
  }

  std::istringstream head(rd.line());
  std::string tag;
  std::size_t max_h = 0, points = 0;
  std::int64_t trials = 0;
  if (!(head >> tag >> max_h >> points >> trials) || tag != "[profile]") rd.fail("expected '[profile]'");
  auto read_row = [&](const std::string& key, std::size_t index_expected, bool indexed) {
    std::istringstream ls(rd.line());
    std::string k;
    std::size_t idx = 0;
    if (!(ls >> k) || k != key || (indexed && (!(ls >> idx) || idx != index_expected))) rd.fail("expected '" + key + "'");
    std::vector<double> v(points);
    for (auto& x : v)
      if (!(ls >> x)) rd.fail("short '" + key + "' row");
    return v;
  };
  auto grid = read_row("gamma", 0, false);
  std::vector<std::vector<double>> mh(max_h + 1), se(max_h + 1);
  for (std::size_t h = 0; h <= max_h; ++h) {
    mh[h] = read_row("mh", h, true);
    se[h] = read_row("se", h, true);
  }
  if (rd.line() != "[end]") rd.fail("expected '[end]'");
  art.profile = SicProfile(std::move(grid), std::move(mh), std::move(se), trials);
  return art;
}

inline PolicyArtifact load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open artifact: " + path);
  return read_artifact(in);
}

/// Rejects an artifact produced under a different policy-relevant config.
inline void check_artifact(const PolicyArtifact& art, const SystemConfig& cfg) {
  const auto expect = policy_config_hash(cfg);
  if (art.config_hash != expect)
    throw ArtifactError("artifact/config hash mismatch: artifact " + std::to_string(art.config_hash) + ", config " +
                        std::to_string(expect));
  if (art.policy.n() != static_cast<std::size_t>(cfg.n)) throw ArtifactError("artifact node count differs from config");
}

}  // namespace sicaoi

#endif  // SICAOI_ARTIFACT_HPP
