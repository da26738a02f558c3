#ifndef SICAOI_CONFIG_HPP
#define SICAOI_CONFIG_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "sicaoi/error.hpp"

namespace sicaoi {

/// Scenario parameters. All quantities are SI (seconds, hertz, watts,
/// joules, metres, bits) except the noise floor, which is entered in dBm as
/// it is usually quoted. Defaults reproduce the reference evaluation setup:
/// 50 nodes, 500-byte packets on a 1 MHz channel.
struct SystemConfig {
  std::int64_t n = 50;
  double S_s = 0.1;  // mean message generation time, 1/lambda
  double L_bits = 4000.0;
  double W_Hz = 1.0e6;
  double T_oh_s = 1.0e-3;
  double gamma_max = 31.0;
  double epsilon = 0.1;
  double P_N_dBm = -107.0;
  double P_a_W = 1.0e-3;
  double P_d_W = 1.0e-5;
  double P_tx_max_W = 0.1;
  double E_g_J = 1.0e-5;
  double h_tx_m = 1.0;
  double h_rx_m = 4.0;
  double r_min_m = 1.0;
  // Extra deterministic gain on top of the d^-4 two-ray law; used to
  // calibrate the coverage radius against a measured propagation model.
  double path_gain_offset_dB = 0.0;

  // Closed-form access policy constants.
  std::int64_t k_c = 6;
  double a_gamma = 0.39;
  double b_gamma = 0.78;

  // Monte Carlo / optimizer settings.
  std::uint64_t seed = 1;
  std::int64_t mc_trials = 100000;
  std::int64_t gamma_points = 200;
  double gamma_min = 1.0e-3;
  std::int64_t p_points = 200;

  double lambda() const { return 1.0 / S_s; }
  /// -ln(1 - epsilon): normalized received SNR is gamma / c.
  double c() const { return -std::log1p(-epsilon); }
  double P_N_W() const { return std::pow(10.0, P_N_dBm / 10.0) * 1.0e-3; }

  void validate() const;

  bool operator==(const SystemConfig&) const = default;
};

namespace detail {

using IntField = std::int64_t SystemConfig::*;
using UIntField = std::uint64_t SystemConfig::*;
using RealField = double SystemConfig::*;

enum class Bound { any, positive, non_negative, probability };

struct KeySpec {
  std::string_view key;
  std::variant<IntField, UIntField, RealField> field;
  Bound bound;
  std::string_view unit;
};

inline constexpr std::array<KeySpec, 24> kConfigKeys{{
    {"n", &SystemConfig::n, Bound::positive, "nodes"},
    {"S_s", &SystemConfig::S_s, Bound::positive, "s, mean generation time"},
    {"L_bits", &SystemConfig::L_bits, Bound::positive, "bits"},
    {"W_Hz", &SystemConfig::W_Hz, Bound::positive, "Hz"},
    {"T_oh_s", &SystemConfig::T_oh_s, Bound::positive, "s"},
    {"gamma_max", &SystemConfig::gamma_max, Bound::positive, "linear SNIR"},
    {"epsilon", &SystemConfig::epsilon, Bound::probability, "probability"},
    {"P_N_dBm", &SystemConfig::P_N_dBm, Bound::any, "dBm"},
    {"P_a_W", &SystemConfig::P_a_W, Bound::non_negative, "W"},
    {"P_d_W", &SystemConfig::P_d_W, Bound::non_negative, "W"},
    {"P_tx_max_W", &SystemConfig::P_tx_max_W, Bound::positive, "W"},
    {"E_g_J", &SystemConfig::E_g_J, Bound::non_negative, "J"},
    {"h_tx_m", &SystemConfig::h_tx_m, Bound::positive, "m"},
    {"h_rx_m", &SystemConfig::h_rx_m, Bound::positive, "m"},
    {"r_min_m", &SystemConfig::r_min_m, Bound::positive, "m"},
    {"path_gain_offset_dB", &SystemConfig::path_gain_offset_dB, Bound::any, "dB"},
    {"k_c", &SystemConfig::k_c, Bound::positive, "backlog count"},
    {"a_gamma", &SystemConfig::a_gamma, Bound::positive, "dimensionless"},
    {"b_gamma", &SystemConfig::b_gamma, Bound::any, "dimensionless"},
    {"seed", &SystemConfig::seed, Bound::any, "RNG seed"},
    {"mc_trials", &SystemConfig::mc_trials, Bound::positive, "samples per SIC cell"},
    {"gamma_points", &SystemConfig::gamma_points, Bound::positive, "grid size"},
    {"gamma_min", &SystemConfig::gamma_min, Bound::positive, "linear SNIR"},
    {"p_points", &SystemConfig::p_points, Bound::positive, "grid size"},
}};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void check_bound(const KeySpec& spec, double v, std::size_t line) {
  const bool ok = [&] {
    switch (spec.bound) {
      case Bound::positive: return v > 0.0;
      case Bound::non_negative: return v >= 0.0;
      case Bound::probability: return v > 0.0 && v < 1.0;
      case Bound::any: return std::isfinite(v);
    }
    return false;
  }();
  if (!ok || !std::isfinite(v)) {
    const char* what = spec.bound == Bound::probability ? "must lie in (0, 1)"
                       : spec.bound == Bound::positive  ? "must be positive"
                       : spec.bound == Bound::non_negative ? "must be non-negative"
                                                            : "must be finite";
    throw ConfigError(std::string(spec.key) + " " + what, line);
  }
}

}  // namespace detail

inline void SystemConfig::validate() const {
  for (const auto& spec : detail::kConfigKeys) {
    std::visit(
        [&](auto field) { detail::check_bound(spec, static_cast<double>(this->*field), 0); },
        spec.field);
  }
  if (P_d_W > P_a_W) throw ConfigError("P_d_W must not exceed P_a_W");
  if (gamma_min >= gamma_max) throw ConfigError("gamma_min must be below gamma_max");
  if (gamma_points < 2 || p_points < 2) throw ConfigError("grids need at least 2 points");
}

/// Parses the flat `key = value` format. `#` starts a comment. Unknown keys,
/// duplicate keys and malformed values are rejected with the line number;
/// keys that are absent keep their defaults.
inline SystemConfig parse_config(std::istream& in) {
  SystemConfig cfg;
  std::array<bool, detail::kConfigKeys.size()> seen{};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", line_no);
    if (value.empty()) throw ConfigError("missing value for key '" + std::string(key) + "'", line_no);

    std::size_t idx = 0;
    for (; idx < detail::kConfigKeys.size(); ++idx)
      if (detail::kConfigKeys[idx].key == key) break;
    if (idx == detail::kConfigKeys.size()) throw ConfigError("unknown key '" + std::string(key) + "'", line_no);
    if (seen[idx]) throw ConfigError("duplicate key '" + std::string(key) + "'", line_no);
    seen[idx] = true;

    const auto& spec = detail::kConfigKeys[idx];
    std::visit(
        [&](auto field) {
          using T = std::remove_reference_t<decltype(cfg.*field)>;
          T parsed{};
          if (!detail::parse_number(value, parsed))
            throw ConfigError("cannot parse value '" + std::string(value) + "' for key '" + std::string(key) + "'",
                              line_no);
          detail::check_bound(spec, static_cast<double>(parsed), line_no);
          cfg.*field = parsed;
        },
        spec.field);
  }
  cfg.validate();
  return cfg;
}

inline SystemConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Writes every key with full precision, followed by the derived constants
/// as comments. parse_config(dump_config(c)) == c.
inline void dump_config(std::ostream& out, const SystemConfig& cfg) {
  out << "# sicaoi resolved configuration\n";
  for (const auto& spec : detail::kConfigKeys) {
    std::visit(
        [&](auto field) {
          out << spec.key << " = ";
          if constexpr (std::is_same_v<decltype(field), detail::RealField>)
            out << detail::format_real(cfg.*field);
          else
            out << cfg.*field;
          out << "  # " << spec.unit << '\n';
        },
        spec.field);
  }
  out << "# derived: lambda_per_s = " << detail::format_real(cfg.lambda()) << '\n';
  out << "# derived: c = " << detail::format_real(cfg.c()) << '\n';
  out << "# derived: P_N_W = " << detail::format_real(cfg.P_N_W()) << '\n';
}

inline std::string dump_config_string(const SystemConfig& cfg) {
  std::ostringstream out;
  dump_config(out, cfg);
  return out.str();
}

}  // namespace sicaoi

#endif  // SICAOI_CONFIG_HPP
