#ifndef SICAOI_HARNESS_HPP
#define SICAOI_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sicaoi/analytic.hpp"
#include "sicaoi/artifact.hpp"
#include "sicaoi/config.hpp"
#include "sicaoi/numeric.hpp"
#include "sicaoi/parallel.hpp"
#include "sicaoi/simulator.hpp"

namespace sicaoi {

inline constexpr const char* kSweepSchema = "sicaoi-sweep/1";

enum class SweepMode { analytic, simulate, both };

struct SweepSpec {
  std::vector<double> S_grid = numeric::logspace(1e-3, 1.0, 30);
  std::size_t replications = 10;
  std::int64_t horizon_slots = 100000;
  SweepMode mode = SweepMode::both;
  std::uint64_t seed = 1;
  double confidence = 0.95;

  void validate() const {
    if (S_grid.empty()) throw std::invalid_argument("sweep: empty S grid");
    for (std::size_t i = 0; i < S_grid.size(); ++i) {
      if (!(S_grid[i] > 0.0)) throw std::invalid_argument("sweep: S values must be positive");
      if (i > 0 && !(S_grid[i] > S_grid[i - 1])) throw std::invalid_argument("sweep: S grid must ascend");
    }
    if (mode != SweepMode::analytic && replications < 2) throw std::invalid_argument("sweep: need >= 2 replications");
  }
};

/// One CSV row, in the units of the CSV. *_ci are NaN for analytic rows.
struct SweepRow {
  double S_ms = 0.0;
  std::string mode;
  double P_s = 0, theta_msg_s = 0, theta_norm = 0, theta_kbps = 0, cbr = 0, ED_ms = 0, EH_ms = 0, zeta_per_s = 0,
         Ebar_mJ = 0, EQ = 0, StdQ = 0;
  double P_s_ci = NAN, theta_msg_s_ci = NAN, theta_norm_ci = NAN, theta_kbps_ci = NAN, cbr_ci = NAN, ED_ms_ci = NAN,
         EH_ms_ci = NAN, Ebar_mJ_ci = NAN, EQ_ci = NAN, StdQ_ci = NAN;
};

inline SweepRow analytic_row(const MetricsReport& r) {
  SweepRow row;
  row.S_ms = r.S * 1e3;
  row.mode = "analytic";
  row.P_s = r.P_s;
  row.theta_msg_s = r.theta;
  row.theta_norm = r.theta_norm;
  row.theta_kbps = r.theta_bps * 1e-3;
  row.cbr = r.cbr;
  row.ED_ms = r.E_D * 1e3;
  row.EH_ms = r.E_H * 1e3;
  row.zeta_per_s = r.zeta;
  row.Ebar_mJ = r.E_bar * 1e3;
  row.EQ = r.E_Q;
  row.StdQ = r.Std_Q;
  return row;
}

inline SweepRow simulated_row(double S, const SimResult& s) {
  SweepRow row;
  row.S_ms = S * 1e3;
  row.mode = "simulate";
  row.P_s = s.pdr.mean;
  row.P_s_ci = s.pdr.ci;
  row.theta_msg_s = s.theta.mean;
  row.theta_msg_s_ci = s.theta.ci;
  row.theta_norm = s.theta_norm.mean;
  row.theta_norm_ci = s.theta_norm.ci;
  row.theta_kbps = s.theta_bps.mean * 1e-3;
  row.theta_kbps_ci = s.theta_bps.ci * 1e-3;
  row.cbr = s.cbr.mean;
  row.cbr_ci = s.cbr.ci;
  row.ED_ms = s.E_D.mean * 1e3;
  row.ED_ms_ci = s.E_D.ci * 1e3;
  row.EH_ms = s.E_H.mean * 1e3;
  row.EH_ms_ci = s.E_H.ci * 1e3;
  row.zeta_per_s = NAN;
  row.Ebar_mJ = s.E_bar.mean * 1e3;
  row.Ebar_mJ_ci = s.E_bar.ci * 1e3;
  row.EQ = s.E_Q.mean;
  row.EQ_ci = s.E_Q.ci;
  row.StdQ = s.Std_Q.mean;
  row.StdQ_ci = s.Std_Q.ci;
  return row;
}

namespace detail {

struct Column {
  const char* name;
  double SweepRow::*field;
};

inline const std::vector<Column>& value_columns() {
  static const std::vector<Column> cols = {
      {"P_s", &SweepRow::P_s},         {"theta_msg_s", &SweepRow::theta_msg_s}, {"theta_norm", &SweepRow::theta_norm},
      {"theta_kbps", &SweepRow::theta_kbps}, {"cbr", &SweepRow::cbr},           {"ED_ms", &SweepRow::ED_ms},
      {"EH_ms", &SweepRow::EH_ms},     {"zeta_per_s", &SweepRow::zeta_per_s},   {"Ebar_mJ", &SweepRow::Ebar_mJ},
      {"EQ", &SweepRow::EQ},           {"StdQ", &SweepRow::StdQ},
      {"P_s_ci", &SweepRow::P_s_ci},   {"theta_msg_s_ci", &SweepRow::theta_msg_s_ci},
      {"theta_norm_ci", &SweepRow::theta_norm_ci}, {"theta_kbps_ci", &SweepRow::theta_kbps_ci},
      {"cbr_ci", &SweepRow::cbr_ci},   {"ED_ms_ci", &SweepRow::ED_ms_ci},       {"EH_ms_ci", &SweepRow::EH_ms_ci},
      {"Ebar_mJ_ci", &SweepRow::Ebar_mJ_ci}, {"EQ_ci", &SweepRow::EQ_ci},       {"StdQ_ci", &SweepRow::StdQ_ci},
  };
  return cols;
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline double parse_csv_number(const std::string& s) {
  if (s.empty()) return NAN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "# schema " << kSweepSchema << '\n';
  os << "S_ms,mode";
  for (const auto& c : detail::value_columns()) os << ',' << c.name;
  os << '\n';
  for (const auto& r : rows) {
    os << detail::csv_number(r.S_ms) << ',' << r.mode;
    for (const auto& c : detail::value_columns()) os << ',' << detail::csv_number(r.*c.field);
    os << '\n';
  }
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != std::string("# schema ") + kSweepSchema)
    throw std::runtime_error(std::string("sweep csv: expected schema line for ") + kSweepSchema);
  if (!std::getline(is, line)) throw std::runtime_error("sweep csv: missing header");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  std::map<std::string, double SweepRow::*> by_name;
  for (const auto& c : detail::value_columns()) by_name[c.name] = c.field;
  std::vector<SweepRow> rows;
  std::size_t lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != header.size()) throw std::runtime_error("sweep csv line " + std::to_string(lineno) + ": column count");
    SweepRow row;
    try {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "S_ms")
          row.S_ms = detail::parse_csv_number(cells[i]);
        else if (header[i] == "mode")
          row.mode = cells[i];
        else if (auto it = by_name.find(header[i]); it != by_name.end())
          row.*(it->second) = detail::parse_csv_number(cells[i]);
      }
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("sweep csv line " + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Point of the AoI-energy trade-off minimizing E[H] * E_bar.
struct Knee {
  double S = 0.0;
  double E_H = 0.0;
  double E_bar = 0.0;
};

/// Scans the grid and then refines by golden section in log S between the
/// neighbours of the best grid point.
inline Knee find_knee(const SystemConfig& cfg, const AccessPolicy& policy, const SicProfile& profile,
                      const std::vector<double>& S_grid) {
  if (S_grid.size() < 3) throw std::invalid_argument("find_knee: need >= 3 grid points");
  auto product = [&](double S) {
    const auto r = evaluate_analytic(cfg, policy, profile, 1.0 / S);
    return r.E_H * r.E_bar;
  };
  std::size_t best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < S_grid.size(); ++i) {
    const double v = product(S_grid[i]);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  const double lo = std::log(S_grid[best > 0 ? best - 1 : 0]);
  const double hi = std::log(S_grid[std::min(best + 1, S_grid.size() - 1)]);
  const double ls = numeric::golden_max([&](double x) { return -product(std::exp(x)); }, lo, hi, 1e-6);
  double S = std::exp(ls);
  if (product(S) > best_v) S = S_grid[best];
  const auto r = evaluate_analytic(cfg, policy, profile, 1.0 / S);
  return {S, r.E_H, r.E_bar};
}

struct CellComparison {
  double S_ms = 0.0;
  std::string metric;
  double analytic = 0.0;
  double simulated = 0.0;
  double ci = 0.0;
  double rel_error = 0.0;
  bool in_ci = false;
  bool agrees = false;  // in_ci or within the relative tolerance
};

struct ComparisonSummary {
  std::vector<CellComparison> cells;
  std::size_t agreeing = 0;
  double fraction() const { return cells.empty() ? 0.0 : static_cast<double>(agreeing) / static_cast<double>(cells.size()); }
  double fraction_in_ci() const {
    std::size_t k = 0;
    for (const auto& c : cells) k += c.in_ci;
    return cells.empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(cells.size());
  }
};

/// Per (metric, S) relative error and CI containment of the analytic value
/// in the simulated interval. Rows are matched by S.
inline ComparisonSummary compare_report(const std::vector<SweepRow>& analytic, const std::vector<SweepRow>& simulated,
                                        double rel_tol = 0.05) {
  if (analytic.size() != simulated.size()) throw std::invalid_argument("compare: S grids differ in length");
  struct M {
    const char* name;
    double SweepRow::*v;
    double SweepRow::*ci;
  };
  const M metrics[] = {{"P_s", &SweepRow::P_s, &SweepRow::P_s_ci},
                       {"cbr", &SweepRow::cbr, &SweepRow::cbr_ci},
                       {"ED_ms", &SweepRow::ED_ms, &SweepRow::ED_ms_ci},
                       {"EH_ms", &SweepRow::EH_ms, &SweepRow::EH_ms_ci},
                       {"theta_norm", &SweepRow::theta_norm, &SweepRow::theta_norm_ci}};
  ComparisonSummary out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const auto& a = analytic[i];
    const auto& s = simulated[i];
    if (std::abs(a.S_ms - s.S_ms) > 1e-9 * std::max(1.0, a.S_ms)) throw std::invalid_argument("compare: S grids differ");
    for (const auto& m : metrics) {
      CellComparison c;
      c.S_ms = a.S_ms;
      c.metric = m.name;
      c.analytic = a.*m.v;
      c.simulated = s.*m.v;
      c.ci = std::isnan(s.*m.ci) ? 0.0 : s.*m.ci;
      const double diff = std::abs(c.analytic - c.simulated);
      c.rel_error = c.simulated != 0.0 ? diff / std::abs(c.simulated) : (diff == 0.0 ? 0.0 : INFINITY);
      c.in_ci = diff <= c.ci;
      c.agrees = c.in_ci || c.rel_error <= rel_tol;
      out.agreeing += c.agrees;
      out.cells.push_back(std::move(c));
    }
  }
  return out;
}

struct SweepResult {
  std::vector<SweepRow> analytic;
  std::vector<SweepRow> simulated;
  std::vector<MetricsReport> reports;
  Knee knee;
  CriticalRate critical;
  double coverage_R = 0.0;
};

inline std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  return seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index) + 1;
}

/// Runs the sweep in memory. Analytic points are evaluated concurrently;
/// simulation points run one after another with their replications in
/// parallel.
inline SweepResult run_sweep(const SystemConfig& cfg, const AccessPolicy& policy, const SicProfile& profile,
                             const SweepSpec& spec) {
  spec.validate();
  SweepResult res;
  res.coverage_R = coverage_radius(cfg);
  if (policy.a_gamma > 0.0) res.critical = critical_rate(policy.a_D, policy.a_gamma, cfg);
  if (spec.mode != SweepMode::simulate) {
    res.reports.resize(spec.S_grid.size());
    parallel_for(spec.S_grid.size(),
                 [&](std::size_t i) { res.reports[i] = evaluate_analytic(cfg, policy, profile, 1.0 / spec.S_grid[i]); });
    for (const auto& r : res.reports) res.analytic.push_back(analytic_row(r));
    if (spec.S_grid.size() >= 3) res.knee = find_knee(cfg, policy, profile, spec.S_grid);
  }
  if (spec.mode != SweepMode::analytic) {
    for (std::size_t i = 0; i < spec.S_grid.size(); ++i) {
      SystemConfig point = cfg;
      point.S_s = spec.S_grid[i];
      SimOptions opt;
      opt.horizon_slots = spec.horizon_slots;
      opt.coverage_R = res.coverage_R;
      const auto reps = run_replications(point, policy, point_seed(spec.seed, i), spec.replications, opt);
      res.simulated.push_back(simulated_row(point.S_s, estimate_metrics(reps, spec.confidence)));
    }
  }
  return res;
}

inline nlohmann::json sweep_summary_json(const SweepResult& res, const AccessPolicy& policy) {
  nlohmann::json j;
  j["schema"] = kSweepSchema;
  j["policy"] = {{"kind", to_string(policy.kind)},
                 {"k_c", policy.k_c},
                 {"a_gamma", policy.a_gamma},
                 {"b_gamma", policy.b_gamma},
                 {"a_D", policy.a_D}};
  j["critical"] = {{"U_inf_bps_per_Hz", res.critical.U_inf},
                   {"lambda_inf_per_s", res.critical.lambda_inf},
                   {"S_inf_ms", res.critical.S_inf * 1e3}};
  j["coverage_R_m"] = res.coverage_R;
  if (!res.analytic.empty()) {
    j["knee"] = {{"S_ms", res.knee.S * 1e3}, {"EH_ms", res.knee.E_H * 1e3}, {"Ebar_mJ", res.knee.E_bar * 1e3}};
    auto& pairs = j["tradeoff"] = nlohmann::json::array();
    for (const auto& r : res.analytic) pairs.push_back({{"S_ms", r.S_ms}, {"EH_ms", r.EH_ms}, {"Ebar_mJ", r.Ebar_mJ}});
  }
  if (!res.analytic.empty() && !res.simulated.empty()) {
    const auto cmp = compare_report(res.analytic, res.simulated);
    j["agreement_fraction"] = cmp.fraction();
    j["ci_containment_fraction"] = cmp.fraction_in_ci();
    nlohmann::json errs = nlohmann::json::object();
    for (const auto& c : cmp.cells) {
      auto& e = errs[c.metric];
      if (e.is_null()) e = nlohmann::json::array();
      // JSON has no NaN/inf; non-finite errors become null.
      if (std::isfinite(c.rel_error))
        e.push_back({{"S_ms", c.S_ms}, {"rel_error", c.rel_error}, {"in_ci", c.in_ci}});
      else
        e.push_back({{"S_ms", c.S_ms}, {"rel_error", nullptr}, {"in_ci", c.in_ci}});
    }
    j["relative_errors"] = errs;
  }
  return j;
}

/// Writes sweep.csv and summary.json into out_dir.
inline void write_sweep_outputs(const std::filesystem::path& out_dir, const SweepResult& res,
                                const AccessPolicy& policy) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < std::max(res.analytic.size(), res.simulated.size()); ++i) {
    if (i < res.analytic.size()) rows.push_back(res.analytic[i]);
    if (i < res.simulated.size()) rows.push_back(res.simulated[i]);
  }
  std::ofstream csv(out_dir / "sweep.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out_dir / "sweep.csv").string());
  write_sweep_csv(csv, rows);
  std::ofstream js(out_dir / "summary.json");
  if (!js) throw std::runtime_error("cannot write " + (out_dir / "summary.json").string());
  js << sweep_summary_json(res, policy).dump(2) << '\n';
}

/// Splits CSV rows into analytic and simulated lists.
inline std::pair<std::vector<SweepRow>, std::vector<SweepRow>> split_rows(const std::vector<SweepRow>& rows) {
  std::pair<std::vector<SweepRow>, std::vector<SweepRow>> out;
  for (const auto& r : rows) {
    if (r.mode == "analytic")
      out.first.push_back(r);
    else if (r.mode == "simulate")
      out.second.push_back(r);
    else
      throw std::invalid_argument("unknown row mode '" + r.mode + "'");
  }
  return out;
}

}  // namespace sicaoi

#endif  // SICAOI_HARNESS_HPP
