#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "sfree/ensembles/rng.hpp"
#include "sfree/harness/config.hpp"
#include "sfree/version.hpp"

// Trial CSV columns, in order:
//   dimension, seed_master, seed_stream, trial, statistic, measured, oracle, deviation, threshold, pass
// oracle is empty when no analytic value exists; pass is 1 or 0; reals use 17 significant digits.
// Wall times go to a sidecar <prefix>.timing.csv so the trial CSV stays bit-reproducible.

namespace sfree::harness {

/// How the records of one statistic at one dimension combine into a pass/fail.
///   median      median deviation <= threshold
///   all         every record passes
///   rate        fraction of passing records >= required_rate
///   mean_zscore |mean(measured) - oracle| / standard error <= threshold
enum class Aggregate { median, all, rate, mean_zscore };

inline std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::median: return "median";
    case Aggregate::all: return "all";
    case Aggregate::rate: return "rate";
    case Aggregate::mean_zscore: return "mean_zscore";
  }
  return "?";
}

inline Aggregate parse_aggregate(std::string_view s) {
  for (auto a : {Aggregate::median, Aggregate::all, Aggregate::rate, Aggregate::mean_zscore}) {
    if (s == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown aggregate: " + std::string(s));
}

struct StatisticRule {
  std::string name;
  Aggregate aggregate = Aggregate::median;
  bool gating = true;  // counts toward the verdict
  bool trend = false;  // median |deviation| must strictly decrease along the grid
  double required_rate = 1.0;
};

struct TrialRecord {
  Eigen::Index dimension = 0;
  ensembles::Seed seed;
  std::size_t trial = 0;
  std::string statistic;
  double measured = 0.0;
  std::optional<double> oracle;
  double deviation = 0.0;
  double threshold = 0.0;
  bool pass = false;
  double wall_seconds = 0.0;
};

struct StatisticSummary {
  std::string statistic;
  Eigen::Index dimension = 0;
  std::size_t count = 0;
  double median = 0.0;  // of deviation
  double q1 = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  double value = 0.0;  // the aggregate named by the rule
  bool pass = false;
};

enum class Verdict { pass, fail, skipped };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::skipped: return "skipped";
  }
  return "?";
}

struct ConvergenceReport {
  ExperimentConfig config;
  std::vector<StatisticRule> rules;
  std::vector<TrialRecord> records;
  std::vector<StatisticSummary> summaries;
  std::map<std::string, double> slopes;  // least-squares slope of log median |deviation| against log N
  bool trend_ok = true;
  Verdict verdict = Verdict::fail;
  std::vector<std::string> notices;
};

namespace report_detail {

/// Linear-interpolated sample quantile of sorted data, q in [0, 1].
inline double sorted_quantile(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return i + 1 < v.size() ? (1.0 - w) * v[i] + w * v[i + 1] : v[i];
}

inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace report_detail

/// Summary of the records of `rule` at one dimension.
inline StatisticSummary summarize(const StatisticRule& rule, Eigen::Index n, const std::vector<TrialRecord>& recs) {
  StatisticSummary s;
  s.statistic = rule.name;
  s.dimension = n;
  s.count = recs.size();
  if (recs.empty()) return s;
  std::vector<double> dev;
  double sum = 0.0;
  std::size_t passed = 0;
  for (const auto& r : recs) {
    dev.push_back(r.deviation);
    sum += r.deviation;
    passed += r.pass ? 1 : 0;
  }
  std::sort(dev.begin(), dev.end());
  s.median = report_detail::sorted_quantile(dev, 0.5);
  s.q1 = report_detail::sorted_quantile(dev, 0.25);
  s.q3 = report_detail::sorted_quantile(dev, 0.75);
  s.mean = sum / static_cast<double>(dev.size());
  const double threshold = recs.front().threshold;
  switch (rule.aggregate) {
    case Aggregate::median:
      s.value = s.median;
      s.pass = s.value <= threshold;
      break;
    case Aggregate::all:
      s.value = dev.back();
      s.pass = passed == recs.size();
      break;
    case Aggregate::rate:
      s.value = static_cast<double>(passed) / static_cast<double>(recs.size());
      s.pass = s.value >= rule.required_rate;
      break;
    case Aggregate::mean_zscore: {
      double ss = 0.0;
      for (double d : dev) ss += (d - s.mean) * (d - s.mean);
      const double se = recs.size() > 1 ? std::sqrt(ss / static_cast<double>(recs.size() - 1) / static_cast<double>(recs.size())) : 0.0;
      s.value = se > 0.0 ? std::abs(s.mean) / se : (s.mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      s.pass = s.value <= threshold;
      break;
    }
  }
  return s;
}

/// Canonical record order: dimension, seed, trial, rule order.
inline void sort_records(std::vector<TrialRecord>& records, const std::vector<StatisticRule>& rules) {
  const auto rank = [&](const std::string& name) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (rules[i].name == name) return i;
    }
    return rules.size();
  };
  std::stable_sort(records.begin(), records.end(), [&](const TrialRecord& a, const TrialRecord& b) {
    return std::make_tuple(a.dimension, a.trial, a.seed.master, a.seed.stream_index, rank(a.statistic), a.statistic) <
           std::make_tuple(b.dimension, b.trial, b.seed.master, b.seed.stream_index, rank(b.statistic), b.statistic);
  });
}

/// Pure fold over completed trials; the result does not depend on record order.
inline ConvergenceReport build_report(ExperimentConfig config, std::vector<StatisticRule> rules,
                                      std::vector<TrialRecord> records, std::vector<std::string> notices = {}) {
  ConvergenceReport rep;
  sort_records(records, rules);
  std::vector<Eigen::Index> dims = config.n_grid;
  for (const auto& r : records) {
    if (std::find(dims.begin(), dims.end(), r.dimension) == dims.end()) dims.push_back(r.dimension);
  }
  std::sort(dims.begin(), dims.end());

  bool verdict = true;
  bool any = false;
  for (const auto& rule : rules) {
    std::vector<double> log_n;
    std::vector<double> log_dev;
    std::vector<double> abs_medians;
    const StatisticSummary* last = nullptr;
    for (Eigen::Index n : dims) {
      std::vector<TrialRecord> recs;
      for (const auto& r : records) {
        if (r.dimension == n && r.statistic == rule.name) recs.push_back(r);
      }
      if (recs.empty()) continue;
      rep.summaries.push_back(summarize(rule, n, recs));
      last = &rep.summaries.back();
      std::vector<double> a;
      for (const auto& r : recs) a.push_back(std::abs(r.deviation));
      std::sort(a.begin(), a.end());
      const double m = report_detail::sorted_quantile(a, 0.5);
      abs_medians.push_back(m);
      if (m > 0.0) {
        log_n.push_back(std::log(static_cast<double>(n)));
        log_dev.push_back(std::log(m));
      }
    }
    if (log_n.size() >= 2) {
      const double k = static_cast<double>(log_n.size());
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < log_n.size(); ++i) {
        mx += log_n[i] / k;
        my += log_dev[i] / k;
      }
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < log_n.size(); ++i) {
        sxy += (log_n[i] - mx) * (log_dev[i] - my);
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
      }
      rep.slopes[rule.name] = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    } else {
      rep.slopes[rule.name] = std::numeric_limits<double>::quiet_NaN();
    }
    if (rule.trend) {
      for (std::size_t i = 1; i < abs_medians.size(); ++i) {
        if (!(abs_medians[i] < abs_medians[i - 1])) rep.trend_ok = false;
      }
    }
    if (rule.gating) {
      // Verdict is taken at the largest dimension of the grid.
      const bool at_top = last != nullptr && last->dimension == dims.back();
      if (last != nullptr) any = true;
      verdict = verdict && at_top && last->pass;
    }
  }
  rep.verdict = !any && !notices.empty() ? Verdict::skipped : (verdict && any ? Verdict::pass : Verdict::fail);
  rep.config = std::move(config);
  rep.rules = std::move(rules);
  rep.records = std::move(records);
  rep.notices = std::move(notices);
  return rep;
}

// ---- Serialization -----------------------------------------------------------------------------

inline constexpr const char* kTrialCsvHeader =
    "dimension,seed_master,seed_stream,trial,statistic,measured,oracle,deviation,threshold,pass";

inline std::string trial_csv(const std::vector<TrialRecord>& records) {
  std::string out = std::string(kTrialCsvHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.dimension) + ',' + std::to_string(r.seed.master) + ',' + std::to_string(r.seed.stream_index) +
           ',' + std::to_string(r.trial) + ',' + r.statistic + ',' + report_detail::real(r.measured) + ',' +
           (r.oracle ? report_detail::real(*r.oracle) : std::string()) + ',' + report_detail::real(r.deviation) + ',' +
           report_detail::real(r.threshold) + ',' + (r.pass ? "1" : "0") + '\n';
  }
  return out;
}

inline std::vector<TrialRecord> parse_trial_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrialCsvHeader) throw std::invalid_argument("trial CSV: bad header");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw std::invalid_argument("trial CSV: rows need ten columns");
    TrialRecord r;
    r.dimension = static_cast<Eigen::Index>(std::stoll(f[0]));
    r.seed = {std::stoull(f[1]), std::stoull(f[2])};
    r.trial = std::stoull(f[3]);
    r.statistic = f[4];
    r.measured = std::stod(f[5]);
    if (!f[6].empty()) r.oracle = std::stod(f[6]);
    r.deviation = std::stod(f[7]);
    r.threshold = std::stod(f[8]);
    r.pass = f[9] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string timing_csv(const std::vector<TrialRecord>& records) {
  std::string out = "dimension,seed_master,seed_stream,trial,statistic,wall_seconds\n";
  for (const auto& r : records) {
    out += std::to_string(r.dimension) + ',' + std::to_string(r.seed.master) + ',' + std::to_string(r.seed.stream_index) +
           ',' + std::to_string(r.trial) + ',' + r.statistic + ',' + report_detail::real(r.wall_seconds) + '\n';
  }
  return out;
}

/// FNV-1a 64-bit digest as "fnv1a64:" plus 16 hex digits.
inline std::string digest(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json manifest_json(const ConvergenceReport& rep, const std::string& csv_name) {
  nlohmann::json m;
  m["format"] = "sfree-manifest-1";
  m["code_version"] = kVersion;
  m["experiment"] = to_string(rep.config.experiment);
  m["config"] = rep.config.source;
  m["seeds"] = nlohmann::json::array();
  for (const auto& s : rep.config.seeds) m["seeds"].push_back({s.master, s.stream_index});
  m["n_grid"] = rep.config.n_grid;
  m["csv"] = csv_name;
  m["csv_digest"] = digest(trial_csv(rep.records));
  m["verdict"] = to_string(rep.verdict);
  m["trend_ok"] = rep.trend_ok;
  m["statistics"] = nlohmann::json::array();
  for (const auto& r : rep.rules) {
    m["statistics"].push_back({{"name", r.name},
                               {"aggregate", to_string(r.aggregate)},
                               {"gating", r.gating},
                               {"trend", r.trend},
                               {"required_rate", r.required_rate}});
  }
  m["summaries"] = nlohmann::json::array();
  for (const auto& s : rep.summaries) {
    m["summaries"].push_back({{"statistic", s.statistic},
                              {"dimension", s.dimension},
                              {"count", s.count},
                              {"median", json_number(s.median)},
                              {"q1", json_number(s.q1)},
                              {"q3", json_number(s.q3)},
                              {"mean", json_number(s.mean)},
                              {"value", json_number(s.value)},
                              {"pass", s.pass}});
  }
  m["slopes"] = nlohmann::json::object();
  for (const auto& [k, v] : rep.slopes) m["slopes"][k] = json_number(v);
  m["notices"] = rep.notices;
  return m;
}

/// Rules as stored in a manifest.
inline std::vector<StatisticRule> rules_from_manifest(const nlohmann::json& m) {
  std::vector<StatisticRule> rules;
  for (const auto& s : m.at("statistics")) {
    rules.push_back({s.at("name").get<std::string>(), parse_aggregate(s.at("aggregate").get<std::string>()),
                     s.at("gating").get<bool>(), s.at("trend").get<bool>(), s.at("required_rate").get<double>()});
  }
  return rules;
}

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path timing;
  std::filesystem::path manifest;
};

/// Writes <prefix>.csv, <prefix>.timing.csv and <prefix>.manifest.json.
inline ReportFiles emit_report(const ConvergenceReport& rep, const std::filesystem::path& prefix) {
  require(!prefix.empty(), "emit_report: empty output path");
  ReportFiles files{prefix.string() + ".csv", prefix.string() + ".timing.csv", prefix.string() + ".manifest.json"};
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  const auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + p.string());
  };
  write(files.csv, trial_csv(rep.records));
  write(files.timing, timing_csv(rep.records));
  write(files.manifest, manifest_json(rep, files.csv.filename().string()).dump(2) + "\n");
  return files;
}

/// Human-readable summary table.
inline std::string format_report(const ConvergenceReport& rep) {
  std::ostringstream out;
  out << "experiment " << to_string(rep.config.experiment) << "\n";
  for (const auto& n : rep.notices) out << "notice: " << n << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %7s %5s %12s %12s %12s %12s %5s\n", "statistic", "N", "count", "median", "q1", "q3",
                "aggregate", "pass");
  out << buf;
  for (const auto& s : rep.summaries) {
    std::snprintf(buf, sizeof buf, "%-14s %7lld %5zu %12.4g %12.4g %12.4g %12.4g %5s\n", s.statistic.c_str(),
                  static_cast<long long>(s.dimension), s.count, s.median, s.q1, s.q3, s.value, s.pass ? "yes" : "no");
    out << buf;
  }
  for (const auto& [k, v] : rep.slopes) {
    if (std::isfinite(v)) out << "slope " << k << " " << v << "\n";
  }
  out << "trend " << (rep.trend_ok ? "ok" : "not monotone") << "\n";
  out << "verdict " << to_string(rep.verdict) << "\n";
  return out.str();
}

}  // namespace sfree::harness
