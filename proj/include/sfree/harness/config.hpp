#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sfree/ensembles/ensembles.hpp"
#include "sfree/ncalg/polynomial.hpp"
#include "sfree/ncalg/text.hpp"

// Experiment config, INI syntax (comments on their own lines, starting with ';' or '#'):
//
//   [experiment]
//   kind      = norm_convergence
//   tolerance = 0.1
//   epsilon   = 0.1
//   pass_rate = 0.95
//   output    = results/pisier
//
//   [grid]
//   n = 100, 300, 1000
//
//   [seeds]
//   master  = 2024
//   count   = 10
//   streams = 3 7 11
//
//   [ensemble]
//   kind    = HaarUnitary
//   letters = 3
//
//   [polynomial]
//   text = x1 + x2 + x3
//
//   [spectra]
//   a        = semicircle
//   b        = bernoulli
//   y        = semicircle
//   branch   = add
//   fraction = 0.5
//
//   [words]
//   degree      = 2
//   holomorphic = false
//   alpha       = random
//
// kind: one of ExperimentKind. tolerance: threshold on the gating statistic. epsilon: support
// margin. pass_rate: required fraction for rate statistics. output: prefix of the .csv,
// .timing.csv and .manifest.json files. n: strictly ascending dimensions. count gives streams
// 0 .. count-1; streams gives an explicit list instead. ensemble kind: GUE, GOE, GSE,
// HaarUnitary, HaarOrthogonal, HaarSymplectic or Permutation. letters: alphabet size when no
// polynomial is given. a, b, y: measure specs; y1, y2, ... give one spec per letter. branch: add
// or mult. alpha: ones, random or unit.

namespace sfree::harness {

enum class ExperimentKind {
  norm_convergence,
  trace_convergence,
  sum_product_spectrum,
  compression_spectrum,
  haagerup_check,
  rdiagonal_check,
  permutation_contrast,
  coupling_identity,
  haar_invariance
};

inline constexpr ExperimentKind kAllExperiments[] = {
    ExperimentKind::norm_convergence,     ExperimentKind::trace_convergence, ExperimentKind::sum_product_spectrum,
    ExperimentKind::compression_spectrum, ExperimentKind::haagerup_check,    ExperimentKind::rdiagonal_check,
    ExperimentKind::permutation_contrast, ExperimentKind::coupling_identity, ExperimentKind::haar_invariance};

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::norm_convergence: return "norm_convergence";
    case ExperimentKind::trace_convergence: return "trace_convergence";
    case ExperimentKind::sum_product_spectrum: return "sum_product_spectrum";
    case ExperimentKind::compression_spectrum: return "compression_spectrum";
    case ExperimentKind::haagerup_check: return "haagerup_check";
    case ExperimentKind::rdiagonal_check: return "rdiagonal_check";
    case ExperimentKind::permutation_contrast: return "permutation_contrast";
    case ExperimentKind::coupling_identity: return "coupling_identity";
    case ExperimentKind::haar_invariance: return "haar_invariance";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : kAllExperiments) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown experiment kind: " + std::string(s));
}

enum class AlphaMode { ones, random, unit };

enum class Branch { add, mult };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::norm_convergence;
  ensembles::EnsembleKind ensemble = ensembles::EnsembleKind::HaarUnitary;
  int letters = 0;
  std::optional<ncalg::NcPolynomial> polynomial;
  std::string spectrum_a;
  std::string spectrum_b;
  std::vector<std::string> spectra_y;
  Branch branch = Branch::add;
  double fraction = 0.5;
  int degree = 1;
  bool holomorphic = false;
  AlphaMode alpha = AlphaMode::ones;
  std::vector<Eigen::Index> n_grid;
  std::vector<ensembles::Seed> seeds;
  double tolerance = 0.1;
  double epsilon = 0.1;
  double pass_rate = 0.95;
  std::string output_path;
  std::string source;  // INI text this config was read from, echoed in the manifest

  /// Alphabet size: from the polynomial when present, else `letters`.
  [[nodiscard]] int alphabet() const { return polynomial ? polynomial->alphabet_size() : letters; }

  void validate() const {
    require(!n_grid.empty(), "config: [grid] n must list at least one dimension");
    require(std::all_of(n_grid.begin(), n_grid.end(), [](Eigen::Index n) { return n >= 1; }),
            "config: dimensions must be positive");
    require(std::adjacent_find(n_grid.begin(), n_grid.end(), std::greater_equal<>()) == n_grid.end(),
            "config: [grid] n must be strictly ascending");
    require(!seeds.empty(), "config: [seeds] must give at least one seed");
    require(tolerance > 0.0, "config: tolerance must be > 0");
    require(epsilon > 0.0, "config: epsilon must be > 0");
    require(pass_rate > 0.0 && pass_rate <= 1.0, "config: pass_rate must lie in (0, 1]");
    require(fraction > 0.0 && fraction <= 1.0, "config: fraction must lie in (0, 1]");
    require(degree >= 1, "config: degree must be >= 1");
  }
};

namespace config_detail {

inline std::vector<std::string> tokens(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument("config: not a number: " + s);
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: not a boolean: " + s);
}

inline std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || s.front() == '-') throw std::invalid_argument("config: not an unsigned integer: " + s);
  return v;
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  const auto get = [&](const char* key) { return tree.get_optional<std::string>(pt::ptree::path_type(key, '/')); };

  ExperimentConfig c;
  c.source = text;
  const auto kind = get("experiment/kind");
  if (!kind) throw std::invalid_argument("config: [experiment] kind is required");
  c.experiment = parse_experiment_kind(*kind);
  if (auto v = get("experiment/tolerance")) c.tolerance = config_detail::parse_real(*v);
  if (auto v = get("experiment/epsilon")) c.epsilon = config_detail::parse_real(*v);
  if (auto v = get("experiment/pass_rate")) c.pass_rate = config_detail::parse_real(*v);
  if (auto v = get("experiment/output")) c.output_path = *v;

  if (auto v = get("grid/n")) {
    for (const auto& t : config_detail::tokens(*v)) c.n_grid.push_back(static_cast<Eigen::Index>(config_detail::parse_u64(t)));
  }

  const std::uint64_t master = get("seeds/master") ? config_detail::parse_u64(*get("seeds/master")) : 0;
  if (auto v = get("seeds/streams")) {
    for (const auto& t : config_detail::tokens(*v)) c.seeds.push_back({master, config_detail::parse_u64(t)});
  } else if (auto n = get("seeds/count")) {
    const auto count = config_detail::parse_u64(*n);
    for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back({master, i});
  }

  if (auto v = get("ensemble/kind")) c.ensemble = ensembles::parse_ensemble_kind(*v);
  if (auto v = get("ensemble/letters")) c.letters = static_cast<int>(config_detail::parse_u64(*v));
  if (auto v = get("polynomial/text")) c.polynomial = ncalg::parse_polynomial(*v);

  if (auto v = get("spectra/a")) c.spectrum_a = *v;
  if (auto v = get("spectra/b")) c.spectrum_b = *v;
  if (auto v = get("spectra/y")) c.spectra_y.push_back(*v);
  for (int j = 1;; ++j) {
    const auto v = get(("spectra/y" + std::to_string(j)).c_str());
    if (!v) break;
    c.spectra_y.push_back(*v);
  }
  if (auto v = get("spectra/branch")) {
    if (*v == "add") {
      c.branch = Branch::add;
    } else if (*v == "mult") {
      c.branch = Branch::mult;
    } else {
      throw std::invalid_argument("config: branch must be add or mult");
    }
  }
  if (auto v = get("spectra/fraction")) c.fraction = config_detail::parse_real(*v);

  if (auto v = get("words/degree")) c.degree = static_cast<int>(config_detail::parse_u64(*v));
  if (auto v = get("words/holomorphic")) c.holomorphic = config_detail::parse_bool(*v);
  if (auto v = get("words/alpha")) {
    if (*v == "ones") {
      c.alpha = AlphaMode::ones;
    } else if (*v == "random") {
      c.alpha = AlphaMode::random;
    } else if (*v == "unit") {
      c.alpha = AlphaMode::unit;
    } else {
      throw std::invalid_argument("config: alpha must be ones, random or unit");
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config(s.str());
}

}  // namespace sfree::harness
