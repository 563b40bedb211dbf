// sfree: batch front end for the library.
//
//   sfree sample --kind GUE --n 100 --seed 7:0 --out a.sfmx
//   sfree spectrum a.sfmx [--cdf cdf.csv] [--quantiles q.csv --grid 2048]
//   sfree convolve --mu bernoulli --nu bernoulli --op add [--t 0.5] [--out measure.txt] [--compare arcsine]
//   sfree norm-oracle --poly "x1 + x2 + x3" [--ensemble HaarUnitary]
//   sfree experiment run config.ini [--output prefix]
//   sfree verify prefix.manifest.json
//
// Exit codes: 0 success (experiment: verdict pass; verify: CSV digest and verdict reproduced),
// 1 verdict fail or mismatch, 2 bad input or no analytic oracle.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "sfree/ensembles/ensembles.hpp"
#include "sfree/freelimit/convolution.hpp"
#include "sfree/harness/experiments.hpp"
#include "sfree/io/formats.hpp"
#include "sfree/ncalg/text.hpp"
#include "sfree/spectral/cdf.hpp"
#include "sfree/spectral/decomposition.hpp"
#include "sfree/version.hpp"

using namespace sfree;

namespace {

ensembles::Seed parse_seed(const std::string& s) {
  const auto colon = s.find(':');
  const auto u64 = [&](const std::string& t) {
    std::size_t used = 0;
    const auto v = std::stoull(t, &used, 0);
    if (used != t.size()) throw std::invalid_argument("bad seed: " + s);
    return static_cast<std::uint64_t>(v);
  };
  if (colon == std::string::npos) return {u64(s), 0};
  return {u64(s.substr(0, colon)), u64(s.substr(colon + 1))};
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string flag_names(MatrixFlags f) {
  std::string out;
  if (f.has(MatrixFlag::hermitian)) out += " hermitian";
  if (f.has(MatrixFlag::unitary)) out += " unitary";
  if (f.has(MatrixFlag::selfdual)) out += " selfdual";
  return out.empty() ? " none" : out;
}

struct SampleArgs {
  std::string kind = "GUE";
  Eigen::Index n = 0;
  std::string seed = "0:0";
  std::string data;
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  ensembles::EnsembleSpec spec{ensembles::parse_ensemble_kind(a.kind), a.n, std::nullopt};
  if (spec.kind == ensembles::EnsembleKind::ConjugatedDiagonal) {
    if (a.data.empty()) throw std::invalid_argument("ConjugatedDiagonal needs --data <measure spec>");
    spec.diagonal_data = harness::as_complex(harness::quantile_diagonal(harness::parse_measure_spec(a.data), a.n));
  }
  const auto m = ensembles::sample(spec, parse_seed(a.seed));
  io::write_matrix(a.out, m);
  std::cout << "wrote " << a.out << ": " << m.dimension() << "x" << m.dimension() << ", flags" << flag_names(m.flags())
            << "\n";
  return 0;
}

struct SpectrumArgs {
  std::string in;
  std::string cdf;
  std::string quantiles;
  std::size_t grid = spectral::kDefaultQuantileGrid;
};

int cmd_spectrum(const SpectrumArgs& a) {
  const auto m = io::read_matrix(a.in);
  std::vector<double> values;
  if (m.is(MatrixFlag::hermitian)) {
    const RVector ev = spectral::hermitian_eigenvalues(m);
    values.assign(ev.data(), ev.data() + ev.size());
  } else if (m.is(MatrixFlag::unitary)) {
    values = spectral::unitary_arguments(m);
  } else {
    throw std::invalid_argument("spectrum: matrix is neither hermitian nor unitary");
  }
  const auto f = spectral::empirical_cdf(values);
  if (!a.cdf.empty()) {
    std::ofstream out(a.cdf);
    io::write_step_csv(out, f);
  }
  if (!a.quantiles.empty()) {
    std::ofstream out(a.quantiles);
    io::write_quantile_csv(out, spectral::QuantileMap::from_step(f, a.grid));
  }
  if (a.cdf.empty() && a.quantiles.empty()) {
    for (double v : values) std::cout << real(v) << "\n";
  }
  return 0;
}

struct ConvolveArgs {
  std::string mu;
  std::string nu;
  std::string op = "add";
  double t = 0.5;
  std::size_t grid = freelimit::kDefaultGridSize;
  std::string out;
  std::string compare;
};

int cmd_convolve(const ConvolveArgs& a) {
  const auto mu = harness::parse_measure_spec(a.mu);
  freelimit::ConvolutionOptions opt;
  opt.grid_size = a.grid;
  freelimit::CompactMeasure result;
  if (a.op == "add" || a.op == "mult") {
    if (a.nu.empty()) throw std::invalid_argument("convolve: --nu is required for add and mult");
    const auto nu = harness::parse_measure_spec(a.nu);
    result = a.op == "add" ? freelimit::free_add_convolve(mu, nu, opt) : freelimit::free_mult_convolve(mu, nu, opt);
  } else if (a.op == "compress") {
    result = freelimit::free_compression(mu, a.t, opt);
  } else {
    throw std::invalid_argument("convolve: --op must be add, mult or compress");
  }
  if (!a.out.empty()) io::write_measure(a.out, result);
  std::cout << "support " << io::support_to_json(freelimit::measure_support(result)) << "\n";
  std::cout << "mean " << real(result.mean()) << "\nvariance " << real(result.variance()) << "\n";
  for (const auto& at : result.atoms()) std::cout << "atom " << real(at.location) << " " << real(at.mass) << "\n";
  if (!a.compare.empty()) {
    std::cout << "kolmogorov " << real(freelimit::kolmogorov_distance(result, harness::parse_measure_spec(a.compare))) << "\n";
  }
  return 0;
}

int cmd_norm_oracle(const std::string& poly, const std::string& ensemble) {
  const auto p = ncalg::parse_polynomial(poly);
  const auto o = harness::analytic_norm_oracle(p, ensembles::parse_ensemble_kind(ensemble));
  std::cout << real(o.value) << " (" << o.formula << ")\n";
  return 0;
}

int cmd_experiment_run(const std::string& path, const std::string& output) {
  auto c = harness::read_config(path);
  if (!output.empty()) c.output_path = output;
  const auto rep = harness::run_experiment(c);
  std::cout << harness::format_report(rep);
  if (!c.output_path.empty()) {
    const auto files = harness::emit_report(rep, c.output_path);
    std::cout << "wrote " << files.csv.string() << ", " << files.timing.string() << ", " << files.manifest.string() << "\n";
  }
  return rep.verdict == harness::Verdict::pass ? 0 : 1;
}

int cmd_verify(const std::string& manifest) {
  const auto v = harness::verify_manifest(manifest);
  std::cout << "digest  expected " << v.expected_digest << " actual " << v.actual_digest
            << (v.digest_match ? " ok" : " MISMATCH") << "\n";
  std::cout << "verdict expected " << v.expected_verdict << " actual " << v.actual_verdict
            << (v.verdict_match ? " ok" : " MISMATCH") << "\n";
  return v.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sfree: random matrix sampling, free convolutions and strong convergence experiments"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample a random matrix to .sfmx (binary) or CSV");
  sample->add_option("--kind", sa.kind, "GUE, GOE, GSE, HaarUnitary, HaarOrthogonal, HaarSymplectic, Permutation, ConjugatedDiagonal");
  sample->add_option("--n", sa.n, "Stored dimension")->required();
  sample->add_option("--seed", sa.seed, "master[:stream]");
  sample->add_option("--data", sa.data, "Measure spec for ConjugatedDiagonal eigenvalues");
  sample->add_option("--out", sa.out, "Output path")->required();

  SpectrumArgs sp;
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues (hermitian) or arguments in [0, 2 pi) (unitary)");
  spectrum->add_option("matrix", sp.in, "Matrix file")->required();
  spectrum->add_option("--cdf", sp.cdf, "Write the empirical CDF as CSV");
  spectrum->add_option("--quantiles", sp.quantiles, "Write the quantile map as CSV");
  spectrum->add_option("--grid", sp.grid, "Quantile grid size");

  ConvolveArgs ca;
  auto* convolve = app.add_subcommand("convolve", "Free additive or multiplicative convolution, or free compression");
  convolve->add_option("--mu", ca.mu, "Measure spec")->required();
  convolve->add_option("--nu", ca.nu, "Measure spec");
  convolve->add_option("--op", ca.op, "add, mult or compress");
  convolve->add_option("--t", ca.t, "Compression fraction");
  convolve->add_option("--grid", ca.grid, "Output grid size");
  convolve->add_option("--out", ca.out, "Write the result as a measure file");
  convolve->add_option("--compare", ca.compare, "Measure spec to report the Kolmogorov distance against");

  std::string poly;
  std::string ensemble = "HaarUnitary";
  auto* oracle = app.add_subcommand("norm-oracle", "Closed-form limit norm of a polynomial");
  oracle->add_option("--poly", poly, "Polynomial text, e.g. \"x1 + x2 + x3\"")->required();
  oracle->add_option("--ensemble", ensemble, "Ensemble of the letters");

  std::string config_path;
  std::string output;
  auto* experiment = app.add_subcommand("experiment", "Convergence experiments");
  experiment->require_subcommand(1);
  auto* run = experiment->add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "INI config")->required();
  run->add_option("--output", output, "Output prefix, overrides [experiment] output");

  std::string manifest;
  auto* verify = app.add_subcommand("verify", "Re-run a manifest and compare the trial CSV digest");
  verify->add_option("manifest", manifest, "Manifest JSON")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sample) return cmd_sample(sa);
    if (*spectrum) return cmd_spectrum(sp);
    if (*convolve) return cmd_convolve(ca);
    if (*oracle) return cmd_norm_oracle(poly, ensemble);
    if (*run) return cmd_experiment_run(config_path, output);
    if (*verify) return cmd_verify(manifest);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
