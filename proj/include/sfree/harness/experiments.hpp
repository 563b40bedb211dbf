#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "sfree/ensembles/ensembles.hpp"
#include "sfree/freelimit/convolution.hpp"
#include "sfree/freelimit/oracles.hpp"
#include "sfree/harness/config.hpp"
#include "sfree/harness/measure_spec.hpp"
#include "sfree/harness/report.hpp"
#include "sfree/ncalg/polynomial.hpp"
#include "sfree/spectral/coupling.hpp"
#include "sfree/spectral/decomposition.hpp"

// Seeding: trial j at dimension N uses seeds[j].child(N). Inside a trial, letter i (1-based) is
// drawn from child(i); child(0) feeds auxiliary randomness (coefficients, shifts).

namespace sfree::harness {

using ensembles::EnsembleKind;
using ensembles::Seed;

// ---- Analytic norm oracle ------------------------------------------------------------------------

inline bool is_gaussian(EnsembleKind k) {
  return k == EnsembleKind::GUE || k == EnsembleKind::GOE || k == EnsembleKind::GSE;
}

inline bool is_haar(EnsembleKind k) {
  return k == EnsembleKind::HaarUnitary || k == EnsembleKind::HaarOrthogonal || k == EnsembleKind::HaarSymplectic;
}

struct NormOracle {
  double value = 0.0;
  std::string formula;
};

/// Limit of ||P(X_1, ..., X_p)|| when the closed forms apply, NoOracleError otherwise.
///
/// Gaussian letters: a_0 + sum_i c_i x_i with real scalars gives |a_0| + 2 (sum c_i^2)^{1/2}.
/// Haar letters, all terms of degree <= 1 and each letter used at most once (x_i or x_i^*):
///   scalar coefficients                      -> Akemann-Ostrand, a_0 counted as one more letter;
///   matrix coefficients, unitary, no a_0     -> Fell, 2 (m - 1)^{1/2} for m >= 2 letters;
///   matrix coefficients, hermitian           -> Lehner.
/// Haar letters with c sum_{i <= p} (x_i + x_i^*) over the whole alphabet -> Kesten, |c| 2 (2p - 1)^{1/2}.
inline NormOracle analytic_norm_oracle(const ncalg::NcPolynomial& p, EnsembleKind kind) {
  const Eigen::Index k = p.coefficient_dimension();
  if (p.is_zero()) return {0.0, "zero"};
  CMatrix a0 = CMatrix::Zero(k, k);
  std::map<int, std::vector<std::pair<bool, CMatrix>>> by_letter;
  for (const auto& [w, c] : p.terms()) {
    if (w.is_unit()) {
      a0 = c;
    } else if (w.degree() == 1) {
      by_letter[w.letters().front().index].emplace_back(w.letters().front().starred, c);
    } else {
      throw NoOracleError("no analytic oracle: polynomial has degree > 1");
    }
  }

  if (is_gaussian(kind)) {
    if (k != 1) throw NoOracleError("no analytic oracle: Gaussian letters need scalar coefficients");
    double ss = 0.0;
    for (const auto& [i, uses] : by_letter) {
      Complex c = 0.0;
      for (const auto& u : uses) c += u.second(0, 0);
      if (c.imag() != 0.0) throw NoOracleError("no analytic oracle: Gaussian combination is not self-adjoint");
      ss += c.real() * c.real();
    }
    if (a0(0, 0).imag() != 0.0) throw NoOracleError("no analytic oracle: constant term is not real");
    return {std::abs(a0(0, 0).real()) + 2.0 * std::sqrt(ss), "semicircle"};
  }
  if (!is_haar(kind)) throw NoOracleError("no analytic oracle for ensemble " + std::string(ensembles::to_string(kind)));

  const bool no_constant = (a0.array() == Complex(0.0)).all();
  const int alphabet = p.alphabet_size();
  if (no_constant && static_cast<int>(by_letter.size()) == alphabet && alphabet >= 1) {
    bool kesten = true;
    const CMatrix& ref = by_letter.begin()->second.front().second;
    for (const auto& [i, uses] : by_letter) {
      kesten = kesten && uses.size() == 2 && uses[0].first != uses[1].first && uses[0].second == ref &&
               uses[1].second == ref;
    }
    kesten = kesten && k == 1;
    if (kesten) return {std::abs(ref(0, 0)) * freelimit::kesten_norm(alphabet), "kesten"};
  }

  std::vector<CMatrix> coeffs;
  for (const auto& [i, uses] : by_letter) {
    if (uses.size() != 1) throw NoOracleError("no analytic oracle: letter x" + std::to_string(i) + " appears twice");
    coeffs.push_back(uses.front().second);
  }
  if (k == 1) {
    std::vector<Complex> a;
    if (!no_constant) a.push_back(a0(0, 0));
    for (const auto& c : coeffs) a.push_back(c(0, 0));
    return {freelimit::akemann_ostrand_norm(a), "akemann_ostrand"};
  }
  const bool all_unitary = std::all_of(coeffs.begin(), coeffs.end(), [](const CMatrix& c) { return unitary_residual(c) <= kUnitaryTolerance; });
  if (no_constant && all_unitary && !coeffs.empty()) {
    return {coeffs.size() == 1 ? 1.0 : freelimit::fell_norm(static_cast<int>(coeffs.size())), "fell"};
  }
  const bool all_hermitian = hermitian_residual(a0) <= kHermitianTolerance &&
                             std::all_of(coeffs.begin(), coeffs.end(), [](const CMatrix& c) { return hermitian_residual(c) <= kHermitianTolerance; });
  if (all_hermitian) {
    std::vector<CMatrix> all{(a0 + a0.adjoint()) * 0.5};
    for (const auto& c : coeffs) all.push_back((c + c.adjoint()) * 0.5);
    return {freelimit::lehner_norm(all), "lehner"};
  }
  throw NoOracleError("no analytic oracle: matrix coefficients are neither all unitary nor all hermitian");
}

// ---- Trial plumbing ----------------------------------------------------------------------------

namespace experiment_detail {

inline TrialRecord record(std::string statistic, double measured, std::optional<double> oracle, double deviation,
                          double threshold, bool pass) {
  TrialRecord r;
  r.statistic = std::move(statistic);
  r.measured = measured;
  r.oracle = oracle;
  r.deviation = deviation;
  r.threshold = threshold;
  r.pass = pass;
  return r;
}

/// Record passing iff deviation <= threshold.
inline TrialRecord bounded(std::string statistic, double measured, std::optional<double> oracle, double deviation,
                           double threshold) {
  return record(std::move(statistic), measured, oracle, deviation, threshold, deviation <= threshold);
}

using TrialFn = std::function<std::vector<TrialRecord>(Eigen::Index n, Seed trial_seed)>;

inline ConvergenceReport run_trials(const ExperimentConfig& c, std::vector<StatisticRule> rules, const TrialFn& trial,
                                    std::vector<std::string> notices = {}) {
  std::vector<TrialRecord> records;
  for (Eigen::Index n : c.n_grid) {
    for (std::size_t j = 0; j < c.seeds.size(); ++j) {
      const auto t0 = std::chrono::steady_clock::now();
      auto recs = trial(n, c.seeds[j].child(static_cast<std::uint64_t>(n)));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (auto& r : recs) {
        r.dimension = n;
        r.seed = c.seeds[j];
        r.trial = j;
        r.wall_seconds = secs;
        records.push_back(std::move(r));
      }
    }
  }
  return build_report(c, std::move(rules), std::move(records), std::move(notices));
}

inline std::vector<SquareMatrix> sample_letters(EnsembleKind kind, int p, Eigen::Index n, Seed s) {
  std::vector<SquareMatrix> x;
  for (int i = 1; i <= p; ++i) {
    x.push_back(ensembles::sample(ensembles::EnsembleSpec{kind, n, std::nullopt}, s.child(static_cast<std::uint64_t>(i))));
  }
  return x;
}

struct WordTerm {
  const std::vector<ncalg::StarLetter>* letters;
  Complex coeff;
};

inline CMatrix word_sum_from(const std::vector<WordTerm>& terms, std::size_t pos, const std::vector<SquareMatrix>& x,
                             Eigen::Index n) {
  CMatrix out = CMatrix::Zero(n, n);
  std::map<ncalg::StarLetter, std::vector<WordTerm>> groups;
  for (const auto& t : terms) {
    if (t.letters->size() == pos) {
      out.diagonal().array() += t.coeff;
    } else {
      groups[(*t.letters)[pos]].push_back(t);
    }
  }
  for (const auto& [l, g] : groups) {
    const CMatrix& m = x[static_cast<std::size_t>(l.index - 1)].entries();
    Complex scalar = 0.0;
    std::vector<WordTerm> longer;
    for (const auto& t : g) {
      if (t.letters->size() == pos + 1) {
        scalar += t.coeff;
      } else {
        longer.push_back(t);
      }
    }
    if (scalar != Complex(0.0)) {
      if (l.starred) {
        out += scalar * m.adjoint();
      } else {
        out += scalar * m;
      }
    }
    if (!longer.empty()) {
      const CMatrix inner = word_sum_from(longer, pos + 1, x, n);
      if (l.starred) {
        out.noalias() += m.adjoint() * inner;
      } else {
        out.noalias() += m * inner;
      }
    }
  }
  return out;
}

/// sum_w alpha_w w(x), sharing common prefixes.
inline CMatrix word_sum(const std::vector<ncalg::StarMonomial>& words, const std::vector<Complex>& alpha,
                        const std::vector<SquareMatrix>& x, Eigen::Index n) {
  std::vector<WordTerm> terms;
  for (std::size_t i = 0; i < words.size(); ++i) terms.push_back({&words[i].letters(), alpha[i]});
  return word_sum_from(terms, 0, x, n);
}

inline std::vector<Complex> make_alpha(AlphaMode mode, std::size_t count, Seed s) {
  std::vector<Complex> a(count, Complex(0.0));
  switch (mode) {
    case AlphaMode::ones:
      std::fill(a.begin(), a.end(), Complex(1.0));
      break;
    case AlphaMode::unit:
      if (!a.empty()) a.front() = 1.0;
      break;
    case AlphaMode::random: {
      ensembles::PhiloxEngine eng(s);
      for (auto& v : a) {
        const double re = eng.normal();
        v = Complex(re, eng.normal());
      }
      break;
    }
  }
  return a;
}

inline std::vector<double> eigenvalues_of(const SquareMatrix& m) {
  const RVector ev = spectral::hermitian_eigenvalues(m);
  return {ev.data(), ev.data() + ev.size()};
}

inline double support_excess(const std::vector<double>& ev, const spectral::SupportSet& s) {
  double d = 0.0;
  for (double x : ev) d = std::max(d, s.distance(x));
  return d;
}

inline void require_even_grid(const ExperimentConfig& c, EnsembleKind kind) {
  if (kind == EnsembleKind::GSE || kind == EnsembleKind::HaarSymplectic) {
    for (Eigen::Index n : c.n_grid) require(n % 2 == 0, "symplectic ensembles need even dimensions in [grid] n");
  }
}

inline EnsembleKind haar_kind_or_unitary(EnsembleKind k) { return is_haar(k) ? k : EnsembleKind::HaarUnitary; }

}  // namespace experiment_detail

// ---- Experiments -------------------------------------------------------------------------------

/// ||P(X)|| against analytic_norm_oracle; fails fast without an oracle.
inline ConvergenceReport run_norm_convergence(const ExperimentConfig& c) {
  using namespace experiment_detail;
  require(c.polynomial.has_value(), "norm_convergence: [polynomial] text is required");
  const auto& p = *c.polynomial;
  const NormOracle oracle = analytic_norm_oracle(p, c.ensemble);
  require_even_grid(c, c.ensemble);
  return run_trials(c, {{"norm", Aggregate::median, true, true}}, [&](Eigen::Index n, Seed s) {
    const auto x = sample_letters(c.ensemble, p.alphabet_size(), n, s);
    const double norm = spectral::operator_norm(ncalg::evaluate(p, x, n));
    return std::vector<TrialRecord>{bounded("norm", norm, oracle.value, std::abs(norm - oracle.value), c.tolerance)};
  });
}

/// tau_N(c w(U)) against c free_haar_trace(w); measured holds Re tau_N, deviation |tau_N - oracle|.
inline ConvergenceReport run_trace_convergence(const ExperimentConfig& c) {
  using namespace experiment_detail;
  require(c.polynomial.has_value(), "trace_convergence: [polynomial] text is required");
  const auto& p = *c.polynomial;
  require(p.coefficient_dimension() == 1, "trace_convergence: scalar coefficients only");
  require(p.terms().size() <= 1, "trace_convergence: polynomial must be a single word");
  const ncalg::StarMonomial w = p.is_zero() ? ncalg::StarMonomial() : p.terms().begin()->first;
  const Complex coeff = p.is_zero() ? Complex(0.0) : p.terms().begin()->second(0, 0);
  const Complex oracle = coeff * freelimit::free_haar_trace(w);
  const EnsembleKind kind = haar_kind_or_unitary(c.ensemble);
  require_even_grid(c, kind);
  const bool trend = oracle == Complex(0.0) && coeff != Complex(0.0);
  return run_trials(c, {{"trace", Aggregate::median, true, trend}}, [&](Eigen::Index n, Seed s) {
    const auto x = sample_letters(kind, p.alphabet_size(), n, s);
    const Complex tau = coeff * ncalg::evaluate_word(w, x, n).trace() / static_cast<double>(n);
    return std::vector<TrialRecord>{bounded("trace", tau.real(), oracle.real(), std::abs(tau - oracle), c.tolerance)};
  });
}

/// Spectrum of A + B or B^{1/2} A B^{1/2}, A = diag(quantiles of a), B = V diag(quantiles of b) V^*.
inline ConvergenceReport run_sum_product_spectrum(const ExperimentConfig& c) {
  using namespace experiment_detail;
  require(!c.spectrum_a.empty() && !c.spectrum_b.empty(), "sum_product_spectrum: [spectra] a and b are required");
  const auto mu = parse_measure_spec(c.spectrum_a);
  const auto nu = parse_measure_spec(c.spectrum_b);
  if (c.branch == Branch::mult) {
    require(nu.quantile(0.0) >= 0.0, "sum_product_spectrum: the mult branch needs a nonnegative second spectrum");
  }
  const auto limit = c.branch == Branch::add ? freelimit::free_add_convolve(mu, nu) : freelimit::free_mult_convolve(mu, nu);
  const auto support = freelimit::measure_support(limit);
  std::vector<StatisticRule> rules{{"support", Aggregate::rate, true, false, c.pass_rate},
                                   {"ks", Aggregate::median, true, true}};
  return run_trials(c, rules, [&](Eigen::Index n, Seed s) {
    const auto a = quantile_diagonal(mu, n);
    const auto b = quantile_diagonal(nu, n);
    CMatrix m;
    if (c.branch == Branch::add) {
      m = ensembles::conjugate_by_haar(as_complex(b), s.child(1)).entries();
      m.diagonal() += RVector::Map(a.data(), n).cast<Complex>();
    } else {
      std::vector<Complex> root(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) root[i] = std::sqrt(std::max(b[i], 0.0));
      const CMatrix r = ensembles::conjugate_by_haar(root, s.child(1)).entries();
      m = r * RVector::Map(a.data(), n).cast<Complex>().asDiagonal() * r;
    }
    const auto ev = eigenvalues_of(SquareMatrix::detect(spectral::detail::hermitian_part(m)));
    const double excess = support_excess(ev, support);
    const double ks = freelimit::kolmogorov_distance(ev, limit);
    return std::vector<TrialRecord>{
        record("support", excess, 0.0, excess, c.epsilon, spectral::support_neighborhood_check(ev, support, c.epsilon)),
        bounded("ks", ks, 0.0, ks, c.tolerance)};
  });
}

/// Spectrum of Pi A Pi with A = V diag(quantiles of a) V^* and Pi the projection on the first round(tN) coordinates.
inline ConvergenceReport run_compression_spectrum(const ExperimentConfig& c) {
  using namespace experiment_detail;
  require(!c.spectrum_a.empty(), "compression_spectrum: [spectra] a is required");
  const auto mu = parse_measure_spec(c.spectrum_a);
  const auto limit = freelimit::free_compression(mu, c.fraction);
  const auto support = freelimit::measure_support(limit);
  std::vector<StatisticRule> rules{{"support", Aggregate::rate, true, false, c.pass_rate},
                                   {"ks", Aggregate::median, true, true}};
  return run_trials(c, rules, [&](Eigen::Index n, Seed s) {
    const auto a = ensembles::conjugate_by_haar(as_complex(quantile_diagonal(mu, n)), s.child(1));
    const auto m = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(c.fraction * static_cast<double>(n))), 1, n);
    const CMatrix corner = a.entries().topLeftCorner(m, m);
    auto ev = eigenvalues_of(SquareMatrix::detect(spectral::detail::hermitian_part(corner)));
    ev.resize(static_cast<std::size_t>(n), 0.0);
    const double excess = support_excess(ev, support);
    const double ks = freelimit::kolmogorov_distance(ev, limit);
    return std::vector<TrialRecord>{
        record("support", excess, 0.0, excess, c.epsilon, spectral::support_neighborhood_check(ev, support, c.epsilon)),
        bounded("ks", ks, 0.0, ks, c.tolerance)};
  });
}

/// ||sum_w alpha_w w(U)|| over reduced words of degree d against (d + 1) ||alpha||_2; slack = tolerance.
inline ConvergenceReport run_haagerup_check(const ExperimentConfig& c) {
  using namespace experiment_detail;
  const int p = c.alphabet();
  require(p >= 1, "haagerup_check: [ensemble] letters must be >= 1");
  const auto words = ncalg::reduced_words(p, c.degree, c.holomorphic);
  const EnsembleKind kind = haar_kind_or_unitary(c.ensemble);
  require_even_grid(c, kind);
  return run_trials(c, {{"norm", Aggregate::all, true, false}}, [&](Eigen::Index n, Seed s) {
    const auto alpha = make_alpha(c.alpha, words.size(), s.child(0));
    const auto x = sample_letters(kind, p, n, s);
    const double norm = spectral::operator_norm(SquareMatrix(word_sum(words, alpha, x, n)));
    const double bound = freelimit::haagerup_bound(c.degree, alpha);
    return std::vector<TrialRecord>{bounded("norm", norm, bound, norm - bound, c.tolerance)};
  });
}

/// ||sum_w alpha_w w(A)|| for A_j = U_j Y_j V_j^* over holomorphic reduced words, against
/// e (d + 1)^{1/2} tau_N(X^* X)^{1/2}; slack = tolerance.
inline ConvergenceReport run_rdiagonal_check(const ExperimentConfig& c) {
  using namespace experiment_detail;
  const int p = c.alphabet();
  require(p >= 1, "rdiagonal_check: [ensemble] letters must be >= 1");
  require(c.spectra_y.size() == 1 || static_cast<int>(c.spectra_y.size()) == p,
          "rdiagonal_check: give [spectra] y or one y_j per letter");
  require(std::all_of(c.spectra_y.begin(), c.spectra_y.end(), [&](const std::string& y) { return y == c.spectra_y.front(); }),
          "rdiagonal_check: the Y_j must be identically distributed");
  const auto ylaw = parse_measure_spec(c.spectra_y.front());
  const auto words = ncalg::reduced_words(p, c.degree, true);
  const EnsembleKind kind = haar_kind_or_unitary(c.ensemble);
  require_even_grid(c, kind);
  return run_trials(c, {{"norm", Aggregate::all, true, false}}, [&](Eigen::Index n, Seed s) {
    const auto alpha = make_alpha(c.alpha, words.size(), s.child(0));
    const auto y = RVector::Map(quantile_diagonal(ylaw, n).data(), n).cast<Complex>().eval();
    std::vector<SquareMatrix> a;
    for (int j = 1; j <= p; ++j) {
      const auto u = ensembles::sample(ensembles::EnsembleSpec{kind, n, std::nullopt}, s.child(2 * static_cast<std::uint64_t>(j)));
      const auto v = ensembles::sample(ensembles::EnsembleSpec{kind, n, std::nullopt}, s.child(2 * static_cast<std::uint64_t>(j) + 1));
      a.emplace_back(u.entries() * y.asDiagonal() * v.entries().adjoint());
    }
    const CMatrix xm = word_sum(words, alpha, a, n);
    const double norm = spectral::operator_norm(SquareMatrix(xm));
    const double l2 = xm.norm() / std::sqrt(static_cast<double>(n));
    const double bound = freelimit::kemp_speicher_bound(c.degree, l2);
    return std::vector<TrialRecord>{bounded("norm", norm, bound, norm - bound, c.tolerance)};
  });
}

/// Sum of S_i + S_i^* over random permutations against the Haar branch of the same polynomial.
inline ConvergenceReport run_permutation_contrast(const ExperimentConfig& c) {
  using namespace experiment_detail;
  const int p = c.alphabet();
  require(p >= 2, "permutation_contrast: need at least two letters");
  const EnsembleKind kind = haar_kind_or_unitary(c.ensemble);
  require_even_grid(c, kind);
  const double kesten = freelimit::kesten_norm(p);
  const double top_oracle = 2.0 * p;
  constexpr double kExact = 1e-9;
  constexpr double kSecondSlack = 0.2;
  std::vector<StatisticRule> rules{{"top", Aggregate::all, true, false},
                                   {"second", Aggregate::median, false, false},
                                   {"haar_norm", Aggregate::median, true, false},
                                   {"contrast", Aggregate::all, true, false}};
  return run_trials(c, rules, [&](Eigen::Index n, Seed s) {
    CMatrix sum = CMatrix::Zero(n, n);
    CMatrix haar = CMatrix::Zero(n, n);
    for (int i = 1; i <= p; ++i) {
      const auto perm = ensembles::sample_permutation(n, s.child(static_cast<std::uint64_t>(i)));
      sum += perm.entries() + perm.entries().adjoint();
      const auto u = ensembles::sample(ensembles::EnsembleSpec{kind, n, std::nullopt}, s.child(static_cast<std::uint64_t>(p + i)));
      haar += u.entries() + u.entries().adjoint();
    }
    const auto ev = eigenvalues_of(SquareMatrix(sum, MatrixFlag::hermitian));
    const auto hv = eigenvalues_of(SquareMatrix(haar, MatrixFlag::hermitian));
    const double top = ev.back();
    const double second = ev.size() >= 2 ? ev[ev.size() - 2] : ev.back();
    const double hnorm = std::max(std::abs(hv.front()), std::abs(hv.back()));
    return std::vector<TrialRecord>{
        bounded("top", top, top_oracle, std::abs(top - top_oracle), kExact),
        bounded("second", second, kesten, second - kesten, kSecondSlack),
        bounded("haar_norm", hnorm, kesten, hnorm - kesten, c.tolerance),
        record("contrast", top - hnorm, std::nullopt, hnorm - top, 0.0, top > hnorm)};
  });
}

/// Exact coupling identities: spectrum of F_A(A) for GUE A and exp(2 pi i F_U^{-1}(M)) = U for Haar U.
inline ConvergenceReport run_coupling_identity(const ExperimentConfig& c) {
  using namespace experiment_detail;
  constexpr double kCouplingTol = 1e-10;
  constexpr double kReconstructionTol = 1e-8;
  const EnsembleKind kind = haar_kind_or_unitary(c.ensemble);
  require_even_grid(c, kind);
  std::vector<StatisticRule> rules{{"coupling", Aggregate::all, true, false},
                                   {"reconstruction", Aggregate::all, true, false},
                                   {"drift", Aggregate::median, false, true}};
  return run_trials(c, rules, [&](Eigen::Index n, Seed s) {
    const auto g = ensembles::sample(ensembles::EnsembleSpec{EnsembleKind::GUE, n, std::nullopt}, s.child(1));
    const RVector ev = spectral::hermitian_eigenvalues(spectral::coupling_reference(g));
    double dev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      dev = std::max(dev, std::abs(ev(i) - static_cast<double>(i + 1) / static_cast<double>(n)));
    }
    const auto u = ensembles::sample(ensembles::EnsembleSpec{kind, n, std::nullopt}, s.child(2));
    const double residual = spectral::haar_reconstruction_check(u);
    const double drift = spectral::angle_quantile_drift(u);
    return std::vector<TrialRecord>{bounded("coupling", dev, 0.0, dev, kCouplingTol),
                                    bounded("reconstruction", residual, 0.0, residual, kReconstructionTol),
                                    bounded("drift", drift, 0.0, drift, c.tolerance)};
  });
}

/// Haar moment and independence tests on the eigenbasis V of V diag(q + g) V^*, q the quantiles of
/// spectrum a (default uniform:0:1) and g a standard normal shift. Statistics are z-scores of trial
/// means: Re Tr V and Im Tr V (oracle 0), |Tr V|^2 (oracle 1), and g (|Tr V|^2 - 1) (oracle 0).
/// Per-record pass only flags a finite value; each mean must lie within 3 standard errors.
inline ConvergenceReport run_haar_invariance(const ExperimentConfig& c) {
  using namespace experiment_detail;
  const auto mu = parse_measure_spec(c.spectrum_a.empty() ? "uniform:0:1" : c.spectrum_a);
  std::vector<StatisticRule> rules{{"trace_re", Aggregate::mean_zscore, true, false},
                                   {"trace_im", Aggregate::mean_zscore, true, false},
                                   {"trace_sq", Aggregate::mean_zscore, true, false},
                                   {"independence", Aggregate::mean_zscore, true, false}};
  std::vector<std::string> notices;
  ExperimentConfig run = c;
  run.n_grid.clear();
  for (Eigen::Index n : c.n_grid) {
    auto q = quantile_diagonal(mu, n);
    std::sort(q.begin(), q.end());
    if (n < 2 || std::adjacent_find(q.begin(), q.end()) != q.end()) {
      notices.push_back("N=" + std::to_string(n) + ": degenerate spectrum, eigenbasis not identifiable; skipped");
    } else {
      run.n_grid.push_back(n);
    }
  }
  constexpr double z = 3.0;
  auto rep = run_trials(run, rules, [&](Eigen::Index n, Seed s) {
    ensembles::PhiloxEngine eng(s.child(0));
    const double g = eng.normal();
    auto data = quantile_diagonal(mu, n);
    double base = 0.0;
    for (double& d : data) {
      base += d;
      d += g;
    }
    base /= static_cast<double>(n);
    const auto a = ensembles::conjugate_by_haar(as_complex(data), s.child(1));
    const auto dec = spectral::randomize_phases(spectral::eig_hermitian(a), s.child(2));
    double mean_ev = 0.0;
    for (const Complex& l : dec.eigenvalues) mean_ev += l.real() / static_cast<double>(n);
    const Complex tr = dec.basis.entries().trace();
    const double sq = std::norm(tr);
    const double ind = (mean_ev - base) * (sq - 1.0);
    const auto finite = [](double v) { return std::isfinite(v); };
    return std::vector<TrialRecord>{record("trace_re", tr.real(), 0.0, tr.real(), z, finite(tr.real())),
                                    record("trace_im", tr.imag(), 0.0, tr.imag(), z, finite(tr.imag())),
                                    record("trace_sq", sq, 1.0, sq - 1.0, z, finite(sq)),
                                    record("independence", ind, 0.0, ind, z, finite(ind))};
  }, notices);
  rep.config = c;
  return rep;
}

inline ConvergenceReport run_experiment(const ExperimentConfig& c) {
  c.validate();
  switch (c.experiment) {
    case ExperimentKind::norm_convergence: return run_norm_convergence(c);
    case ExperimentKind::trace_convergence: return run_trace_convergence(c);
    case ExperimentKind::sum_product_spectrum: return run_sum_product_spectrum(c);
    case ExperimentKind::compression_spectrum: return run_compression_spectrum(c);
    case ExperimentKind::haagerup_check: return run_haagerup_check(c);
    case ExperimentKind::rdiagonal_check: return run_rdiagonal_check(c);
    case ExperimentKind::permutation_contrast: return run_permutation_contrast(c);
    case ExperimentKind::coupling_identity: return run_coupling_identity(c);
    case ExperimentKind::haar_invariance: return run_haar_invariance(c);
  }
  throw std::invalid_argument("run_experiment: unknown kind");
}

// ---- Verification ------------------------------------------------------------------------------

struct VerifyResult {
  bool digest_match = false;
  bool verdict_match = false;
  std::string expected_digest;
  std::string actual_digest;
  std::string expected_verdict;
  std::string actual_verdict;
  ConvergenceReport report;

  [[nodiscard]] bool ok() const { return digest_match && verdict_match; }
};

/// Re-runs the config stored in a manifest and compares the trial CSV digest and verdict.
inline VerifyResult verify_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("manifest: ") + e.what());
  }
  if (m.value("format", "") != "sfree-manifest-1") throw std::invalid_argument("manifest: unknown format");
  VerifyResult v;
  v.report = run_experiment(parse_config(m.at("config").get<std::string>()));
  v.expected_digest = m.at("csv_digest").get<std::string>();
  v.actual_digest = digest(trial_csv(v.report.records));
  v.expected_verdict = m.at("verdict").get<std::string>();
  v.actual_verdict = std::string(to_string(v.report.verdict));
  v.digest_match = v.expected_digest == v.actual_digest;
  v.verdict_match = v.expected_verdict == v.actual_verdict;
  return v;
}

}  // namespace sfree::harness
