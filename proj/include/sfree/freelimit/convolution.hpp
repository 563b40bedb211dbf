#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "sfree/core.hpp"
#include "sfree/freelimit/measure.hpp"

namespace sfree::freelimit {

enum class CdfMethod { automatic, log_potential, trapezoid };

struct ConvolutionOptions {
  std::size_t grid_size = kDefaultGridSize;
  CdfMethod cdf_method = CdfMethod::automatic;
};

namespace conv_detail {

enum class Kind { additive, multiplicative };

struct FValue {
  Complex f;
  Complex df;
};

// F = 1/G and F' = -G'/G^2.
inline FValue reciprocal_transform(const CompactMeasure& m, Complex z) {
  const CauchyValue c = m.cauchy(z);
  return {1.0 / c.g, -c.dg / (c.g * c.g)};
}

struct State {
  Complex w1;
  Complex w2;
};

inline bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Subordination pair for mu [+] nu or mu [x] nu at one point of the upper half-plane.
///
/// Additive: F_mu(w1) = F_nu(w2) = w1 + w2 - z, output G_mu(w1).
/// Multiplicative: F_mu(W1)/W1 = F_nu(W2)/W2 and W1 W2 = z + F_mu(W1) W2, output W1 G_mu(W1) / z.
class Subordination {
 public:
  Subordination(const CompactMeasure& mu, const CompactMeasure& nu, Kind kind) : mu_(mu), nu_(nu), kind_(kind) {}

  [[nodiscard]] Kind kind() const { return kind_; }

  [[nodiscard]] State initial(Complex z) const {
    if (kind_ == Kind::additive) return {z - nu_.mean(), z - mu_.mean()};
    const Complex w1 = z / nu_.mean();
    const FValue f = reciprocal_transform(mu_, w1);
    return {w1, z / (w1 - f.f)};
  }

  /// Newton iteration from `s`; updates s and returns true on convergence.
  bool newton(Complex z, State& s) const {
    const bool additive = kind_ == Kind::additive;
    const double scale = residual_scale(z, s);
    for (int it = 0; it < 60; ++it) {
      Complex r1, r2, j11, j12, j21, j22;
      if (!residual(z, s, r1, r2, j11, j12, j21, j22)) return false;
      const double res = (std::abs(r1) + std::abs(r2)) / scale;
      if (res <= 1e-13) return true;
      const Complex det = j11 * j22 - j12 * j21;
      if (det == Complex(0.0) || !finite(det)) return false;
      const Complex d1 = (j22 * r1 - j12 * r2) / det;
      const Complex d2 = (j11 * r2 - j21 * r1) / det;
      double lambda = 1.0;
      State next{};
      bool ok = false;
      for (int half = 0; half < 30; ++half) {
        next = {s.w1 - lambda * d1, s.w2 - lambda * d2};
        const bool inside = !additive || (next.w1.imag() > 0.5 * z.imag() && next.w2.imag() > 0.5 * z.imag());
        if (finite(next.w1) && finite(next.w2) && inside) {
          ok = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!ok) return false;
      s = next;
      if (lambda * std::abs(d1) <= 1e-15 * std::abs(s.w1) && lambda * std::abs(d2) <= 1e-15 * std::abs(s.w2)) break;
    }
    Complex r1, r2, a, b, c, d;
    if (!residual(z, s, r1, r2, a, b, c, d)) return false;
    return (std::abs(r1) + std::abs(r2)) / scale <= 1e-10;
  }

  /// Damped iteration w1 <- z + h_nu(z + h_mu(w1)), h = F - id; additive case only.
  bool fixed_point(Complex z, State& s) const {
    if (kind_ != Kind::additive) return false;
    Complex w1 = s.w1;
    for (int it = 0; it < 20000; ++it) {
      const Complex w2 = z + (reciprocal_transform(mu_, w1).f - w1);
      if (!(w2.imag() > 0.0)) return false;
      const Complex next = z + (reciprocal_transform(nu_, w2).f - w2);
      if (!finite(next) || !(next.imag() > 0.0)) return false;
      const Complex upd = 0.5 * w1 + 0.5 * next;
      if (std::abs(upd - w1) <= 1e-13 * (1.0 + std::abs(w1))) {
        s = {upd, z + (reciprocal_transform(mu_, upd).f - upd)};
        return true;
      }
      w1 = upd;
    }
    return false;
  }

  /// G of the convolution at z from a converged state.
  [[nodiscard]] Complex cauchy(Complex z, const State& s) const {
    if (kind_ == Kind::additive) return mu_.cauchy(s.w1).g;
    return s.w1 * mu_.cauchy(s.w1).g / z;
  }

 private:
  [[nodiscard]] double residual_scale(Complex z, const State& s) const {
    if (kind_ == Kind::additive) return 1.0 + std::abs(s.w1) + std::abs(s.w2);
    return 1.0 + std::abs(z);
  }

  bool residual(Complex z, const State& s, Complex& r1, Complex& r2, Complex& j11, Complex& j12,
                Complex& j21, Complex& j22) const {
    const FValue a = reciprocal_transform(mu_, s.w1);
    const FValue b = reciprocal_transform(nu_, s.w2);
    if (!finite(a.f) || !finite(a.df) || !finite(b.f) || !finite(b.df)) return false;
    if (kind_ == Kind::additive) {
      r1 = a.f - b.f;
      r2 = s.w1 + s.w2 - z - a.f;
      j11 = a.df;
      j12 = -b.df;
      j21 = 1.0 - a.df;
      j22 = 1.0;
    } else {
      r1 = a.f * s.w2 - b.f * s.w1;
      r2 = s.w1 * s.w2 - a.f * s.w2 - z;
      j11 = a.df * s.w2 - b.f;
      j12 = a.f - b.df * s.w1;
      j21 = s.w2 - a.df * s.w2;
      j22 = s.w1 - a.f;
    }
    return true;
  }

  const CompactMeasure& mu_;
  const CompactMeasure& nu_;
  Kind kind_;
};

/// Marches subordination states along vertical and horizontal lines, warm-starting every step.
///
/// Vertical lines run from x + i start down to x + i eta; the Gauss-Legendre part of the
/// march covers [eta, level] in log y.
class LineSolver {
 public:
  LineSolver(const Subordination& sub, std::vector<Atom> atoms, double start, double level, double eta)
      : sub_(sub), atoms_(std::move(atoms)), start_(start), level_(level), eta_(eta) {
    using GL = boost::math::quadrature::gauss<double, 8>;
    const double s_lo = std::log(eta_);
    const double s_hi = std::log(level_);
    const auto units = static_cast<int>(std::ceil(s_hi - s_lo));
    const double len = (s_hi - s_lo) / units;
    const auto& abscissa = GL::abscissa();
    const auto& weights = GL::weights();
    // Descending y, weights for dy = y ds.
    for (int u = units - 1; u >= 0; --u) {
      const double mid = s_lo + len * (u + 0.5);
      std::vector<std::pair<double, double>> cell;
      for (std::size_t k = 0; k < abscissa.size(); ++k) {
        const double wt = weights[k] * 0.5 * len;
        cell.emplace_back(mid + 0.5 * len * abscissa[k], wt);
        if (abscissa[k] != 0.0) cell.emplace_back(mid - 0.5 * len * abscissa[k], wt);
      }
      std::sort(cell.begin(), cell.end(), [](const auto& p, const auto& q) { return p.first > q.first; });
      for (const auto& [s, wt] : cell) nodes_.push_back({std::exp(s), std::exp(s) * wt});
    }
  }

  struct Vertical {
    Complex g_bottom;        // G of the continuous part at x + i eta
    Complex g_double;        // same at x + 2i eta
    double re_integral = 0;  // integral of Re G_c(x + iy) dy over [eta, level]
  };

  [[nodiscard]] Vertical vertical(double x, bool integrate) const {
    State s = start_state(x);
    double y = start_;
    descend(x, y, level_, s);
    y = level_;
    Vertical out;
    if (integrate) {
      for (const Node& nd : nodes_) {
        advance(Complex(x, y), Complex(x, nd.y), s, 0);
        y = nd.y;
        out.re_integral += nd.weight * g_continuous(Complex(x, y), s).real();
      }
    }
    descend(x, y, 2.0 * eta_, s);
    out.g_double = g_continuous(Complex(x, 2.0 * eta_), s);
    advance(Complex(x, 2.0 * eta_), Complex(x, eta_), s, 0);
    out.g_bottom = g_continuous(Complex(x, eta_), s);
    return out;
  }

  /// Im G_c(x_j + i level) for ascending x_j, marching horizontally.
  [[nodiscard]] std::vector<double> horizontal(const std::vector<double>& xs) const {
    std::vector<double> out;
    out.reserve(xs.size());
    State s = start_state(xs.front());
    descend(xs.front(), start_, level_, s);
    Complex z(xs.front(), level_);
    for (double x : xs) {
      const Complex next(x, level_);
      advance(z, next, s, 0);
      z = next;
      out.push_back(g_continuous(z, s).imag());
    }
    return out;
  }

 private:
  struct Node {
    double y;
    double weight;
  };

  [[noreturn]] static void fail(Complex z) {
    throw ConvergenceError("subordination solve failed at node x = " + std::to_string(z.real()) +
                           ", y = " + std::to_string(z.imag()));
  }

  State start_state(double x) const {
    const Complex z0(x, start_);
    State s = sub_.initial(z0);
    if (sub_.newton(z0, s)) return s;
    s = sub_.initial(z0);
    if (sub_.fixed_point(z0, s)) return s;
    fail(z0);
  }

  void descend(double x, double y_from, double y_to, State& s) const {
    double y = y_from;
    while (y > y_to) {
      const double next = std::max(y_to, 0.25 * y);
      advance(Complex(x, y), Complex(x, next), s, 0);
      y = next;
    }
  }

  Complex g_continuous(Complex z, const State& s) const {
    Complex g = sub_.cauchy(z, s);
    for (const Atom& a : atoms_) g -= a.mass / (z - a.location);
    return g;
  }

  void advance(Complex from, Complex to, State& s, int depth) const {
    if (from == to) return;
    State trial = s;
    if (sub_.newton(to, trial)) {
      s = trial;
      return;
    }
    if (depth < 40) {
      const Complex mid = from.real() == to.real() ? Complex(to.real(), std::sqrt(from.imag() * to.imag()))
                                                   : 0.5 * (from + to);
      if (mid != from && mid != to) {
        advance(from, mid, s, depth + 1);
        advance(mid, to, s, depth + 1);
        return;
      }
    }
    trial = s;
    if (sub_.fixed_point(to, trial)) {
      sub_.newton(to, trial);
      s = trial;
      return;
    }
    fail(to);
  }

  const Subordination& sub_;
  std::vector<Atom> atoms_;
  double start_;
  double level_;
  double eta_;
  std::vector<Node> nodes_;
};

/// Atoms of mu [+] nu: mass mu{a} + nu{b} - 1 at a + b when positive.
inline std::vector<Atom> additive_atoms(const CompactMeasure& mu, const CompactMeasure& nu) {
  std::vector<Atom> out;
  for (const Atom& a : mu.atoms()) {
    for (const Atom& b : nu.atoms()) {
      const double m = a.mass + b.mass - 1.0;
      if (m > 1e-14) out.push_back({a.location + b.location, m});
    }
  }
  return out;
}

/// Atoms of mu [x] nu: max(mu{0}, nu{0}) at 0, mu{a} + nu{b} - 1 at ab != 0 when positive.
inline std::vector<Atom> multiplicative_atoms(const CompactMeasure& mu, const CompactMeasure& nu) {
  std::vector<Atom> out;
  const double zero = std::max(mu.atom_at(0.0), nu.atom_at(0.0));
  if (zero > 0.0) out.push_back({0.0, zero});
  for (const Atom& a : mu.atoms()) {
    for (const Atom& b : nu.atoms()) {
      if (a.location == 0.0 || b.location == 0.0) continue;
      const double m = a.mass + b.mass - 1.0;
      if (m > 1e-14) out.push_back({a.location * b.location, m});
    }
  }
  return out;
}

inline double atom_total(const std::vector<Atom>& atoms) {
  double s = 0.0;
  for (const Atom& a : atoms) s += a.mass;
  return s;
}

inline CompactMeasure convolve(const CompactMeasure& mu, const CompactMeasure& nu, Kind kind,
                               const ConvolutionOptions& opt) {
  require(opt.grid_size >= 64, "convolution: grid size must be >= 64");
  std::vector<Atom> atoms = kind == Kind::additive ? additive_atoms(mu, nu) : multiplicative_atoms(mu, nu);
  const double mass_c = 1.0 - atom_total(atoms);
  if (mass_c < 1e-14) {
    const double total = atom_total(atoms);
    for (Atom& a : atoms) a.mass /= total;
    return CompactMeasure::atomic(std::move(atoms), opt.grid_size);
  }

  // Hull of the possible support.
  const auto [a_mu, b_mu] = mu.support_hull();
  const auto [a_nu, b_nu] = nu.support_hull();
  double lo, hi;
  if (kind == Kind::additive) {
    lo = a_mu + a_nu;
    hi = b_mu + b_nu;
  } else {
    lo = std::min(a_mu * b_nu, a_mu * a_nu);
    hi = std::max(b_mu * b_nu, b_mu * a_nu);
  }
  const double width = std::max(hi - lo, 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi)));
  const double scale = std::max({std::abs(lo), std::abs(hi), width, 1.0});

  const Subordination sub(mu, nu, kind);
  const double eta = 1e-9 * width;
  const LineSolver line(sub, atoms, 20.0 * scale, width, eta);
  // Inside the support the smoothed density is flat in eta; outside it grows linearly with eta.
  const auto density_of = [](const LineSolver::Vertical& v) {
    const double d1 = -v.g_bottom.imag() / kPi;
    const double d2 = -v.g_double.imag() / kPi;
    return d1 > 0.0 && d1 >= 0.75 * d2 ? d1 : 0.0;
  };
  const auto density_at = [&](double x) { return density_of(line.vertical(x, false)); };

  // Coarse pass for the support edges.
  const std::size_t coarse_n = 1024;
  const GridSpec cg = padded_grid(lo, hi, coarse_n);
  const double ch = (cg.hi - cg.lo) / static_cast<double>(coarse_n - 1);
  std::vector<double> cd(coarse_n);
  double cmax = 0.0;
  for (std::size_t i = 0; i < coarse_n; ++i) {
    const double x = cg.lo + ch * static_cast<double>(i);
    cd[i] = (x < lo || x > hi) ? 0.0 : density_at(x);
    cmax = std::max(cmax, cd[i]);
  }
  if (!(cmax > 0.0)) throw ConvergenceError("convolution: continuous part has no detectable density");
  const double threshold = 1e-12 * cmax;
  std::size_t first = 0;
  while (cd[first] <= threshold) ++first;
  std::size_t last = coarse_n - 1;
  while (cd[last] <= threshold) --last;
  const auto refine = [&](double outside, double inside) {
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (outside + inside);
      if (density_at(mid) > threshold) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return outside;
  };
  const auto coarse_node = [&](std::size_t i) { return cg.lo + ch * static_cast<double>(i); };
  double edge_lo = first == 0 ? cg.lo : refine(coarse_node(first - 1), coarse_node(first));
  double edge_hi = last + 1 == coarse_n ? cg.hi : refine(coarse_node(last + 1), coarse_node(last));
  edge_lo = std::max(edge_lo, lo);
  edge_hi = std::min(edge_hi, hi);
  double glo = edge_lo, ghi = edge_hi;
  for (const Atom& a : atoms) {
    glo = std::min(glo, a.location);
    ghi = std::max(ghi, a.location);
  }

  // Final grid: density from the bottom of each vertical line.
  const std::size_t n = opt.grid_size;
  const GridSpec g = padded_grid(glo, ghi, n);
  const double h = (g.hi - g.lo) / static_cast<double>(n - 1);
  const auto node = [&](std::size_t i) { return g.lo + h * static_cast<double>(i); };
  const bool log_potential = opt.cdf_method == CdfMethod::log_potential ||
                             (opt.cdf_method == CdfMethod::automatic && mu.has_cheap_cauchy() && nu.has_cheap_cauchy());
  std::vector<double> dens(n, 0.0), cum(n, 0.0), vert(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = node(i);
    const bool inside = x >= edge_lo && x <= edge_hi;
    if (!inside && !log_potential) continue;
    const auto r = line.vertical(x, log_potential);
    if (inside) dens[i] = density_of(r);
    vert[i] = r.re_integral;
  }
  const double dmax = *std::max_element(dens.begin(), dens.end());
  for (double& d : dens) {
    if (d < 1e-9 * dmax) d = 0.0;
  }
  if (log_potential) {
    // Im L along the contour: up the left edge, across at height `width`, down to x.
    // The left grid edge lies outside the support, so F_c vanishes there.
    using GL = boost::math::quadrature::gauss<double, 4>;
    std::vector<std::pair<double, double>> rule;
    for (std::size_t k = 0; k < GL::abscissa().size(); ++k) {
      rule.emplace_back(0.5 * h * (1.0 - GL::abscissa()[k]), 0.5 * h * GL::weights()[k]);
      rule.emplace_back(0.5 * h * (1.0 + GL::abscissa()[k]), 0.5 * h * GL::weights()[k]);
    }
    std::sort(rule.begin(), rule.end());
    std::vector<double> xs;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (const auto& [o, w] : rule) xs.push_back(node(i) + o);
    }
    const std::vector<double> im_g = line.horizontal(xs);
    std::vector<double> across(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double cell = 0.0;
      for (std::size_t k = 0; k < rule.size(); ++k) cell += rule[k].second * im_g[i * rule.size() + k];
      across[i + 1] = across[i] + cell;
    }
    for (std::size_t i = 0; i < n; ++i) cum[i] = -(vert[0] + across[i] - vert[i]) / kPi;
  } else {
    for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
  }
  const double c0 = cum.front();
  const double c1 = cum.back();
  if (!(c1 > c0)) throw ConvergenceError("convolution: cumulative mass did not increase");
  for (double& c : cum) c = std::clamp((c - c0) / (c1 - c0), 0.0, 1.0) * mass_c;
  for (std::size_t i = 1; i < n; ++i) cum[i] = std::max(cum[i], cum[i - 1]);
  cum.front() = 0.0;
  cum.back() = mass_c;
  // Rescale atoms so the total is exactly one.
  const double atom_sum = atom_total(atoms);
  if (atom_sum > 0.0) {
    for (Atom& a : atoms) a.mass *= (1.0 - mass_c) / atom_sum;
  }
  return CompactMeasure(std::move(atoms), g.lo, g.hi, std::move(dens), std::move(cum));
}

}  // namespace conv_detail

/// mu [+] nu by subordination on vertical lines above each grid node.
inline CompactMeasure free_add_convolve(const CompactMeasure& mu, const CompactMeasure& nu,
                                        const ConvolutionOptions& opt = {}) {
  return conv_detail::convolve(mu, nu, conv_detail::Kind::additive, opt);
}

/// mu [x] nu for nu on [0, inf), nu != delta_0.
inline CompactMeasure free_mult_convolve(const CompactMeasure& mu, const CompactMeasure& nu,
                                         const ConvolutionOptions& opt = {}) {
  const auto [a_nu, b_nu] = nu.support_hull();
  require(a_nu >= -1e-12, "free_mult_convolve: second measure must live on [0, inf)");
  require(b_nu > 0.0, "free_mult_convolve: second measure must not be delta_0");
  return conv_detail::convolve(mu, nu, conv_detail::Kind::multiplicative, opt);
}

/// mu [x] ((1 - t) delta_0 + t delta_1): spectral law of a corner of relative size t.
inline CompactMeasure free_compression(const CompactMeasure& mu, double t, const ConvolutionOptions& opt = {}) {
  require(t > 0.0 && t <= 1.0, "free_compression: t must lie in (0, 1]");
  if (t == 1.0) return mu;
  return free_mult_convolve(mu, projection_measure(t, opt.grid_size), opt);
}

/// Atom points plus grid runs with density above the threshold, each widened by one cell.
inline SupportSet measure_support(const CompactMeasure& mu, double density_threshold = 0.0) {
  require(density_threshold >= 0.0, "measure_support: threshold must be >= 0");
  std::vector<SupportSet::Interval> parts;
  for (const Atom& a : mu.atoms()) parts.push_back({a.location, a.location});
  const auto& d = mu.density();
  const double h = mu.grid_step();
  std::size_t i = 0;
  while (i < d.size()) {
    if (d[i] > density_threshold) {
      std::size_t j = i;
      while (j + 1 < d.size() && d[j + 1] > density_threshold) ++j;
      const double a = std::max(mu.grid_lo(), mu.node(i) - h);
      const double b = std::min(mu.grid_hi(), mu.node(j) + h);
      parts.push_back({a, b});
      i = j + 1;
    } else {
      ++i;
    }
  }
  require(!parts.empty(), "measure_support: measure has no detectable support");
  return SupportSet::merged(std::move(parts));
}

/// sup_x |F_a(x) - F_b(x)| over grid nodes and atoms of both, including left limits.
inline double kolmogorov_distance(const CompactMeasure& a, const CompactMeasure& b) {
  double best = 0.0;
  const auto probe = [&](double x) {
    best = std::max(best, std::abs(a.cdf(x) - b.cdf(x)));
    best = std::max(best, std::abs(a.cdf_left(x) - b.cdf_left(x)));
  };
  for (const CompactMeasure* m : {&a, &b}) {
    for (std::size_t i = 0; i < m->grid_size(); ++i) probe(m->node(i));
    for (const Atom& at : m->atoms()) probe(at.location);
  }
  return best;
}

/// sup distance between a sample's empirical CDF and mu.
inline double kolmogorov_distance(const std::vector<double>& sample, const CompactMeasure& mu) {
  return spectral::kolmogorov_distance(
      sample, [&](double x) { return mu.cdf(x); }, [&](double x) { return mu.cdf_left(x); });
}

}  // namespace sfree::freelimit
