#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "sfree/core.hpp"
#include "sfree/spectral/cdf.hpp"
#include "sfree/spectral/support.hpp"

namespace sfree::freelimit {

using spectral::QuantileMap;
using spectral::SupportSet;

inline constexpr std::size_t kDefaultGridSize = 4096;
inline constexpr double kMassTolerance = 1e-8;

struct Atom {
  double location = 0.0;
  double mass = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// G(z) and G'(z).
struct CauchyValue {
  Complex g;
  Complex dg;
};

/// Closed form of an absolutely continuous part. Every function already carries
/// the part's total mass: cdf(hi) == mass.
struct ContinuousModel {
  double mass = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  std::function<CauchyValue(Complex)> cauchy;
};

/// Uniform grid containing [lo, hi] with both ends on nodes and about 5% padding per side.
struct GridSpec {
  double lo;
  double hi;
  std::size_t n;
};

inline GridSpec padded_grid(double lo, double hi, std::size_t n = kDefaultGridSize) {
  require(n >= 16, "padded_grid: need at least 16 nodes");
  require(lo <= hi, "padded_grid: empty interval");
  if (hi - lo <= 0.0) {
    const double half = 0.5 * std::max(1.0, std::abs(lo)) * 0.1;
    return {lo - half, hi + half, n};
  }
  const auto cells = static_cast<double>(n - 1);
  const double pad_cells = std::round(0.05 * cells / 1.1);
  const double inner = cells - 2.0 * pad_cells;
  const double h = (hi - lo) / inner;
  return {lo - pad_cells * h, hi + pad_cells * h, n};
}

namespace measure_detail {

inline Complex log1p_complex(Complex u) {
  const Complex v = 1.0 + u;
  if (v == Complex(1.0)) return u;
  return std::log(v) * (u / (v - 1.0));
}

// sqrt(z - r) sqrt(z + r): the branch that behaves like z at infinity in the upper half-plane.
inline Complex edge_root(Complex z, double r) { return std::sqrt(z - r) * std::sqrt(z + r); }

}  // namespace measure_detail

/// Compactly supported probability measure: exact atoms plus a continuous part
/// stored as density and cumulative mass on a uniform grid.
///
/// `cumulative[i]` is the continuous mass in [lo, x_i]; the total mass
/// sum(atoms) + cumulative.back() equals 1 within 1e-8. An optional closed-form
/// model of the continuous part supplies exact CDF and Cauchy transform values.
class CompactMeasure {
 public:
  CompactMeasure() : CompactMeasure({{0.0, 1.0}}, -0.05, 0.05, std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)) {}

  CompactMeasure(std::vector<Atom> atoms, double lo, double hi, std::vector<double> density,
                 std::vector<double> cumulative, std::shared_ptr<const ContinuousModel> model = nullptr)
      : atoms_(std::move(atoms)),
        lo_(lo),
        hi_(hi),
        density_(std::move(density)),
        cumulative_(std::move(cumulative)),
        model_(std::move(model)) {
    require(std::isfinite(lo_) && std::isfinite(hi_) && lo_ < hi_, "CompactMeasure: need finite lo < hi");
    require(density_.size() >= 2 && density_.size() == cumulative_.size(),
            "CompactMeasure: density and cumulative need matching sizes >= 2");
    normalize_atoms();
    double prev = 0.0;
    for (std::size_t i = 0; i < density_.size(); ++i) {
      require(std::isfinite(density_[i]) && density_[i] >= 0.0, "CompactMeasure: density must be finite and >= 0");
      require(std::isfinite(cumulative_[i]) && cumulative_[i] >= prev - 1e-15,
              "CompactMeasure: cumulative must be nondecreasing");
      prev = cumulative_[i];
    }
    require(cumulative_.front() >= 0.0 && cumulative_.front() <= 1e-12, "CompactMeasure: cumulative must start at 0");
    double total = cumulative_.back();
    for (const Atom& a : atoms_) total += a.mass;
    require(std::abs(total - 1.0) <= kMassTolerance, "CompactMeasure: total mass must be 1");
    build_cell_tables();
    quantile_map_ = QuantileMap::from_function([this](double s) { return quantile(s); });
  }

  /// Grid measure sampled from a closed-form model; support ends land on nodes.
  static CompactMeasure from_model(std::vector<Atom> atoms, const ContinuousModel& model,
                                   std::size_t n = kDefaultGridSize) {
    double lo = model.lo;
    double hi = model.hi;
    for (const Atom& a : atoms) {
      lo = std::min(lo, a.location);
      hi = std::max(hi, a.location);
    }
    const GridSpec g = padded_grid(lo, hi, n);
    const double h = (g.hi - g.lo) / static_cast<double>(n - 1);
    std::vector<double> dens(n), cum(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = g.lo + h * static_cast<double>(i);
      cum[i] = x <= model.lo ? 0.0 : (x >= model.hi ? model.mass : model.cdf(x));
    }
    cum.front() = 0.0;
    cum.back() = model.mass;
    for (std::size_t i = 1; i < n; ++i) cum[i] = std::max(cum[i], cum[i - 1]);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = g.lo + h * static_cast<double>(i);
      double d = (x < model.lo || x > model.hi) ? 0.0 : model.pdf(x);
      if (!std::isfinite(d)) {
        // Integrable singularity at a node: use the average over the adjacent half cell.
        const double inward = x <= 0.5 * (model.lo + model.hi) ? 0.5 * h : -0.5 * h;
        const double a = std::min(x, x + inward);
        const double b = std::max(x, x + inward);
        d = (model.cdf(std::clamp(b, model.lo, model.hi)) - model.cdf(std::clamp(a, model.lo, model.hi))) / (0.5 * h);
      }
      dens[i] = std::max(0.0, d);
    }
    return CompactMeasure(std::move(atoms), g.lo, g.hi, std::move(dens), std::move(cum),
                          std::make_shared<const ContinuousModel>(model));
  }

  /// Purely atomic measure.
  static CompactMeasure atomic(std::vector<Atom> atoms, std::size_t n = kDefaultGridSize) {
    require(!atoms.empty(), "CompactMeasure::atomic: need at least one atom");
    double lo = atoms.front().location, hi = lo;
    for (const Atom& a : atoms) {
      lo = std::min(lo, a.location);
      hi = std::max(hi, a.location);
    }
    const GridSpec g = padded_grid(lo, hi, n);
    return CompactMeasure(std::move(atoms), g.lo, g.hi, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
  }

  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] double grid_lo() const { return lo_; }
  [[nodiscard]] double grid_hi() const { return hi_; }
  [[nodiscard]] std::size_t grid_size() const { return density_.size(); }
  [[nodiscard]] double grid_step() const { return (hi_ - lo_) / static_cast<double>(density_.size() - 1); }
  [[nodiscard]] double node(std::size_t i) const { return lo_ + grid_step() * static_cast<double>(i); }
  [[nodiscard]] const std::vector<double>& density() const { return density_; }
  [[nodiscard]] const std::vector<double>& cumulative() const { return cumulative_; }
  [[nodiscard]] double continuous_mass() const { return cumulative_.back(); }
  [[nodiscard]] double atom_mass() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.mass;
    return m;
  }
  [[nodiscard]] const ContinuousModel* model() const { return model_.get(); }
  [[nodiscard]] bool has_cheap_cauchy() const { return model_ != nullptr || continuous_mass() == 0.0; }
  [[nodiscard]] const QuantileMap& quantile_map() const { return quantile_map_; }

  /// Mass of atoms at x, 0 if none.
  [[nodiscard]] double atom_at(double x) const {
    for (const Atom& a : atoms_) {
      if (a.location == x) return a.mass;
    }
    return 0.0;
  }

  /// Continuous mass in (-inf, x].
  [[nodiscard]] double continuous_cdf(double x) const {
    if (model_) {
      if (x <= model_->lo) return 0.0;
      if (x >= model_->hi) return model_->mass;
      return std::clamp(model_->cdf(x), 0.0, model_->mass);
    }
    if (x <= lo_) return 0.0;
    if (x >= hi_) return cumulative_.back();
    const double pos = (x - lo_) / grid_step();
    const auto j = std::min(static_cast<std::size_t>(pos), density_.size() - 2);
    const double w = pos - static_cast<double>(j);
    return (1.0 - w) * cumulative_[j] + w * cumulative_[j + 1];
  }

  /// mu((-inf, x]).
  [[nodiscard]] double cdf(double x) const {
    double s = continuous_cdf(x);
    for (const Atom& a : atoms_) {
      if (a.location <= x) s += a.mass;
    }
    return std::min(s, 1.0);
  }

  /// mu((-inf, x)).
  [[nodiscard]] double cdf_left(double x) const {
    double s = continuous_cdf(x);
    for (const Atom& a : atoms_) {
      if (a.location < x) s += a.mass;
    }
    return std::min(s, 1.0);
  }

  /// Smallest point carrying mass and largest point carrying mass.
  [[nodiscard]] std::pair<double, double> support_hull() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Atom& a : atoms_) {
      lo = std::min(lo, a.location);
      hi = std::max(hi, a.location);
    }
    if (continuous_mass() > 0.0) {
      if (model_) {
        lo = std::min(lo, model_->lo);
        hi = std::max(hi, model_->hi);
      } else {
        const std::size_t n = cumulative_.size();
        std::size_t first = 0;
        while (first + 1 < n && cumulative_[first + 1] <= 0.0) ++first;
        std::size_t last = n - 1;
        while (last > 0 && cumulative_[last - 1] >= cumulative_.back()) --last;
        lo = std::min(lo, node(first));
        hi = std::max(hi, node(last));
      }
    }
    return {lo, hi};
  }

  /// inf{x : F(x) >= s}; s = 0 gives the lower end of the support.
  [[nodiscard]] double quantile(double s) const {
    require(s >= 0.0 && s <= 1.0, "CompactMeasure::quantile: s must lie in [0, 1]");
    const auto [slo, shi] = support_hull();
    if (s <= 0.0) return slo;
    for (const Atom& a : atoms_) {
      if (cdf_left(a.location) < s && s <= cdf(a.location)) return a.location;
    }
    double lo = slo;
    double hi = shi;
    if (cdf(hi) < s) return hi;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (cdf(mid) >= s) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }

  /// Integral of x^k; continuous part by cell masses weighted with the linear density.
  [[nodiscard]] double moment(int k) const {
    require(k >= 0, "CompactMeasure::moment: k must be >= 0");
    double s = 0.0;
    for (const Atom& a : atoms_) s += a.mass * std::pow(a.location, k);
    const double h = grid_step();
    using GL = boost::math::quadrature::gauss<double, 5>;
    for (std::size_t j = 0; j + 1 < density_.size(); ++j) {
      const double dm = cumulative_[j + 1] - cumulative_[j];
      if (dm <= 0.0) continue;
      const double x0 = node(j);
      const double r0 = density_[j];
      const double r1 = density_[j + 1];
      const auto f = [&](double t) {
        const double u = (t - x0) / h;
        return std::pow(t, k) * ((1.0 - u) * r0 + u * r1);
      };
      const double lin_mass = 0.5 * h * (r0 + r1);
      if (lin_mass > 0.0) {
        s += dm * GL::integrate(f, x0, x0 + h) / lin_mass;
      } else {
        s += dm * std::pow(x0 + 0.5 * h, k);
      }
    }
    return s;
  }

  [[nodiscard]] double mean() const { return moment(1); }
  [[nodiscard]] double variance() const {
    const double m1 = moment(1);
    return moment(2) - m1 * m1;
  }

  /// G(z) = integral of 1/(z - t) and its derivative, Im z > 0.
  [[nodiscard]] CauchyValue cauchy(Complex z) const {
    CauchyValue v{0.0, 0.0};
    for (const Atom& a : atoms_) {
      const Complex d = z - a.location;
      v.g += a.mass / d;
      v.dg -= a.mass / (d * d);
    }
    if (continuous_mass() <= 0.0) return v;
    if (model_) {
      const CauchyValue c = model_->cauchy(z);
      v.g += c.g;
      v.dg += c.dg;
      return v;
    }
    // Exact transform of the piecewise-linear density, cell by cell.
    const double h = grid_step();
    for (std::size_t j : active_cells_) {
      const double xj = node(j);
      const double slope = slope_[j];
      const Complex dj = z - xj;
      const Complex dj1 = dj - h;
      const Complex ell = measure_detail::log1p_complex(h / dj1);
      const Complex a = pl_density_[j] + slope * dj;
      v.g += a * ell - slope * h;
      v.dg += slope * ell + a * (1.0 / dj - 1.0 / dj1);
    }
    return v;
  }

  friend bool operator==(const CompactMeasure& a, const CompactMeasure& b) {
    return a.atoms_ == b.atoms_ && a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.density_ == b.density_ &&
           a.cumulative_ == b.cumulative_;
  }

 private:
  void normalize_atoms() {
    for (const Atom& a : atoms_) {
      require(std::isfinite(a.location) && std::isfinite(a.mass) && a.mass >= 0.0,
              "CompactMeasure: atoms need finite location and nonnegative mass");
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms_) {
      if (a.mass == 0.0) continue;
      if (!merged.empty() && merged.back().location == a.location) {
        merged.back().mass += a.mass;
      } else {
        merged.push_back(a);
      }
    }
    atoms_ = std::move(merged);
  }

  void build_cell_tables() {
    const std::size_t n = density_.size();
    const double h = grid_step();
    double lin = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) lin += 0.5 * h * (density_[j] + density_[j + 1]);
    const double scale = lin > 0.0 ? continuous_mass() / lin : 0.0;
    pl_density_.assign(n, 0.0);
    slope_.assign(n, 0.0);
    active_cells_.clear();
    for (std::size_t j = 0; j < n; ++j) pl_density_[j] = density_[j] * scale;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      slope_[j] = (pl_density_[j + 1] - pl_density_[j]) / h;
      if (pl_density_[j] > 0.0 || pl_density_[j + 1] > 0.0) active_cells_.push_back(j);
    }
  }

  std::vector<Atom> atoms_;
  double lo_;
  double hi_;
  std::vector<double> density_;
  std::vector<double> cumulative_;
  std::shared_ptr<const ContinuousModel> model_;
  std::vector<double> pl_density_;
  std::vector<double> slope_;
  std::vector<std::size_t> active_cells_;
  QuantileMap quantile_map_;
};

/// G_mu(z) for Im z > 0.
inline Complex cauchy_transform(const CompactMeasure& mu, Complex z) {
  require(z.imag() > 0.0, "cauchy_transform: z must lie in the upper half-plane");
  return mu.cauchy(z).g;
}

// ---- Closed-form families -------------------------------------------------------------------

/// Semicircle law with the given variance v: density sqrt(4v - x^2) / (2 pi v) on [-2 sqrt v, 2 sqrt v].
inline ContinuousModel semicircle_model(double variance, double mass = 1.0) {
  require(variance > 0.0, "semicircle: variance must be positive");
  const double r = 2.0 * std::sqrt(variance);
  ContinuousModel m;
  m.mass = mass;
  m.lo = -r;
  m.hi = r;
  m.pdf = [=](double x) { return mass * std::sqrt(std::max(0.0, r * r - x * x)) / (2.0 * kPi * variance); };
  m.cdf = [=](double x) {
    const double th = std::asin(std::clamp(x / r, -1.0, 1.0));
    return mass * (0.5 + (th + std::sin(th) * std::cos(th)) / kPi);
  };
  m.cauchy = [=](Complex z) {
    const Complex s = measure_detail::edge_root(z, r);
    const Complex g = 2.0 / (z + s);
    return CauchyValue{mass * g, -mass * g / s};
  };
  return m;
}

inline CompactMeasure semicircle_measure(double variance, std::size_t n = kDefaultGridSize) {
  return CompactMeasure::from_model({}, semicircle_model(variance), n);
}

/// Arcsine law on [-r, r]: density 1 / (pi sqrt(r^2 - x^2)).
inline ContinuousModel arcsine_model(double radius = 2.0, double mass = 1.0) {
  require(radius > 0.0, "arcsine: radius must be positive");
  const double r = radius;
  ContinuousModel m;
  m.mass = mass;
  m.lo = -r;
  m.hi = r;
  m.pdf = [=](double x) {
    const double q = r * r - x * x;
    return q > 0.0 ? mass / (kPi * std::sqrt(q)) : std::numeric_limits<double>::infinity();
  };
  m.cdf = [=](double x) { return mass * (0.5 + std::asin(std::clamp(x / r, -1.0, 1.0)) / kPi); };
  m.cauchy = [=](Complex z) {
    const Complex s = measure_detail::edge_root(z, r);
    return CauchyValue{mass / s, -mass * z / (s * s * s)};
  };
  return m;
}

inline CompactMeasure arcsine_measure(double radius = 2.0, std::size_t n = kDefaultGridSize) {
  return CompactMeasure::from_model({}, arcsine_model(radius), n);
}

/// Kesten-McKay law of degree d = 2p: spectral law of sum_i (u_i + u_i^*) for p free Haar unitaries.
///
/// Density d sqrt(4(d-1) - x^2) / (2 pi (d^2 - x^2)) on [-2 sqrt(d-1), 2 sqrt(d-1)];
/// p = 1 is the arcsine law on [-2, 2].
inline ContinuousModel kesten_model(int p) {
  require(p >= 1, "kesten_measure: p must be >= 1");
  if (p == 1) return arcsine_model(2.0);
  const double d = 2.0 * p;
  const double r = 2.0 * std::sqrt(d - 1.0);
  ContinuousModel m;
  m.mass = 1.0;
  m.lo = -r;
  m.hi = r;
  m.pdf = [=](double x) { return d * std::sqrt(std::max(0.0, r * r - x * x)) / (2.0 * kPi * (d * d - x * x)); };
  // x = r sin(t): integrand becomes (d r^2 / 2 pi) cos^2 t / (d^2 - r^2 sin^2 t).
  m.cdf = [=](double x) {
    const double th = std::asin(std::clamp(x / r, -1.0, 1.0));
    const double q = d - 2.0;  // sqrt(d^2 - r^2)
    double at;
    if (std::abs(th) >= 0.5 * kPi) {
      at = std::copysign(0.5 * kPi, th);
    } else {
      at = std::atan(q * std::tan(th) / d);
    }
    const double v = d * r * r / (2.0 * kPi) * (th / (r * r) + (1.0 - d * d / (r * r)) * at / (d * q));
    return std::clamp(0.5 + v, 0.0, 1.0);
  };
  m.cauchy = [=](Complex z) {
    const Complex s = measure_detail::edge_root(z, r);
    const Complex den = (d - 2.0) * z + d * s;
    const Complex g = 2.0 * (d - 1.0) / den;
    const Complex dg = -2.0 * (d - 1.0) * ((d - 2.0) + d * z / s) / (den * den);
    return CauchyValue{g, dg};
  };
  return m;
}

inline CompactMeasure kesten_measure(int p, std::size_t n = kDefaultGridSize) {
  return CompactMeasure::from_model({}, kesten_model(p), n);
}

/// Uniform law on [a, b].
inline ContinuousModel uniform_model(double a, double b, double mass = 1.0) {
  require(a < b, "uniform: need a < b");
  ContinuousModel m;
  m.mass = mass;
  m.lo = a;
  m.hi = b;
  m.pdf = [=](double) { return mass / (b - a); };
  m.cdf = [=](double x) { return mass * std::clamp((x - a) / (b - a), 0.0, 1.0); };
  m.cauchy = [=](Complex z) {
    const Complex g = measure_detail::log1p_complex((b - a) / (z - b)) * (mass / (b - a));
    const Complex dg = (1.0 / (z - a) - 1.0 / (z - b)) * (mass / (b - a));
    return CauchyValue{g, dg};
  };
  return m;
}

inline CompactMeasure uniform_measure(double a, double b, std::size_t n = kDefaultGridSize) {
  return CompactMeasure::from_model({}, uniform_model(a, b), n);
}

inline CompactMeasure dirac(double a, std::size_t n = kDefaultGridSize) { return CompactMeasure::atomic({{a, 1.0}}, n); }

/// (delta_{-1} + delta_{1}) / 2.
inline CompactMeasure bernoulli_measure(std::size_t n = kDefaultGridSize) {
  return CompactMeasure::atomic({{-1.0, 0.5}, {1.0, 0.5}}, n);
}

/// (1 - t) delta_0 + t delta_1.
inline CompactMeasure projection_measure(double t, std::size_t n = kDefaultGridSize) {
  require(t >= 0.0 && t <= 1.0, "projection_measure: t must lie in [0, 1]");
  return CompactMeasure::atomic({{0.0, 1.0 - t}, {1.0, t}}, n);
}

/// Convex combination of models; all functions are summed with the weights.
inline ContinuousModel combine_models(const std::vector<std::pair<double, ContinuousModel>>& parts) {
  require(!parts.empty(), "combine_models: nothing to combine");
  ContinuousModel m;
  m.lo = std::numeric_limits<double>::infinity();
  m.hi = -m.lo;
  for (const auto& [w, p] : parts) {
    m.mass += w * p.mass;
    m.lo = std::min(m.lo, p.lo);
    m.hi = std::max(m.hi, p.hi);
  }
  m.pdf = [parts](double x) {
    double s = 0.0;
    for (const auto& [w, p] : parts) {
      if (x >= p.lo && x <= p.hi) s += w * p.pdf(x);
    }
    return s;
  };
  m.cdf = [parts](double x) {
    double s = 0.0;
    for (const auto& [w, p] : parts) s += w * (x <= p.lo ? 0.0 : (x >= p.hi ? p.mass : p.cdf(x)));
    return s;
  };
  m.cauchy = [parts](Complex z) {
    CauchyValue v{0.0, 0.0};
    for (const auto& [w, p] : parts) {
      const CauchyValue c = p.cauchy(z);
      v.g += w * c.g;
      v.dg += w * c.dg;
    }
    return v;
  };
  return m;
}

/// sum_i w_i mu_i. Closed forms are kept when every component has one.
inline CompactMeasure mixture(const std::vector<std::pair<double, CompactMeasure>>& parts,
                              std::size_t n = kDefaultGridSize) {
  require(!parts.empty(), "mixture: nothing to mix");
  double wsum = 0.0;
  std::vector<Atom> atoms;
  std::vector<std::pair<double, ContinuousModel>> models;
  bool all_models = true;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [w, m] : parts) {
    require(w >= 0.0, "mixture: weights must be nonnegative");
    wsum += w;
    for (const Atom& a : m.atoms()) atoms.push_back({a.location, w * a.mass});
    const auto [a, b] = m.support_hull();
    lo = std::min(lo, a);
    hi = std::max(hi, b);
    if (m.continuous_mass() > 0.0) {
      if (m.model()) {
        models.emplace_back(w, *m.model());
      } else {
        all_models = false;
      }
    }
  }
  require(std::abs(wsum - 1.0) <= kMassTolerance, "mixture: weights must sum to 1");
  if (all_models) {
    if (models.empty()) return CompactMeasure::atomic(std::move(atoms), n);
    return CompactMeasure::from_model(std::move(atoms), combine_models(models), n);
  }
  const GridSpec g = padded_grid(lo, hi, n);
  const double h = (g.hi - g.lo) / static_cast<double>(n - 1);
  std::vector<double> dens(n, 0.0), cum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.lo + h * static_cast<double>(i);
    for (const auto& [w, m] : parts) {
      if (m.continuous_mass() <= 0.0) continue;
      cum[i] += w * m.continuous_cdf(x);
      if (x >= m.grid_lo() && x <= m.grid_hi()) {
        const double pos = (x - m.grid_lo()) / m.grid_step();
        const auto j = std::min(static_cast<std::size_t>(pos), m.grid_size() - 2);
        const double u = pos - static_cast<double>(j);
        dens[i] += w * ((1.0 - u) * m.density()[j] + u * m.density()[j + 1]);
      }
    }
  }
  return CompactMeasure(std::move(atoms), g.lo, g.hi, std::move(dens), std::move(cum));
}

/// Push-forward under x -> scale * x + shift with scale > 0.
inline CompactMeasure affine_image(const CompactMeasure& mu, double scale, double shift) {
  require(scale > 0.0, "affine_image: scale must be positive");
  std::vector<Atom> atoms;
  for (const Atom& a : mu.atoms()) atoms.push_back({scale * a.location + shift, a.mass});
  if (const ContinuousModel* src = mu.model()) {
    const ContinuousModel base = *src;
    ContinuousModel m;
    m.mass = base.mass;
    m.lo = scale * base.lo + shift;
    m.hi = scale * base.hi + shift;
    m.pdf = [=](double y) { return base.pdf((y - shift) / scale) / scale; };
    m.cdf = [=](double y) { return base.cdf((y - shift) / scale); };
    m.cauchy = [=](Complex z) {
      const CauchyValue c = base.cauchy((z - shift) / scale);
      return CauchyValue{c.g / scale, c.dg / (scale * scale)};
    };
    return CompactMeasure::from_model(std::move(atoms), m, mu.grid_size());
  }
  std::vector<double> dens;
  for (double d : mu.density()) dens.push_back(d / scale);
  return CompactMeasure(std::move(atoms), scale * mu.grid_lo() + shift, scale * mu.grid_hi() + shift, std::move(dens),
                        mu.cumulative());
}

}  // namespace sfree::freelimit
