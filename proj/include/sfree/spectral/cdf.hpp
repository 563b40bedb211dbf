#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfree/core.hpp"

namespace sfree::spectral {

/// Right-continuous nondecreasing step function, F(t) = cumulative[j] on [x_j, x_{j+1}).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> jump_points, std::vector<double> cumulative_values)
      : jumps_(std::move(jump_points)), cum_(std::move(cumulative_values)) {
    require(!jumps_.empty() && jumps_.size() == cum_.size(), "StepFunction: need matching nonempty arrays");
    for (std::size_t i = 0; i < jumps_.size(); ++i) {
      require(std::isfinite(jumps_[i]), "StepFunction: jump points must be finite");
      require(cum_[i] >= 0.0 && cum_[i] <= 1.0, "StepFunction: values must lie in [0, 1]");
      if (i > 0) {
        require(jumps_[i] > jumps_[i - 1], "StepFunction: jump points must be strictly ascending");
        require(cum_[i] >= cum_[i - 1], "StepFunction: values must be nondecreasing");
      }
    }
    require(cum_.back() == 1.0, "StepFunction: final value must be 1");
  }

  [[nodiscard]] const std::vector<double>& jump_points() const { return jumps_; }
  [[nodiscard]] const std::vector<double>& cumulative_values() const { return cum_; }

  [[nodiscard]] double operator()(double t) const {
    const auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t);
    if (it == jumps_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
  }

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> jumps_;
  std::vector<double> cum_;
};

/// F(t) = #{i : lambda_i <= t} / N; equal values merge into one jump.
inline StepFunction empirical_cdf(std::vector<double> eigenvalues) {
  require(!eigenvalues.empty(), "empirical_cdf: empty list");
  for (double v : eigenvalues) require(std::isfinite(v), "empirical_cdf: non-finite eigenvalue");
  std::sort(eigenvalues.begin(), eigenvalues.end());
  const auto n = static_cast<double>(eigenvalues.size());
  std::vector<double> x;
  std::vector<double> c;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (i + 1 < eigenvalues.size() && eigenvalues[i + 1] == eigenvalues[i]) continue;
    x.push_back(eigenvalues[i]);
    c.push_back(static_cast<double>(i + 1) / n);
  }
  return StepFunction(std::move(x), std::move(c));
}

/// inf{t : F(t) >= s} for s in (0, 1].
inline double generalized_inverse(const StepFunction& f, double s) {
  require(s > 0.0 && s <= 1.0, "generalized_inverse: s must lie in (0, 1]");
  const auto& c = f.cumulative_values();
  const auto it = std::lower_bound(c.begin(), c.end(), s);
  return f.jump_points()[static_cast<std::size_t>(it - c.begin())];
}

inline constexpr std::size_t kDefaultQuantileGrid = 2048;

/// Complex-valued map on [0, 1], sampled at m uniform points s_j = j/(m-1) and
/// interpolated linearly between them.
class QuantileMap {
 public:
  QuantileMap() = default;
  explicit QuantileMap(std::vector<Complex> values) : values_(std::move(values)) {
    require(values_.size() >= 2, "QuantileMap: need at least two grid points");
    for (const Complex& v : values_) {
      require(std::isfinite(v.real()) && std::isfinite(v.imag()), "QuantileMap: values must be finite");
    }
  }

  template <class F>
  static QuantileMap from_function(F&& f, std::size_t m = kDefaultQuantileGrid) {
    require(m >= 2, "QuantileMap: need at least two grid points");
    std::vector<Complex> v(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = static_cast<Complex>(f(grid_point(j, m)));
    return QuantileMap(std::move(v));
  }

  /// Samples s -> F^{-1}(s); at s = 0 the smallest jump point is used.
  static QuantileMap from_step(const StepFunction& f, std::size_t m = kDefaultQuantileGrid) {
    return from_function(
        [&](double s) { return s <= 0.0 ? f.jump_points().front() : generalized_inverse(f, s); }, m);
  }

  [[nodiscard]] static double grid_point(std::size_t j, std::size_t m) {
    return static_cast<double>(j) / static_cast<double>(m - 1);
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] const std::vector<Complex>& values() const { return values_; }
  [[nodiscard]] double grid(std::size_t j) const { return grid_point(j, values_.size()); }

  [[nodiscard]] Complex operator()(double s) const {
    require(s >= 0.0 && s <= 1.0, "QuantileMap: argument outside [0, 1]");
    const double pos = s * static_cast<double>(values_.size() - 1);
    const auto j = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
    const double w = pos - static_cast<double>(j);
    return (1.0 - w) * values_[j] + w * values_[j + 1];
  }

  friend bool operator==(const QuantileMap&, const QuantileMap&) = default;

 private:
  std::vector<Complex> values_;
};

/// max_j |a(s_j) - b(s_j)| on a common grid.
inline double sup_distance(const QuantileMap& a, const QuantileMap& b) {
  require(a.size() == b.size(), "sup_distance: grids differ");
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a.values()[j] - b.values()[j]));
  return d;
}

}  // namespace sfree::spectral
