#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "sfree/core.hpp"

namespace sfree::spectral {

/// Union of disjoint closed intervals in ascending order.
class SupportSet {
 public:
  using Interval = std::pair<double, double>;

  SupportSet() = default;
  explicit SupportSet(std::vector<Interval> intervals) : iv_(std::move(intervals)) {
    require(!iv_.empty(), "SupportSet: must be nonempty");
    for (std::size_t i = 0; i < iv_.size(); ++i) {
      require(std::isfinite(iv_[i].first) && std::isfinite(iv_[i].second) && iv_[i].first <= iv_[i].second,
              "SupportSet: each interval needs finite a <= b");
      if (i > 0) require(iv_[i].first > iv_[i - 1].second, "SupportSet: intervals must be disjoint and ascending");
    }
  }

  /// Sorts and merges overlapping or touching intervals.
  static SupportSet merged(std::vector<Interval> intervals) {
    require(!intervals.empty(), "SupportSet: must be nonempty");
    std::sort(intervals.begin(), intervals.end());
    std::vector<Interval> out;
    for (const auto& iv : intervals) {
      if (!out.empty() && iv.first <= out.back().second) {
        out.back().second = std::max(out.back().second, iv.second);
      } else {
        out.push_back(iv);
      }
    }
    return SupportSet(std::move(out));
  }

  [[nodiscard]] const std::vector<Interval>& intervals() const { return iv_; }
  [[nodiscard]] double lower() const { return iv_.front().first; }
  [[nodiscard]] double upper() const { return iv_.back().second; }

  [[nodiscard]] double distance(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : iv_) {
      if (x < a) {
        d = std::min(d, a - x);
      } else if (x > b) {
        d = std::min(d, x - b);
      } else {
        return 0.0;
      }
    }
    return d;
  }

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::vector<Interval> iv_;
};

/// True iff every eigenvalue lies strictly within epsilon of the support.
inline bool support_neighborhood_check(const std::vector<double>& eigenvalues, const SupportSet& support,
                                       double epsilon) {
  require(epsilon > 0.0, "support_neighborhood_check: epsilon must be positive");
  require(!support.intervals().empty(), "support_neighborhood_check: empty support");
  return std::all_of(eigenvalues.begin(), eigenvalues.end(),
                     [&](double x) { return support.distance(x) < epsilon; });
}

/// sup_t |F_sample(t) - cdf(t)| for a continuous-or-atomic reference cdf.
///
/// Checks both one-sided limits at every sample point, so atoms in either
/// distribution are handled. `cdf_left(t)` must return P(X < t).
template <class Cdf, class CdfLeft>
double kolmogorov_distance(std::vector<double> sample, Cdf&& cdf, CdfLeft&& cdf_left) {
  require(!sample.empty(), "kolmogorov_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j + 1 < sample.size() && sample[j + 1] == sample[i]) ++j;
    const double before = static_cast<double>(i) / n;
    const double after = static_cast<double>(j + 1) / n;
    d = std::max({d, std::abs(after - cdf(sample[i])), std::abs(before - cdf_left(sample[i]))});
    i = j + 1;
  }
  return d;
}

template <class Cdf>
double kolmogorov_distance(std::vector<double> sample, Cdf&& cdf) {
  return kolmogorov_distance(std::move(sample), cdf, cdf);
}

}  // namespace sfree::spectral
