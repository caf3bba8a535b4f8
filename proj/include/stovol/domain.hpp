#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "stovol/error.hpp"

namespace stovol {

/// Compact estimation interval [lo, hi] and its affine map onto [0, 1].
/// Estimators are supported on this interval and vanish outside it.
struct EstimationDomain {
  double lo = 0.0;
  double hi = 1.0;

  EstimationDomain() = default;
  EstimationDomain(double lo_, double hi_) : lo(lo_), hi(hi_) {
    require(lo < hi, ErrorKind::Degenerate, "estimation domain needs lo < hi");
  }

  bool contains(double v) const { return v >= lo && v <= hi; }
  double to_unit(double v) const { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); }
  double from_unit(double x) const { return lo + x * (hi - lo); }
  double width() const { return hi - lo; }

  friend bool operator==(const EstimationDomain&, const EstimationDomain&) = default;
};

/// Empirical quantile by linear interpolation between order statistics:
/// h = (n-1) p, result = x_(floor h) + (h - floor h)(x_(floor h + 1) - x_(floor h)).
inline double empirical_quantile(std::span<const double> data, double p) {
  require(!data.empty(), ErrorKind::InvalidArgument, "empirical_quantile: empty sample");
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidArgument,
          "empirical_quantile: level must lie in [0, 1]");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace stovol
