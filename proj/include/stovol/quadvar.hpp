#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stovol/domain.hpp"
#include "stovol/error.hpp"
#include "stovol/sampling.hpp"

namespace stovol {

/// Realized quadratic variation blocks.
///
/// values[i] = (1 / (k step)) * sum of the k squared increments of block i.
/// `integrated_average` optionally holds the matching block averages of the
/// true volatility; it is a diagnostic and never feeds the estimators.
struct QuadVarSeries {
  std::vector<double> values;
  int k = 1;
  double step = 0.0;
  double block_length = 0.0;  // k * step
  std::optional<std::vector<double>> integrated_average;

  std::size_t blocks() const { return values.size(); }
};

enum class Target { Drift, DiffSq };

inline const char* target_name(Target t) { return t == Target::Drift ? "drift" : "diffusion"; }

/// Design/response pairs (x_i, y_i), i = 0..M-1, with x_i = V^_i and
/// y_i the response built from blocks i+1 and i+2.
struct RegressionSample {
  Target target = Target::Drift;
  std::vector<double> x;
  std::vector<double> y;
  double block_length = 0.0;
  EstimationDomain domain;

  std::size_t size() const { return x.size(); }
};

/// Leftover increments at the end (n not divisible by k) are dropped.
inline QuadVarSeries quad_var(const ObservationSet& obs, int k) {
  require(k >= 1, ErrorKind::InvalidArgument, "quad_var: k must be >= 1");
  const std::size_t n = obs.increments.size();
  const auto kk = static_cast<std::size_t>(k);
  require(kk <= n, ErrorKind::InvalidArgument,
          "quad_var: k=" + std::to_string(k) + " exceeds the " + std::to_string(n) +
              " observed increments");
  QuadVarSeries qv;
  qv.k = k;
  qv.step = obs.step;
  qv.block_length = k * obs.step;
  const std::size_t blocks = n / kk;
  qv.values.reserve(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < kk; ++j) {
      const double dx = obs.increments[i * kk + j];
      ss += dx * dx;
    }
    qv.values.push_back(ss / qv.block_length);
  }
  return qv;
}

/// Block averages (1/Delta) * integral of V over block i, from the integrated series.
inline std::vector<double> integrated_average(const IntegratedSeries& integrated, int k) {
  require(k >= 1, ErrorKind::InvalidArgument, "integrated_average: k must be >= 1");
  const auto kk = static_cast<std::size_t>(k);
  const std::size_t blocks = integrated.values.size() / kk;
  const double block_length = k * integrated.step;
  std::vector<double> out;
  out.reserve(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kk; ++j) s += integrated.values[i * kk + j];
    out.push_back(s / block_length);
  }
  return out;
}

/// Pairs V^_i with Y_{i+1}: the increment from block i+1 to i+2.
/// Drift: (V^_{i+2} - V^_{i+1}) / Delta. Diffusion: 1.5 (V^_{i+2} - V^_{i+1})^2 / Delta.
inline RegressionSample build_regression(const QuadVarSeries& qv, Target target,
                                         const EstimationDomain& domain = {}) {
  const std::size_t n = qv.blocks();
  require(n >= 3, ErrorKind::InvalidArgument,
          "build_regression: need at least 3 blocks, got " + std::to_string(n));
  require(qv.block_length > 0.0, ErrorKind::InvalidArgument,
          "build_regression: block length must be positive");
  RegressionSample s;
  s.target = target;
  s.block_length = qv.block_length;
  s.domain = domain;
  s.x.reserve(n - 2);
  s.y.reserve(n - 2);
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double diff = qv.values[i + 2] - qv.values[i + 1];
    s.x.push_back(qv.values[i]);
    s.y.push_back(target == Target::Drift ? diff / qv.block_length
                                          : 1.5 * diff * diff / qv.block_length);
  }
  return s;
}

}  // namespace stovol
