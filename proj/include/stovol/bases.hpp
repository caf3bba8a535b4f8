#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stovol/domain.hpp"
#include "stovol/error.hpp"
#include "stovol/quadvar.hpp"

namespace stovol {

enum class BasisFamily { Trig, PiecewisePoly };

inline std::string_view family_name(BasisFamily f) {
  return f == BasisFamily::Trig ? "trig" : "gp";
}

inline BasisFamily parse_family(std::string_view name) {
  if (name == "trig" || name == "Trig" || name == "T") return BasisFamily::Trig;
  if (name == "gp" || name == "GP" || name == "PiecewisePoly") return BasisFamily::PiecewisePoly;
  throw Error(ErrorKind::InvalidArgument, "unknown basis family '" + std::string(name) + "'");
}

/// One finite-dimensional space of the collection.
///
/// Trig: frequencies 0..m, dimension 2m+1.
/// PiecewisePoly: 2^depth dyadic cells, polynomials of degree <= degree on each,
/// dimension 2^depth (degree+1).
struct BasisSpec {
  BasisFamily family = BasisFamily::Trig;
  int m = 0;
  int depth = 0;
  int degree = 0;

  static BasisSpec trig(int m) { return {BasisFamily::Trig, m, 0, 0}; }
  static BasisSpec piecewise(int depth, int degree) {
    return {BasisFamily::PiecewisePoly, 0, depth, degree};
  }
  static BasisSpec trig_dim(int dim) {
    require(dim >= 1 && dim % 2 == 1, ErrorKind::InvalidArgument,
            "trig dimension must be a positive odd integer");
    return trig((dim - 1) / 2);
  }

  int dimension() const {
    return family == BasisFamily::Trig ? 2 * m + 1 : (1 << depth) * (degree + 1);
  }

  std::string label() const {
    if (family == BasisFamily::Trig) return "trig(D=" + std::to_string(dimension()) + ")";
    return "gp(p=" + std::to_string(depth) + ",r=" + std::to_string(degree) + ")";
  }

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

/// Fourier system on [0,1]: phi_1 = 1, phi_{2q} = sqrt2 cos(2 pi q x),
/// phi_{2q+1} = sqrt2 sin(2 pi q x).
inline double trig_eval(int j, double x) {
  require(j >= 1, ErrorKind::InvalidArgument, "trig_eval: index must be >= 1");
  require(x >= 0.0 && x <= 1.0, ErrorKind::InvalidArgument, "trig_eval: x outside [0,1]");
  if (j == 1) return 1.0;
  const int q = j / 2;
  const double arg = 2.0 * std::numbers::pi * q * x;
  return std::numbers::sqrt2 * (j % 2 == 0 ? std::cos(arg) : std::sin(arg));
}

/// Legendre polynomial P_n(t) on [-1, 1] by the three-term recurrence.
inline double legendre(int n, double t) {
  if (n == 0) return 1.0;
  double p0 = 1.0;
  double p1 = t;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Index of the dyadic cell containing x; x = 1 belongs to the last cell.
inline int dyadic_cell(int depth, double x) {
  const int cells = 1 << depth;
  const int idx = static_cast<int>(std::floor(x * cells));
  return std::min(idx, cells - 1);
}

/// Orthonormal shifted Legendre polynomial of the given degree on `cell`,
/// zero elsewhere.
inline double piecewise_eval(int depth, int cell, int degree, double x) {
  require(x >= 0.0 && x <= 1.0, ErrorKind::InvalidArgument, "piecewise_eval: x outside [0,1]");
  if (dyadic_cell(depth, x) != cell) return 0.0;
  const double width = std::ldexp(1.0, -depth);
  const double t = 2.0 * (x - cell * width) / width - 1.0;
  return std::sqrt((2.0 * degree + 1.0) / width) * legendre(degree, t);
}

/// Writes the D basis values at x into `row`. Piecewise columns are ordered
/// cell-major, degree-minor.
inline void basis_row(const BasisSpec& spec, double x, std::span<double> row) {
  const int dim = spec.dimension();
  if (spec.family == BasisFamily::Trig) {
    row[0] = 1.0;
    for (int q = 1; q <= spec.m; ++q) {
      const double arg = 2.0 * std::numbers::pi * q * x;
      row[2 * q - 1] = std::numbers::sqrt2 * std::cos(arg);
      row[2 * q] = std::numbers::sqrt2 * std::sin(arg);
    }
    return;
  }
  std::fill(row.begin(), row.begin() + dim, 0.0);
  const int cell = dyadic_cell(spec.depth, x);
  const double width = std::ldexp(1.0, -spec.depth);
  const double t = 2.0 * (x - cell * width) / width - 1.0;
  const int base = cell * (spec.degree + 1);
  for (int r = 0; r <= spec.degree; ++r) {
    row[base + r] = std::sqrt((2.0 * r + 1.0) / width) * legendre(r, t);
  }
}

inline Eigen::MatrixXd design_matrix(const BasisSpec& spec, std::span<const double> xs) {
  const int dim = spec.dimension();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(xs.size()), dim);
  std::vector<double> row(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] >= 0.0 && xs[i] <= 1.0, ErrorKind::InvalidArgument,
            "design_matrix: point outside [0,1]");
    basis_row(spec, xs[i], row);
    for (int j = 0; j < dim; ++j) out(static_cast<Eigen::Index>(i), j) = row[j];
  }
  return out;
}

/// Largest dimension allowed for N blocks of length Delta: floor(N Delta / ln^1.5 N), at least 1.
inline int max_dimension(std::size_t blocks, double block_length) {
  if (blocks < 2) return 1;
  const double n = static_cast<double>(blocks);
  const double cap = std::floor(n * block_length / std::pow(std::log(n), 1.5));
  return cap < 1.0 ? 1 : static_cast<int>(cap);
}

inline constexpr int kDefaultMaxDegree = 4;

/// Trig: every odd dimension up to max_dim. PiecewisePoly: every (depth, degree)
/// with degree <= max_degree and 2^depth (degree+1) <= max_dim, depth-major.
inline std::vector<BasisSpec> collection(BasisFamily family, int max_dim,
                                         int max_degree = kDefaultMaxDegree) {
  require(max_dim >= 1, ErrorKind::InvalidArgument, "collection: max_dim must be >= 1");
  std::vector<BasisSpec> out;
  if (family == BasisFamily::Trig) {
    for (int m = 0; 2 * m + 1 <= max_dim; ++m) out.push_back(BasisSpec::trig(m));
    return out;
  }
  require(max_degree >= 0, ErrorKind::InvalidArgument, "collection: max_degree must be >= 0");
  for (int p = 0; (1 << p) <= max_dim; ++p) {
    for (int r = 0; r <= max_degree && (1 << p) * (r + 1) <= max_dim; ++r) {
      out.push_back(BasisSpec::piecewise(p, r));
    }
  }
  return out;
}

inline constexpr double kDefaultQuantileLo = 0.025;
inline constexpr double kDefaultQuantileHi = 0.975;

/// [lo, hi] = empirical q_lo and q_hi quantiles of the realized variation blocks.
inline EstimationDomain domain_from_data(const QuadVarSeries& qv, double q_lo = kDefaultQuantileLo,
                                         double q_hi = kDefaultQuantileHi) {
  require(0.0 <= q_lo && q_lo < q_hi && q_hi <= 1.0, ErrorKind::InvalidArgument,
          "domain_from_data: need 0 <= q_lo < q_hi <= 1");
  require(qv.blocks() >= 10, ErrorKind::Degenerate,
          "domain_from_data: need at least 10 blocks, got " + std::to_string(qv.blocks()));
  const double lo = empirical_quantile(qv.values, q_lo);
  const double hi = empirical_quantile(qv.values, q_hi);
  require(lo < hi, ErrorKind::Degenerate, "domain_from_data: degenerate sample, quantiles coincide");
  return EstimationDomain(lo, hi);
}

}  // namespace stovol
