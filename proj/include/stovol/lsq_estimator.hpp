#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stovol/bases.hpp"
#include "stovol/domain.hpp"
#include "stovol/error.hpp"
#include "stovol/quadvar.hpp"

namespace stovol {

/// Singular values below this fraction of the largest one are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Least-squares fit on one space of the collection.
struct Fit {
  BasisSpec spec;
  std::vector<double> coeffs;
  double contrast = 0.0;  // mean squared residual over retained points
  EstimationDomain domain;
  std::size_t retained = 0;
  Target target = Target::Drift;
  int rank = 0;
};

/// Sample points inside the estimation domain, mapped to [0,1].
struct RetainedPoints {
  std::vector<double> unit_x;
  std::vector<double> y;
  EstimationDomain domain;
  Target target = Target::Drift;

  std::size_t size() const { return unit_x.size(); }
};

inline RetainedPoints restrict_to_domain(const RegressionSample& sample) {
  require(sample.x.size() == sample.y.size(), ErrorKind::InvalidArgument,
          "regression sample: x and y lengths differ");
  RetainedPoints pts;
  pts.domain = sample.domain;
  pts.target = sample.target;
  for (std::size_t i = 0; i < sample.x.size(); ++i) {
    if (!sample.domain.contains(sample.x[i])) continue;
    require(std::isfinite(sample.y[i]), ErrorKind::InvalidArgument,
            "regression sample: non-finite response at index " + std::to_string(i));
    pts.unit_x.push_back(sample.domain.to_unit(sample.x[i]));
    pts.y.push_back(sample.y[i]);
  }
  return pts;
}

struct LeastSquaresSolution {
  Eigen::VectorXd coeffs;
  int rank = 0;
};

/// Minimum-norm solution of min |A b - y|. Tall systems are reduced by a
/// Householder QR first and the SVD is taken of the triangular factor, which
/// has the same singular values as A.
inline LeastSquaresSolution min_norm_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  LeastSquaresSolution out;
  if (rows < cols) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kRankTolerance);
    out.coeffs = svd.solve(y);
    out.rank = static_cast<int>(svd.rank());
    return out;
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::VectorXd qty = qr.householderQ().transpose() * y;
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(kRankTolerance);
  out.coeffs = svd.solve(qty.head(cols));
  out.rank = static_cast<int>(svd.rank());
  return out;
}

inline Fit fit(const RetainedPoints& pts, const BasisSpec& spec) {
  require(pts.size() > 0, ErrorKind::Infeasible, "fit: no sample point inside the estimation domain");
  const Eigen::MatrixXd design = design_matrix(spec, pts.unit_x);
  const Eigen::Map<const Eigen::VectorXd> y(pts.y.data(), static_cast<Eigen::Index>(pts.y.size()));
  const LeastSquaresSolution sol = min_norm_least_squares(design, y);

  Fit f;
  f.spec = spec;
  f.coeffs.assign(sol.coeffs.data(), sol.coeffs.data() + sol.coeffs.size());
  f.contrast = (y - design * sol.coeffs).squaredNorm() / static_cast<double>(pts.size());
  f.domain = pts.domain;
  f.retained = pts.size();
  f.target = pts.target;
  f.rank = sol.rank;
  return f;
}

inline Fit fit(const RegressionSample& sample, const BasisSpec& spec) {
  return fit(restrict_to_domain(sample), spec);
}

/// Fitted function at volatility v; zero outside the estimation domain.
inline double evaluate(const Fit& f, double v) {
  if (!f.domain.contains(v)) return 0.0;
  std::vector<double> row(f.coeffs.size());
  basis_row(f.spec, f.domain.to_unit(v), row);
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += f.coeffs[j] * row[j];
  return s;
}

struct EmpiricalError {
  double value = 0.0;
  std::size_t retained = 0;
};

/// Mean of (truth(v) - fitted(v))^2 over the design points inside the domain.
inline EmpiricalError empirical_error(const Fit& f, const std::function<double(double)>& truth,
                                      std::span<const double> design) {
  require(!design.empty(), ErrorKind::InvalidArgument, "empirical_error: empty design");
  EmpiricalError e;
  double acc = 0.0;
  for (double v : design) {
    if (!f.domain.contains(v)) continue;
    const double d = truth(v) - evaluate(f, v);
    acc += d * d;
    ++e.retained;
  }
  require(e.retained > 0, ErrorKind::Infeasible, "empirical_error: no design point inside the domain");
  e.value = acc / static_cast<double>(e.retained);
  return e;
}

/// Fitted curve on a uniform grid over the estimation domain.
struct CurvePoint {
  double v = 0.0;
  double fhat = 0.0;
};

inline std::vector<CurvePoint> fitted_curve(const Fit& f, int points = 512) {
  std::vector<CurvePoint> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    double v = f.domain.lo;
    if (i == points - 1) {
      v = f.domain.hi;
    } else if (i > 0) {
      v = f.domain.from_unit(static_cast<double>(i) / (points - 1));
    }
    out.push_back({v, evaluate(f, v)});
  }
  return out;
}

}  // namespace stovol
