#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stovol/bases.hpp"
#include "stovol/domain.hpp"
#include "stovol/error.hpp"
#include "stovol/lsq_estimator.hpp"
#include "stovol/quadvar.hpp"

namespace stovol {

enum class PenaltyMode { Practical, Theoretical };

inline const char* penalty_mode_name(PenaltyMode m) {
  return m == PenaltyMode::Practical ? "practical" : "theoretical";
}

inline constexpr double kDefaultKappa = 2.0;

/// Level of the quantile used when calibrating the diffusion constant.
inline constexpr double kDiffusionQuantileLevel = 0.995;

/// Penalty constants for one target.
///
/// `s_sq` stands in for sigma_1^2 / Delta (drift) or sigma_1^4 (diffusion) in
/// practical mode; in theoretical mode it is sigma_1^2 (drift) or sigma_1^4
/// (diffusion) itself.
struct PenaltyParams {
  Target target = Target::Drift;
  double s_sq = 1.0;
  std::size_t points = 1;  // regression-point count M
  double block_length = 1.0;
  double kappa = kDefaultKappa;
  PenaltyMode mode = PenaltyMode::Practical;
};

/// Practical: kappa (s_sq / M) (D + ln^2.5(D + 1)).
/// Theoretical: kappa s_sq D / (M Delta) for the drift, kappa s_sq D / M for the diffusion.
inline double penalty(const BasisSpec& spec, const PenaltyParams& p) {
  const double dim = spec.dimension();
  require(dim >= 1, ErrorKind::InvalidArgument, "penalty: dimension must be >= 1");
  require(p.points >= 1, ErrorKind::InvalidArgument, "penalty: need at least one regression point");
  const double m = static_cast<double>(p.points);
  if (p.mode == PenaltyMode::Practical) {
    return p.kappa * (p.s_sq / m) * (dim + std::pow(std::log(dim + 1.0), 2.5));
  }
  if (p.target == Target::Drift) return p.kappa * p.s_sq * dim / (m * p.block_length);
  return p.kappa * p.s_sq * dim / m;
}

struct SelectionRow {
  BasisSpec spec;
  double contrast = 0.0;
  double penalty = 0.0;
  double criterion = 0.0;
};

struct SelectionOutcome {
  std::vector<SelectionRow> table;  // feasible specs, collection order
  std::vector<Fit> fits;            // parallel to table
  std::vector<BasisSpec> infeasible;
  std::size_t chosen = 0;
  PenaltyParams params;

  const Fit& chosen_fit() const { return fits.at(chosen); }
  const SelectionRow& chosen_row() const { return table.at(chosen); }
};

/// Fits of every feasible spec. A spec with fewer retained points than its
/// dimension is infeasible.
struct FitSet {
  std::vector<Fit> fits;
  std::vector<BasisSpec> infeasible;
};

inline FitSet fit_collection(const RetainedPoints& pts, std::span<const BasisSpec> specs) {
  FitSet out;
  for (const BasisSpec& s : specs) {
    if (pts.size() < static_cast<std::size_t>(s.dimension())) {
      out.infeasible.push_back(s);
      continue;
    }
    out.fits.push_back(fit(pts, s));
  }
  return out;
}

/// Argmin of contrast + penalty; ties go to the smaller dimension, then to the
/// earlier spec.
inline SelectionOutcome select_from_fits(FitSet fits, const PenaltyParams& params) {
  require(!fits.fits.empty(), ErrorKind::Infeasible, "select: no feasible spec in the collection");
  SelectionOutcome out;
  out.params = params;
  out.infeasible = std::move(fits.infeasible);
  out.fits = std::move(fits.fits);
  out.table.reserve(out.fits.size());
  for (std::size_t i = 0; i < out.fits.size(); ++i) {
    const Fit& f = out.fits[i];
    SelectionRow row;
    row.spec = f.spec;
    row.contrast = f.contrast;
    row.penalty = penalty(f.spec, params);
    row.criterion = row.contrast + row.penalty;
    out.table.push_back(row);
    const SelectionRow& best = out.table[out.chosen];
    if (row.criterion < best.criterion ||
        (row.criterion == best.criterion && row.spec.dimension() < best.spec.dimension())) {
      out.chosen = i;
    }
  }
  return out;
}

inline SelectionOutcome select(const RetainedPoints& pts, std::span<const BasisSpec> specs,
                               const PenaltyParams& params) {
  return select_from_fits(fit_collection(pts, specs), params);
}

inline SelectionOutcome select(const RegressionSample& sample, std::span<const BasisSpec> specs,
                               const PenaltyParams& params) {
  return select(restrict_to_domain(sample), specs, params);
}

/// Replaces a calibration constant that is zero up to rounding (at most
/// eps * mean(y^2)) by that floor, or by the smallest normal double when the
/// responses vanish.
struct GuardedConstant {
  double value = 0.0;
  bool guarded = false;
};

inline GuardedConstant guard_constant(double s_sq, std::span<const double> responses) {
  double second_moment = 0.0;
  for (double y : responses) second_moment += y * y;
  if (!responses.empty()) second_moment /= static_cast<double>(responses.size());
  double floor = std::numeric_limits<double>::epsilon() * second_moment;
  if (!(floor > 0.0) || !std::isfinite(floor)) floor = std::numeric_limits<double>::min();
  if (s_sq > floor && std::isfinite(s_sq)) return {s_sq, false};
  return {floor, true};
}

/// Record of the two-stage diffusion calibration.
struct DiffCalibration {
  SelectionOutcome preliminary;
  double preliminary_s_sq = 0.0;  // 2 max_m contrast(sigma^2_m)
  bool preliminary_guarded = false;
  double quantile = 0.0;          // 99.5% quantile of the preliminary fit over the design
  double s2 = 0.0;                // twice the quantile
  double s2_sq = 0.0;             // constant used by the final diffusion penalty
  bool guarded = false;
};

/// Stage 1 selects with s_sq = 2 max_m contrast; stage 2 takes s2 as twice the
/// 99.5% quantile of the preliminary estimator over the blocks inside the
/// domain and returns s2^2.
inline DiffCalibration calibrate_diff_constant(const RegressionSample& diff_sample,
                                               std::span<const double> qv_values,
                                               std::span<const BasisSpec> specs,
                                               double kappa = kDefaultKappa) {
  require(diff_sample.target == Target::DiffSq, ErrorKind::InvalidArgument,
          "calibrate_diff_constant: sample must target the diffusion");
  const RetainedPoints pts = restrict_to_domain(diff_sample);
  FitSet fits = fit_collection(pts, specs);
  require(!fits.fits.empty(), ErrorKind::Infeasible,
          "calibrate_diff_constant: empty feasible collection");

  double max_contrast = 0.0;
  for (const Fit& f : fits.fits) max_contrast = std::max(max_contrast, f.contrast);
  const GuardedConstant stage1 = guard_constant(2.0 * max_contrast, pts.y);

  PenaltyParams params;
  params.target = Target::DiffSq;
  params.s_sq = stage1.value;
  params.points = pts.size();
  params.block_length = diff_sample.block_length;
  params.kappa = kappa;

  DiffCalibration cal;
  cal.preliminary_s_sq = stage1.value;
  cal.preliminary_guarded = stage1.guarded;
  cal.preliminary = select_from_fits(std::move(fits), params);

  std::vector<double> fitted;
  const Fit& prelim = cal.preliminary.chosen_fit();
  for (double v : qv_values) {
    if (prelim.domain.contains(v)) fitted.push_back(evaluate(prelim, v));
  }
  require(!fitted.empty(), ErrorKind::Infeasible,
          "calibrate_diff_constant: no block inside the estimation domain");
  cal.quantile = empirical_quantile(fitted, kDiffusionQuantileLevel);
  cal.s2 = 2.0 * cal.quantile;
  const GuardedConstant stage2 = guard_constant(cal.s2 * cal.s2, pts.y);
  cal.s2_sq = stage2.value;
  cal.guarded = stage1.guarded || stage2.guarded;
  return cal;
}

inline DiffCalibration calibrate_diff_constant(const RegressionSample& diff_sample,
                                               const QuadVarSeries& qv,
                                               std::span<const BasisSpec> specs,
                                               double kappa = kDefaultKappa) {
  return calibrate_diff_constant(diff_sample, qv.values, specs, kappa);
}

/// max over blocks inside the domain of the diffusion estimate, divided by Delta.
inline double calibrate_drift_constant(const Fit& diff_fit, std::span<const double> qv_values,
                                       double block_length) {
  require(block_length > 0.0, ErrorKind::InvalidArgument,
          "calibrate_drift_constant: block length must be positive");
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double v : qv_values) {
    if (!diff_fit.domain.contains(v)) continue;
    best = std::max(best, evaluate(diff_fit, v));
    any = true;
  }
  require(any, ErrorKind::Infeasible, "calibrate_drift_constant: no block inside the estimation domain");
  return best / block_length;
}

inline double calibrate_drift_constant(const Fit& diff_fit, const QuadVarSeries& qv,
                                       double block_length) {
  return calibrate_drift_constant(diff_fit, qv.values, block_length);
}

}  // namespace stovol
