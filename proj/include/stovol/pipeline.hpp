#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "stovol/bases.hpp"
#include "stovol/error.hpp"
#include "stovol/lsq_estimator.hpp"
#include "stovol/model_selection.hpp"
#include "stovol/quadvar.hpp"
#include "stovol/sampling.hpp"

namespace stovol {

struct EstimationSettings {
  BasisFamily family = BasisFamily::Trig;
  int max_dim = 0;  // 0: floor(N Delta / ln^1.5 N)
  int max_degree = kDefaultMaxDegree;
  double q_lo = kDefaultQuantileLo;
  double q_hi = kDefaultQuantileHi;
  PenaltyMode mode = PenaltyMode::Practical;
  double kappa = kDefaultKappa;
  double sigma1_sq = 0.0;  // bound on sigma^2, theoretical mode only
};

/// Everything produced by one estimation run on one realized-variation series.
struct Estimation {
  QuadVarSeries qv;
  EstimationDomain domain;
  int max_dim = 1;
  std::vector<BasisSpec> specs;
  RegressionSample drift_sample;
  RegressionSample diff_sample;
  std::optional<DiffCalibration> calibration;
  double drift_s_sq = 0.0;
  bool drift_guarded = false;
  SelectionOutcome diffusion;
  SelectionOutcome drift;

  bool guarded() const { return drift_guarded || (calibration && calibration->guarded); }
};

/// Domain, collection, diffusion calibration and selection, then drift
/// calibration from the selected diffusion estimate and drift selection.
///
/// The preliminary diffusion stage always runs on the trigonometric
/// collection; the final selections use `settings.family`.
inline Estimation estimate(QuadVarSeries qv, const EstimationSettings& settings) {
  Estimation est;
  est.domain = domain_from_data(qv, settings.q_lo, settings.q_hi);
  const int cap = max_dimension(qv.blocks(), qv.block_length);
  est.max_dim = settings.max_dim > 0 ? std::min(settings.max_dim, cap) : cap;
  est.specs = collection(settings.family, est.max_dim, settings.max_degree);
  for (const BasisSpec& s : est.specs) {
    require(s.dimension() <= cap, ErrorKind::InvalidArgument,
            "collection exceeds the dimension cap");
  }
  est.drift_sample = build_regression(qv, Target::Drift, est.domain);
  est.diff_sample = build_regression(qv, Target::DiffSq, est.domain);

  const RetainedPoints diff_pts = restrict_to_domain(est.diff_sample);
  const RetainedPoints drift_pts = restrict_to_domain(est.drift_sample);

  PenaltyParams diff_params;
  diff_params.target = Target::DiffSq;
  diff_params.points = diff_pts.size();
  diff_params.block_length = qv.block_length;
  diff_params.kappa = settings.kappa;
  diff_params.mode = settings.mode;

  PenaltyParams drift_params = diff_params;
  drift_params.target = Target::Drift;
  drift_params.points = drift_pts.size();

  if (settings.mode == PenaltyMode::Practical) {
    const std::vector<BasisSpec> trig_specs = collection(BasisFamily::Trig, est.max_dim);
    est.calibration = calibrate_diff_constant(est.diff_sample, qv.values, trig_specs, settings.kappa);
    diff_params.s_sq = est.calibration->s2_sq;
    est.diffusion = select(diff_pts, est.specs, diff_params);

    const double s1 = calibrate_drift_constant(est.diffusion.chosen_fit(), qv.values, qv.block_length);
    const GuardedConstant g = guard_constant(s1, drift_pts.y);
    est.drift_s_sq = g.value;
    est.drift_guarded = g.guarded;
  } else {
    require(settings.sigma1_sq > 0.0, ErrorKind::InvalidArgument,
            "theoretical penalty needs a positive sigma1_sq");
    diff_params.s_sq = settings.sigma1_sq * settings.sigma1_sq;
    est.diffusion = select(diff_pts, est.specs, diff_params);
    est.drift_s_sq = settings.sigma1_sq;
  }
  drift_params.s_sq = est.drift_s_sq;
  est.drift = select(drift_pts, est.specs, drift_params);
  est.qv = std::move(qv);
  return est;
}

inline Estimation estimate(const ObservationSet& obs, int k, const EstimationSettings& settings) {
  return estimate(quad_var(obs, k), settings);
}

}  // namespace stovol
