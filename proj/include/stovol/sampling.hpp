#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stovol/diffusion_models.hpp"
#include "stovol/error.hpp"
#include "stovol/rng.hpp"

namespace stovol {

/// Volatility sampled at ticks 0, step, ..., n_fine * step.
struct FineGridPath {
  double step = 0.0;
  std::vector<double> values;
  ModelId model = ModelId::Custom;

  std::size_t intervals() const { return values.empty() ? 0 : values.size() - 1; }
};

/// J_l ~ integral of V over [(l-1) step, l step], l = 1..n.
struct IntegratedSeries {
  double step = 0.0;
  double fine_step = 0.0;
  int ratio = 1;
  std::vector<double> values;
};

/// Price increments dX_l = X_{l step} - X_{(l-1) step}.
struct ObservationSet {
  double step = 0.0;
  std::vector<double> increments;

  std::vector<double> cumulative() const {
    std::vector<double> x(increments.size() + 1, 0.0);
    for (std::size_t l = 0; l < increments.size(); ++l) x[l + 1] = x[l] + increments[l];
    return x;
  }
};

/// Walks a volatility model forward on a fixed fine grid.
///
/// Built-in models advance their latent OU components exactly; custom models
/// call the user stepper. The starting point is a stationary draw.
class PathStepper {
 public:
  PathStepper(const DiffusionModel& model, double fine_step, Engine& engine)
      : model_(&model), step_(fine_step), engine_(&engine), normal_(engine) {
    require(fine_step > 0.0, ErrorKind::InvalidArgument, "fine step must be positive");
    require(model.has_stepper(), ErrorKind::InvalidArgument,
            "model '" + std::string(model_name(model.id)) + "' has no simulation stepper");
    if (model.latent) {
      const LatentOU& lat = *model.latent;
      require(lat.dimension >= 1, ErrorKind::InvalidArgument, "latent dimension must be >= 1");
      transition_ = OUTransition(lat.ou, fine_step);
      latent_.resize(static_cast<std::size_t>(lat.dimension));
      for (double& u : latent_) u = stationary_draw(lat.ou, normal_());
      value_ = transform();
    } else {
      value_ = model.custom->initial(*engine_);
    }
    check();
  }

  double value() const { return value_; }

  double advance() {
    if (model_->latent) {
      if (model_->latent->transform == LatentTransform::SumOfSquares) {
        double sum = 0.0;
        for (double& u : latent_) {
          u = transition_(u, normal_());
          sum += u * u;
        }
        value_ = sum;
      } else {
        latent_[0] = transition_(latent_[0], normal_());
        value_ = transform();
      }
    } else {
      value_ = model_->custom->step(value_, step_, *engine_);
    }
    check();
    return value_;
  }

 private:
  double transform() const {
    switch (model_->latent->transform) {
      case LatentTransform::Exp: return std::exp(latent_[0]);
      case LatentTransform::TanhShift: return std::tanh(latent_[0]) + 2.0;
      case LatentTransform::ExpTanh: return std::exp(std::tanh(latent_[0]));
      case LatentTransform::SumOfSquares: {
        double sum = 0.0;
        for (double u : latent_) sum += u * u;
        return sum;
      }
    }
    return 0.0;
  }

  void check() const {
    if (!model_->state_space.contains(value_)) {
      throw Error(ErrorKind::RunFailed, "simulated volatility " + std::to_string(value_) +
                                            " left the state space of model " +
                                            std::string(model_name(model_->id)));
    }
  }

  const DiffusionModel* model_;
  double step_;
  Engine* engine_;
  NormalStream normal_;
  OUTransition transition_;
  std::vector<double> latent_;
  double value_ = 0.0;
};

inline FineGridPath simulate_fine_path(const DiffusionModel& model, double fine_step,
                                       std::size_t n_fine, Engine& engine) {
  require(n_fine >= 1, ErrorKind::InvalidArgument, "simulate_fine_path: need at least one step");
  PathStepper stepper(model, fine_step, engine);
  FineGridPath path;
  path.step = fine_step;
  path.model = model.id;
  path.values.reserve(n_fine + 1);
  path.values.push_back(stepper.value());
  for (std::size_t i = 0; i < n_fine; ++i) path.values.push_back(stepper.advance());
  return path;
}

/// Composite trapezoid over each run of `ratio` fine intervals.
inline IntegratedSeries integrate_blocks(const FineGridPath& path, int ratio) {
  require(ratio >= 1, ErrorKind::InvalidArgument, "integrate_blocks: ratio must be >= 1");
  const std::size_t n_fine = path.intervals();
  const auto r = static_cast<std::size_t>(ratio);
  require(n_fine % r == 0, ErrorKind::InvalidArgument,
          "integrate_blocks: ratio " + std::to_string(ratio) + " does not divide " +
              std::to_string(n_fine) + " fine intervals");
  IntegratedSeries out;
  out.fine_step = path.step;
  out.step = path.step * ratio;
  out.ratio = ratio;
  const std::size_t n = n_fine / r;
  out.values.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    const std::size_t first = l * r;
    double acc = 0.5 * path.values[first];
    for (std::size_t j = 1; j < r; ++j) acc += path.values[first + j];
    acc += 0.5 * path.values[first + r];
    out.values.push_back(path.step * acc);
  }
  return out;
}

/// Integrated series plus V on the coarse grid, built without storing the fine path.
struct SimulatedVolatility {
  IntegratedSeries integrated;
  std::vector<double> coarse_values;  // V at ticks 0, step, ..., n * step
};

/// Streaming equivalent of integrate_blocks(simulate_fine_path(...), ratio);
/// bit-identical for the same engine state.
inline SimulatedVolatility simulate_integrated(const DiffusionModel& model, double fine_step,
                                               std::size_t n_fine, int ratio, Engine& engine) {
  require(n_fine >= 1, ErrorKind::InvalidArgument, "simulate_integrated: need at least one step");
  require(ratio >= 1, ErrorKind::InvalidArgument, "simulate_integrated: ratio must be >= 1");
  const auto r = static_cast<std::size_t>(ratio);
  require(n_fine % r == 0, ErrorKind::InvalidArgument,
          "simulate_integrated: ratio does not divide the fine step count");
  PathStepper stepper(model, fine_step, engine);
  SimulatedVolatility out;
  out.integrated.fine_step = fine_step;
  out.integrated.step = fine_step * ratio;
  out.integrated.ratio = ratio;
  const std::size_t n = n_fine / r;
  out.integrated.values.reserve(n);
  out.coarse_values.reserve(n + 1);
  out.coarse_values.push_back(stepper.value());
  for (std::size_t l = 0; l < n; ++l) {
    double acc = 0.5 * stepper.value();
    for (std::size_t j = 1; j < r; ++j) acc += stepper.advance();
    acc += 0.5 * stepper.advance();
    out.integrated.values.push_back(fine_step * acc);
    out.coarse_values.push_back(stepper.value());
  }
  return out;
}

/// dX_l = sqrt(J_l) * eps_l with eps drawn from `price_engine`, which must be
/// independent of the volatility stream.
inline ObservationSet generate_observations(const IntegratedSeries& integrated,
                                            Engine& price_engine) {
  ObservationSet obs;
  obs.step = integrated.step;
  obs.increments.reserve(integrated.values.size());
  NormalStream normal(price_engine);
  for (std::size_t l = 0; l < integrated.values.size(); ++l) {
    const double j = integrated.values[l];
    require(j >= 0.0, ErrorKind::InvalidArgument,
            "generate_observations: negative integrated volatility at block " + std::to_string(l + 1));
    obs.increments.push_back(std::sqrt(j) * normal());
  }
  return obs;
}

}  // namespace stovol
