#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "stovol/error.hpp"
#include "stovol/rng.hpp"

namespace stovol {

enum class ModelId { ExpOU, TanhOUShift, ExpTanhOU, CIR, Custom };

inline std::string_view model_name(ModelId id) {
  switch (id) {
    case ModelId::ExpOU: return "ExpOU";
    case ModelId::TanhOUShift: return "TanhOUShift";
    case ModelId::ExpTanhOU: return "ExpTanhOU";
    case ModelId::CIR: return "CIR";
    case ModelId::Custom: return "Custom";
  }
  return "Custom";
}

inline ModelId parse_model_id(std::string_view name) {
  for (ModelId id : {ModelId::ExpOU, ModelId::TanhOUShift, ModelId::ExpTanhOU, ModelId::CIR}) {
    if (name == model_name(id)) return id;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model id '" + std::string(name) + "'");
}

/// dU = -rate * U dt + vol * dW.
struct OUParams {
  double rate = 1.0;
  double vol = 1.0;

  double stationary_variance() const { return vol * vol / (2.0 * rate); }
};

/// Exact one-step transition of an OU process over a fixed step h, with the
/// exponentials hoisted out of the simulation loop.
struct OUTransition {
  double decay = 1.0;
  double scale = 0.0;

  OUTransition() = default;
  OUTransition(const OUParams& p, double h)
      : decay(std::exp(-p.rate * h)),
        scale(p.vol * std::sqrt(-std::expm1(-2.0 * p.rate * h) / (2.0 * p.rate))) {}

  double operator()(double u, double noise) const { return decay * u + scale * noise; }
};

inline double ou_exact_step(double u, const OUParams& params, double h, double noise) {
  require(h > 0.0, ErrorKind::InvalidArgument, "ou_exact_step: step must be positive");
  require(params.rate > 0.0, ErrorKind::InvalidArgument, "ou_exact_step: rate must be positive");
  return OUTransition(params, h)(u, noise);
}

/// Draw from the stationary N(0, vol^2 / (2 rate)) law.
inline double stationary_draw(const OUParams& params, double noise) {
  return params.vol / std::sqrt(2.0 * params.rate) * noise;
}

/// Open interval (lo, hi).
struct StateSpace {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v > lo && v < hi; }
};

/// Map from latent OU state(s) to the volatility value.
enum class LatentTransform {
  Exp,           // V = exp(U)
  TanhShift,     // V = tanh(U) + 2
  ExpTanh,       // V = exp(tanh(U))
  SumOfSquares,  // V = sum_j U_j^2
};

/// Exact simulation recipe for the built-in models: `dimension` independent
/// OU components with identical parameters, pushed through `transform`.
struct LatentOU {
  OUParams ou;
  int dimension = 1;
  LatentTransform transform = LatentTransform::Exp;
};

/// Fine-grid stepper for user-supplied models. `exact == false` marks an
/// Euler-type scheme; reports flag such runs as approximate.
struct CustomStepper {
  std::function<double(Engine&)> initial;
  std::function<double(double v, double h, Engine&)> step;
  bool exact = false;
};

struct DiffusionModel {
  ModelId id = ModelId::Custom;
  std::map<std::string, double> params;
  std::function<double(double)> drift;
  std::function<double(double)> diff_sq;
  StateSpace state_space;
  std::optional<LatentOU> latent;
  std::optional<CustomStepper> custom;

  bool has_stepper() const { return latent.has_value() || (custom && custom->step && custom->initial); }
  bool exact_simulation() const { return latent.has_value() || (custom && custom->exact); }
};

namespace detail {

// Coefficients of tanh(U) for dU = -theta U dt + c dW.
inline double tanh_ou_drift(double y, double theta, double c) {
  return -(1.0 - y * y) * (c * c * y + 0.5 * theta * std::log((1.0 + y) / (1.0 - y)));
}

inline double tanh_ou_diff_sq(double y, double c) {
  const double s = c * (1.0 - y * y);
  return s * s;
}

}  // namespace detail

/// One of the four reference volatility models.
///
/// ExpOU, TanhOUShift and ExpTanhOU are functions of a single OU process
/// dU = -theta U dt + c dW. CIR is the squared norm of `d` OU components with
/// rate theta/2 and volatility c/2, so that dV = (d c^2/4 - theta V) dt + c sqrt(V) dW.
inline DiffusionModel builtin_model(ModelId id, double theta, double c, std::optional<int> d = {}) {
  require(id != ModelId::Custom, ErrorKind::InvalidArgument,
          "builtin_model: Custom is not a built-in model");
  require(theta > 0.0, ErrorKind::InvalidArgument, "builtin_model: theta must be positive");
  require(c > 0.0, ErrorKind::InvalidArgument, "builtin_model: c must be positive");
  if (id == ModelId::CIR) {
    require(d.has_value() && *d >= 1, ErrorKind::InvalidArgument,
            "builtin_model: CIR requires integer dimension d >= 1");
  } else {
    require(!d.has_value(), ErrorKind::InvalidArgument,
            "builtin_model: dimension d only applies to CIR");
  }

  DiffusionModel m;
  m.id = id;
  m.params = {{"theta", theta}, {"c", c}};
  const double c2 = c * c;

  switch (id) {
    case ModelId::ExpOU:
      m.drift = [=](double x) { return x * (-theta * std::log(x) + 0.5 * c2); };
      m.diff_sq = [=](double x) { return c2 * x * x; };
      m.state_space = {0.0, std::numeric_limits<double>::infinity()};
      m.latent = LatentOU{{theta, c}, 1, LatentTransform::Exp};
      break;
    case ModelId::TanhOUShift:
      m.drift = [=](double x) { return detail::tanh_ou_drift(x - 2.0, theta, c); };
      m.diff_sq = [=](double x) { return detail::tanh_ou_diff_sq(x - 2.0, c); };
      m.state_space = {1.0, 3.0};
      m.latent = LatentOU{{theta, c}, 1, LatentTransform::TanhShift};
      break;
    case ModelId::ExpTanhOU:
      m.drift = [=](double x) {
        const double y = std::log(x);
        return x * (detail::tanh_ou_drift(y, theta, c) + 0.5 * detail::tanh_ou_diff_sq(y, c));
      };
      m.diff_sq = [=](double x) { return x * x * detail::tanh_ou_diff_sq(std::log(x), c); };
      m.state_space = {std::exp(-1.0), std::exp(1.0)};
      m.latent = LatentOU{{theta, c}, 1, LatentTransform::ExpTanh};
      break;
    case ModelId::CIR: {
      const double dim = static_cast<double>(*d);
      m.params["d"] = dim;
      m.drift = [=](double x) { return dim * c2 / 4.0 - theta * x; };
      m.diff_sq = [=](double x) { return c2 * x; };
      m.state_space = {0.0, std::numeric_limits<double>::infinity()};
      m.latent = LatentOU{{theta / 2.0, c / 2.0}, *d, LatentTransform::SumOfSquares};
      break;
    }
    case ModelId::Custom:
      break;
  }
  return m;
}

/// Reference parameters used for the published experiments.
inline DiffusionModel reference_model(ModelId id) {
  if (id == ModelId::CIR) return builtin_model(id, 0.75, 1.0 / 3.0, 9);
  return builtin_model(id, 1.0, 0.75);
}

inline DiffusionModel custom_model(std::function<double(double)> drift,
                                   std::function<double(double)> diff_sq,
                                   StateSpace state_space, CustomStepper stepper) {
  DiffusionModel m;
  m.id = ModelId::Custom;
  m.drift = std::move(drift);
  m.diff_sq = std::move(diff_sq);
  m.state_space = state_space;
  m.custom = std::move(stepper);
  return m;
}

/// Euler-Maruyama stepper for a custom model. Only meant for the fine grid.
inline CustomStepper euler_stepper(std::function<double(double)> drift,
                                   std::function<double(double)> diff_sq,
                                   std::function<double(Engine&)> initial) {
  CustomStepper s;
  s.initial = std::move(initial);
  s.step = [b = std::move(drift), s2 = std::move(diff_sq)](double v, double h, Engine& eng) {
    boost::random::normal_distribution<double> normal;
    return v + b(v) * h + std::sqrt(s2(v) * h) * normal(eng);
  };
  s.exact = false;
  return s;
}

}  // namespace stovol
