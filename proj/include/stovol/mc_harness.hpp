#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "stovol/bases.hpp"
#include "stovol/diffusion_models.hpp"
#include "stovol/error.hpp"
#include "stovol/lsq_estimator.hpp"
#include "stovol/pipeline.hpp"
#include "stovol/quadvar.hpp"
#include "stovol/rng.hpp"
#include "stovol/sampling.hpp"

namespace stovol {

/// Horizon and grids. n_fine * fine_step = n * step = horizon, step = ratio * fine_step.
struct SamplingPlan {
  double horizon = 0.0;
  double fine_step = 0.0;
  double step = 0.0;
  std::size_t n_fine = 0;
  int ratio = 1;
  std::size_t n = 0;

  /// Throws unless step / fine_step and horizon / step are integers (up to 1e-9 relative).
  static SamplingPlan make(double horizon, double fine_step, double step) {
    require(horizon > 0.0 && fine_step > 0.0 && step > 0.0, ErrorKind::InvalidArgument,
            "sampling: horizon and steps must be positive");
    const auto as_integer = [](double q, const std::string& what) {
      const double r = std::round(q);
      require(r >= 1.0 && std::abs(q - r) <= 1e-9 * r, ErrorKind::InvalidArgument, what);
      return static_cast<std::size_t>(r);
    };
    SamplingPlan p;
    p.horizon = horizon;
    p.fine_step = fine_step;
    p.step = step;
    p.ratio = static_cast<int>(as_integer(step / fine_step, "sampling: step is not an integer multiple of fine_step"));
    p.n = as_integer(horizon / step, "sampling: horizon is not an integer multiple of step");
    p.n_fine = p.n * static_cast<std::size_t>(p.ratio);
    return p;
  }
};

/// Built-in model by id and parameters.
struct ModelSpec {
  ModelId id = ModelId::CIR;
  double theta = 0.75;
  double c = 1.0 / 3.0;
  std::optional<int> d = 9;

  DiffusionModel build() const { return builtin_model(id, theta, c, d); }

  static ModelSpec reference(ModelId id) {
    if (id == ModelId::CIR) return {id, 0.75, 1.0 / 3.0, 9};
    return {id, 1.0, 0.75, std::nullopt};
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ExperimentPlan {
  ModelSpec model;
  SamplingPlan sampling;
  std::vector<int> ks{250};
  std::vector<BasisFamily> families{BasisFamily::Trig};
  std::size_t replications = 1;
  std::uint64_t base_seed = 1;
  EstimationSettings settings;
  std::size_t curve_replications = 20;  // replications whose fitted curves are kept

  std::size_t cells() const { return ks.size() * families.size(); }
};

struct CurveSample {
  double v = 0.0;
  double fhat = 0.0;
  double truth = 0.0;
};

/// Outcome of one (k, family) cell in one replication.
struct CellResult {
  bool ok = false;
  std::string failure;
  double error_b = 0.0;
  double error_sig = 0.0;
  int dim_b = 0;
  int dim_sig = 0;
  std::size_t retained = 0;
  bool guarded = false;
  std::vector<CurveSample> curve_b;
  std::vector<CurveSample> curve_sig;
};

struct ReplicationResult {
  std::size_t rep = 0;
  std::vector<CellResult> cells;  // index: k_index * families + family_index
};

namespace detail {

inline std::vector<CurveSample> curve_with_truth(const Fit& f, const std::function<double(double)>& truth) {
  std::vector<CurveSample> out;
  for (const CurvePoint& p : fitted_curve(f)) out.push_back({p.v, p.fhat, truth(p.v)});
  return out;
}

// Max of g on a 1001-point grid over the domain, skipping points outside the state space.
inline double max_over_domain(const std::function<double(double)>& g, const EstimationDomain& dom,
                              const StateSpace& space) {
  double best = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = dom.from_unit(i / 1000.0);
    if (space.contains(v)) best = std::max(best, g(v));
  }
  return best;
}

}  // namespace detail

/// Simulate, observe, then estimate every (k, family) cell on the same path.
/// Deterministic in (base_seed, rep).
inline ReplicationResult run_replication(const ExperimentPlan& plan, std::size_t rep,
                                         bool keep_curves = false) {
  ReplicationResult out;
  out.rep = rep;
  out.cells.resize(plan.cells());

  ObservationSet obs;
  DiffusionModel model;
  try {
    model = plan.model.build();
    Engine vol_engine = make_engine(plan.base_seed, kVolatilityStream, rep);
    Engine price_engine = make_engine(plan.base_seed, kPriceStream, rep);
    const SimulatedVolatility sim = simulate_integrated(model, plan.sampling.fine_step,
                                                        plan.sampling.n_fine, plan.sampling.ratio,
                                                        vol_engine);
    obs = generate_observations(sim.integrated, price_engine);
  } catch (const std::exception& e) {
    for (CellResult& c : out.cells) c.failure = std::string("simulation: ") + e.what();
    return out;
  }

  for (std::size_t ki = 0; ki < plan.ks.size(); ++ki) {
    for (std::size_t fi = 0; fi < plan.families.size(); ++fi) {
      CellResult& cell = out.cells[ki * plan.families.size() + fi];
      try {
        EstimationSettings settings = plan.settings;
        settings.family = plan.families[fi];
        QuadVarSeries qv = quad_var(obs, plan.ks[ki]);
        if (settings.mode == PenaltyMode::Theoretical && settings.sigma1_sq <= 0.0) {
          settings.sigma1_sq = detail::max_over_domain(
              model.diff_sq, domain_from_data(qv, settings.q_lo, settings.q_hi), model.state_space);
        }
        const Estimation est = estimate(std::move(qv), settings);
        const Fit& fb = est.drift.chosen_fit();
        const Fit& fs = est.diffusion.chosen_fit();
        // Noisy blocks can leave a bounded state space, where the true
        // coefficients are undefined; those points are not scored.
        std::vector<double> design;
        design.reserve(est.qv.values.size());
        for (double v : est.qv.values) {
          if (model.state_space.contains(v)) design.push_back(v);
        }
        const EmpiricalError eb = empirical_error(fb, model.drift, design);
        const EmpiricalError es = empirical_error(fs, model.diff_sq, design);
        require(std::isfinite(eb.value) && std::isfinite(es.value), ErrorKind::RunFailed,
                "non-finite empirical error");
        cell.error_b = eb.value;
        cell.error_sig = es.value;
        cell.retained = eb.retained;
        cell.dim_b = fb.spec.dimension();
        cell.dim_sig = fs.spec.dimension();
        cell.guarded = est.guarded();
        if (keep_curves) {
          cell.curve_b = detail::curve_with_truth(fb, model.drift);
          cell.curve_sig = detail::curve_with_truth(fs, model.diff_sq);
        }
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.failure = e.what();
      }
    }
  }
  return out;
}

struct ErrorStats {
  std::vector<double> values;  // successful replications, in replication order
  double mean = 0.0;
  std::optional<double> stddev;  // sample std, absent with fewer than two values
};

inline ErrorStats summarize(std::vector<double> values) {
  ErrorStats s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  double sum = 0.0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(s.values.size());
  if (s.values.size() >= 2) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.values.size() - 1));
  }
  return s;
}

struct CurveBundle {
  std::size_t rep = 0;
  std::vector<CurveSample> drift;
  std::vector<CurveSample> diffusion;
};

struct CellSummary {
  ModelSpec model;
  BasisFamily family = BasisFamily::Trig;
  int k = 0;
  std::size_t replications = 0;
  ErrorStats b;
  ErrorStats sig;
  std::map<int, int> dims_b;
  std::map<int, int> dims_sig;
  std::map<std::size_t, std::string> failures;  // rep -> reason
  std::size_t guarded = 0;
  std::vector<CurveBundle> curves;

  double failure_rate() const {
    return replications == 0 ? 0.0 : static_cast<double>(failures.size()) / replications;
  }
};

struct McReport {
  std::vector<CellSummary> cells;
  double elapsed_seconds = 0.0;  // not part of the deterministic report output

  const CellSummary* find(ModelId id, BasisFamily family, int k) const {
    for (const CellSummary& c : cells) {
      if (c.model.id == id && c.family == family && c.k == k) return &c;
    }
    return nullptr;
  }
};

/// Failure rates above this abort a table.
inline constexpr double kMaxFailureRate = 0.05;

/// Worker count from STOVOL_WORKERS, else the hardware concurrency.
inline unsigned resolve_workers(unsigned requested = 0) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned n = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("STOVOL_WORKERS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

/// Runs `plan.replications` replications over a worker pool and reduces them
/// in replication-index order, so the report does not depend on scheduling.
inline McReport run_table(const ExperimentPlan& plan, unsigned workers = 0) {
  require(plan.replications >= 1, ErrorKind::InvalidArgument, "run_table: need at least one replication");
  require(!plan.ks.empty() && !plan.families.empty(), ErrorKind::InvalidArgument,
          "run_table: need at least one k and one basis family");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ReplicationResult> results(plan.replications);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t r = next++; r < plan.replications; r = next++) {
      results[r] = run_replication(plan, r, r < plan.curve_replications);
    }
  };
  const unsigned n_workers = std::min<unsigned>(resolve_workers(workers),
                                                static_cast<unsigned>(plan.replications));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  McReport report;
  for (std::size_t ki = 0; ki < plan.ks.size(); ++ki) {
    for (std::size_t fi = 0; fi < plan.families.size(); ++fi) {
      const std::size_t idx = ki * plan.families.size() + fi;
      CellSummary cell;
      cell.model = plan.model;
      cell.family = plan.families[fi];
      cell.k = plan.ks[ki];
      cell.replications = plan.replications;
      std::vector<double> eb;
      std::vector<double> es;
      for (const ReplicationResult& rr : results) {
        const CellResult& c = rr.cells[idx];
        if (!c.ok) {
          cell.failures[rr.rep] = c.failure;
          continue;
        }
        eb.push_back(c.error_b);
        es.push_back(c.error_sig);
        ++cell.dims_b[c.dim_b];
        ++cell.dims_sig[c.dim_sig];
        if (c.guarded) ++cell.guarded;
        if (!c.curve_b.empty()) cell.curves.push_back({rr.rep, c.curve_b, c.curve_sig});
      }
      cell.b = summarize(std::move(eb));
      cell.sig = summarize(std::move(es));
      if (cell.failure_rate() > kMaxFailureRate) {
        const auto& first = *cell.failures.begin();
        throw Error(ErrorKind::RunFailed,
                    "cell " + std::string(model_name(cell.model.id)) + "/" +
                        std::string(family_name(cell.family)) + "/k=" + std::to_string(cell.k) +
                        ": " + std::to_string(cell.failures.size()) + " of " +
                        std::to_string(cell.replications) + " replications failed (first, rep " +
                        std::to_string(first.first) + ": " + first.second + ")");
      }
      report.cells.push_back(std::move(cell));
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Concatenates the cells of several plans into one report.
inline McReport run_tables(const std::vector<ExperimentPlan>& plans, unsigned workers = 0) {
  McReport all;
  for (const ExperimentPlan& p : plans) {
    McReport r = run_table(p, workers);
    all.elapsed_seconds += r.elapsed_seconds;
    for (CellSummary& c : r.cells) all.cells.push_back(std::move(c));
  }
  return all;
}

}  // namespace stovol
