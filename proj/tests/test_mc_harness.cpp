#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "stovol/io.hpp"
#include "stovol/mc_harness.hpp"
#include "stovol/pipeline.hpp"

using namespace stovol;

namespace {

ExperimentPlan desk_plan(ModelId id = ModelId::CIR, std::size_t reps = 6) {
  ExperimentPlan p;
  p.model = ModelSpec::reference(id);
  p.sampling = SamplingPlan::make(200.0, 1e-3, 1e-2);
  p.ks = {50, 100};
  p.families = {BasisFamily::Trig, BasisFamily::PiecewisePoly};
  p.replications = reps;
  p.base_seed = 7;
  p.curve_replications = 2;
  return p;
}

ObservationSet desk_observations(std::uint64_t seed) {
  Engine vol = make_engine(seed, kVolatilityStream, 0);
  Engine price = make_engine(seed, kPriceStream, 0);
  return generate_observations(
      simulate_integrated(reference_model(ModelId::CIR), 1e-3, 200000, 10, vol).integrated, price);
}

}  // namespace

TEST(SamplingPlan, IntegerBookkeeping) {
  const SamplingPlan p = SamplingPlan::make(1000.0, 2e-4, 2e-3);
  EXPECT_EQ(p.ratio, 10);
  EXPECT_EQ(p.n, 500000u);
  EXPECT_EQ(p.n_fine, 5000000u);
  EXPECT_THROW(SamplingPlan::make(1000.0, 3e-4, 1e-3), Error);
  EXPECT_THROW(SamplingPlan::make(1.0, 1e-3, 0.3), Error);
  EXPECT_THROW(SamplingPlan::make(-1.0, 1e-3, 1e-2), Error);
}

TEST(Estimate, DeskScaleCir) {
  const Estimation est = estimate(desk_observations(3), 50, EstimationSettings{});
  EXPECT_EQ(est.qv.blocks(), 400u);
  EXPECT_EQ(est.max_dim, max_dimension(400, 0.5));
  for (const BasisSpec& s : est.specs) EXPECT_LE(s.dimension(), est.max_dim);
  EXPECT_GE(est.drift.chosen_row().spec.dimension(), 1);
  EXPECT_GE(est.diffusion.chosen_row().spec.dimension(), 1);
  ASSERT_TRUE(est.calibration);
  EXPECT_GT(est.calibration->s2_sq, 0.0);
  EXPECT_GT(est.drift_s_sq, 0.0);
  EXPECT_FALSE(est.guarded());
  EXPECT_EQ(est.domain.lo, empirical_quantile(est.qv.values, 0.025));
  EXPECT_EQ(est.domain.hi, empirical_quantile(est.qv.values, 0.975));
  EXPECT_EQ(est.drift.table.size(), est.specs.size());
  EXPECT_EQ(est.drift.params.s_sq, est.drift_s_sq);
  EXPECT_EQ(est.diffusion.params.s_sq, est.calibration->s2_sq);
}

TEST(Estimate, DriftConstantFollowsSelectedDiffusion) {
  const Estimation est = estimate(desk_observations(4), 50, EstimationSettings{});
  EXPECT_DOUBLE_EQ(est.drift_s_sq,
                   calibrate_drift_constant(est.diffusion.chosen_fit(), est.qv.values, est.qv.block_length));
}

TEST(Estimate, PiecewiseFamilyAndTheoreticalMode) {
  EstimationSettings gp;
  gp.family = BasisFamily::PiecewisePoly;
  const Estimation a = estimate(desk_observations(5), 50, gp);
  EXPECT_EQ(a.drift.chosen_row().spec.family, BasisFamily::PiecewisePoly);
  EXPECT_EQ(a.calibration->preliminary.chosen_row().spec.family, BasisFamily::Trig);

  EstimationSettings th;
  th.mode = PenaltyMode::Theoretical;
  EXPECT_THROW(estimate(desk_observations(5), 50, th), Error);
  th.sigma1_sq = 0.1;
  const Estimation b = estimate(desk_observations(5), 50, th);
  EXPECT_FALSE(b.calibration);
  EXPECT_DOUBLE_EQ(b.diffusion.params.s_sq, 0.01);
}

TEST(Estimate, UserCapIsClampedToAutomaticCap) {
  EstimationSettings s;
  s.max_dim = 1000;
  const Estimation est = estimate(desk_observations(6), 50, s);
  EXPECT_EQ(est.max_dim, max_dimension(400, 0.5));
  s.max_dim = 5;
  EXPECT_EQ(estimate(desk_observations(6), 50, s).specs.size(), 3u);
}

TEST(RunReplication, DeterministicGivenSeedAndIndex) {
  const ExperimentPlan p = desk_plan();
  const ReplicationResult a = run_replication(p, 3, true);
  const ReplicationResult b = run_replication(p, 3, true);
  ASSERT_EQ(a.cells.size(), 4u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    ASSERT_TRUE(a.cells[i].ok) << a.cells[i].failure;
    EXPECT_EQ(a.cells[i].error_b, b.cells[i].error_b);
    EXPECT_EQ(a.cells[i].error_sig, b.cells[i].error_sig);
    EXPECT_EQ(a.cells[i].dim_b, b.cells[i].dim_b);
    EXPECT_GE(a.cells[i].error_b, 0.0);
    EXPECT_GE(a.cells[i].error_sig, 0.0);
    EXPECT_EQ(a.cells[i].curve_b.size(), 512u);
  }
  const ReplicationResult c = run_replication(p, 4);
  EXPECT_NE(a.cells[0].error_b, c.cells[0].error_b);
  EXPECT_TRUE(c.cells[0].curve_b.empty());
}

TEST(RunTable, SingleReplicationHasNoStd) {
  const ExperimentPlan p = desk_plan(ModelId::CIR, 1);
  const McReport r = run_table(p, 1);
  const ReplicationResult rr = run_replication(p, 0);
  ASSERT_EQ(r.cells.size(), 4u);
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    EXPECT_EQ(r.cells[i].b.mean, rr.cells[i].error_b);
    EXPECT_EQ(r.cells[i].sig.mean, rr.cells[i].error_sig);
    EXPECT_FALSE(r.cells[i].b.stddev);
    EXPECT_FALSE(r.cells[i].sig.stddev);
  }
}

TEST(RunTable, AggregatesMatchStoredValues) {
  const McReport r = run_table(desk_plan(), 1);
  for (const CellSummary& c : r.cells) {
    for (const ErrorStats* s : {&c.b, &c.sig}) {
      ASSERT_EQ(s->values.size(), 6u);
      const ErrorStats again = summarize(s->values);
      EXPECT_EQ(again.mean, s->mean);
      EXPECT_EQ(*again.stddev, *s->stddev);
      double sum = 0.0;
      for (double v : s->values) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(s->mean, sum / 6.0, 1e-15 * s->mean);
    }
    int dims = 0;
    for (const auto& [d, n] : c.dims_b) dims += n;
    EXPECT_EQ(dims, 6);
    EXPECT_EQ(c.curves.size(), 2u);
    EXPECT_TRUE(c.failures.empty());
  }
  EXPECT_NE(r.find(ModelId::CIR, BasisFamily::PiecewisePoly, 100), nullptr);
  EXPECT_EQ(r.find(ModelId::ExpOU, BasisFamily::Trig, 50), nullptr);
}

TEST(RunTable, IndependentOfWorkerCount) {
  unsetenv("STOVOL_WORKERS");
  const ExperimentPlan p = desk_plan(ModelId::ExpTanhOU, 7);
  const std::string one = io::report_json(run_table(p, 1)).dump();
  const std::string many = io::report_json(run_table(p, 3)).dump();
  EXPECT_EQ(one, many);
}

TEST(RunTable, AbortsWhenTooManyReplicationsFail) {
  ExperimentPlan p = desk_plan(ModelId::CIR, 3);
  p.ks = {5000};  // 4 blocks: the estimation domain cannot be built
  try {
    run_table(p, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RunFailed);
    EXPECT_NE(std::string(e.what()).find("3 of 3"), std::string::npos);
  }
}

TEST(RunTable, TheoreticalModeWithDerivedBound) {
  ExperimentPlan p = desk_plan(ModelId::TanhOUShift, 2);
  p.settings.mode = PenaltyMode::Theoretical;
  const McReport r = run_table(p, 1);
  for (const CellSummary& c : r.cells) EXPECT_EQ(c.b.values.size(), 2u);
}

TEST(Summarize, Basics) {
  const ErrorStats s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(*s.stddev, std::sqrt(5.0 / 3.0));
  EXPECT_FALSE(summarize({}).stddev);
}

TEST(ResolveWorkers, EnvironmentCap) {
  setenv("STOVOL_WORKERS", "2", 1);
  EXPECT_EQ(resolve_workers(8), 2u);
  EXPECT_EQ(resolve_workers(1), 1u);
  unsetenv("STOVOL_WORKERS");
  EXPECT_EQ(resolve_workers(5), 5u);
}
