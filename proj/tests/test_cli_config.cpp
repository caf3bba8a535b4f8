#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stovol/cli.hpp"
#include "stovol/config.hpp"
#include "stovol/io.hpp"
#include "test_support.hpp"

using namespace stovol;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    return e.what();
  }
  ADD_FAILURE() << "config accepted: " << text;
  return {};
}

}  // namespace

TEST(ParseConfig, MinimalDeskConfig) {
  const RunConfig c = parse_config("model = CIR\npreset = desk\n");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.kappa, 2.0);
  EXPECT_EQ(c.q_lo, 0.025);
  EXPECT_EQ(c.q_hi, 0.975);
  EXPECT_EQ(c.family, BasisFamily::Trig);
  EXPECT_EQ(c.ks, std::vector<int>{50});
  EXPECT_EQ(c.replications, 20u);
  EXPECT_EQ(parse_config(""), RunConfig{});
}

TEST(ParseConfig, TablePresetConstants) {
  const RunConfig c = parse_config("preset = table1\n");
  const SamplingPlan s = c.sampling();
  EXPECT_EQ(s.n_fine, 5000000u);
  EXPECT_EQ(s.n, 500000u);
  EXPECT_EQ(c.fine_step, 2e-4);
  EXPECT_EQ(c.step, 2e-3);
  EXPECT_EQ(c.horizon, 1000.0);
  EXPECT_NE(std::find(c.ks.begin(), c.ks.end(), 250), c.ks.end());
  EXPECT_EQ(c.replications, 100u);
  EXPECT_EQ(parse_config("preset = table2\n").ks, std::vector<int>{250});
  EXPECT_EQ(experiment_plans(parse_config("preset = table2\n")).size(), 4u);
}

TEST(ParseConfig, SectionsAndOverrides) {
  const RunConfig c = parse_config(
      "preset = desk  # comment\n"
      "[model]\nname = ExpOU\ntheta = 1.5\n"
      "[sampling]\nk = 25, 50\n"
      "[basis]\nfamily = gp\nr_max = 2\n"
      "[penalty]\nmode = theoretical\nsigma1_sq = 0.4\n"
      "[seeds]\nbase = 99\nprice = 12\n");
  EXPECT_EQ(c.model.id, ModelId::ExpOU);
  EXPECT_EQ(c.model.theta, 1.5);
  EXPECT_EQ(c.model.c, 0.75);
  EXPECT_FALSE(c.model.d);
  EXPECT_EQ(c.ks, (std::vector<int>{25, 50}));
  EXPECT_EQ(c.family, BasisFamily::PiecewisePoly);
  EXPECT_EQ(c.r_max, 2);
  EXPECT_EQ(c.penalty_mode, PenaltyMode::Theoretical);
  EXPECT_EQ(c.seed_base, 99u);
  EXPECT_EQ(c.price_seed(), 12u);
  EXPECT_EQ(c.volatility_seed(), derive_seed(99, kVolatilityStream, 0));
}

TEST(ParseConfig, StepNotMultipleNamesBothKeys) {
  const std::string msg = config_error("[sampling]\nfine_step = 0.003\nstep = 0.01\n");
  EXPECT_NE(msg.find("sampling.step"), std::string::npos);
  EXPECT_NE(msg.find("sampling.fine_step"), std::string::npos);
}

TEST(ParseConfig, Rejections) {
  EXPECT_NE(config_error("[model]\ncolour = red\n").find("model.colour"), std::string::npos);
  EXPECT_NE(config_error("preset = desk\n[sampling\n").find("line 2"), std::string::npos);
  EXPECT_NE(config_error("\n\njust text\n").find("line 3"), std::string::npos);
  EXPECT_NE(config_error("[basis]\nmax_dim = 3\nmax_dim = 4\n").find("duplicate"), std::string::npos);
  EXPECT_NE(config_error("[model]\ntheta = abc\n").find("model.theta"), std::string::npos);
  EXPECT_NE(config_error("[model]\nname = ExpOU\nd = 3\n").find("model.d"), std::string::npos);
  EXPECT_NE(config_error("[domain]\nq_lo = 0.9\nq_hi = 0.1\n").find("domain.q_lo"), std::string::npos);
  EXPECT_NE(config_error("preset = huge\n").find("preset"), std::string::npos);
  EXPECT_NE(config_error("[basis]\nfamily = wavelet\n").find("basis.family"), std::string::npos);
  EXPECT_NE(config_error("[mc]\nreplications = 0\n").find("mc.replications"), std::string::npos);
  config_error("model = CIR\n[model]\nname = CIR\n");
}

TEST(DumpConfig, RoundTrips) {
  std::vector<RunConfig> cases(4);
  cases[1] = parse_config("preset = table1\n[model]\nname = TanhOUShift\nc = 0.3333333333333333\n");
  cases[2].fine_step = 1.0 / 3000.0;
  cases[2].step = 1.0 / 300.0;
  cases[2].horizon = 100.0;
  cases[2].seed_volatility = 18446744073709551615ull;
  cases[2].q_lo = 0.1;
  cases[3] = parse_config("[penalty]\nmode = theoretical\nsigma1_sq = 0.123456789\nkappa = 1.5\n[basis]\nfamily = gp\n");
  for (const RunConfig& c : cases) {
    const std::string text = dump_config(c);
    EXPECT_EQ(parse_config(text), c) << text;
    EXPECT_EQ(dump_config(parse_config(text)), text);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 2e-4, 1e300, -0.0, 2.2250738585072014e-308}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(ObservationsCsv, RoundTripIsExact) {
  ObservationSet obs;
  obs.step = 0.01;
  obs.increments = {0.1, -1.0 / 3.0, 2.5e-17, 0.0};
  std::stringstream ss;
  io::write_observations_csv(ss, obs);
  EXPECT_EQ(io::read_observations_csv(ss, 0.01).increments, obs.increments);
}

TEST(ObservationsCsv, StrictParsing) {
  std::stringstream bad_header("x,y\n1,0.5\n");
  EXPECT_THROW(io::read_observations_csv(bad_header, 0.01), Error);
  std::stringstream gap("l,dX\n1,0.5\n3,0.1\n");
  EXPECT_THROW(io::read_observations_csv(gap, 0.01), Error);
  std::stringstream junk("l,dX\n1,abc\n");
  EXPECT_THROW(io::read_observations_csv(junk, 0.01), Error);
  std::stringstream crlf("l,dX\r\n1,0.5\r\n2,0.25\r\n");
  EXPECT_EQ(io::read_observations_csv(crlf, 0.01).increments, (std::vector<double>{0.5, 0.25}));
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  EXPECT_NE(r.out.find("mc-table"), std::string::npos);
}

TEST(Cli, ErrorsAreSingleJsonLines) {
  const CliRun missing = cli({"estimate", "--input", "/nonexistent/obs.csv"});
  EXPECT_NE(missing.code, 0);
  const auto j = nlohmann::json::parse(missing.err);
  EXPECT_EQ(j["error"], "io");
  EXPECT_TRUE(j["message"].is_string());

  const CliRun bad = cli({"simulate", "--basis", "foo"});
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(nlohmann::json::parse(bad.err)["error"], "config");

  const CliRun usage = cli({"frobnicate"});
  EXPECT_NE(usage.code, 0);
  EXPECT_EQ(nlohmann::json::parse(usage.err)["error"], "usage");
}

TEST(Cli, DumpConfigReparses) {
  const fs::path dir = oracle::scratch_dir("dump");
  io::write_text(dir / "run.ini", "[model]\nname = ExpOU\n[sampling]\nk = 40\n");
  const CliRun r = cli({"--config", (dir / "run.ini").string(), "--seed", "5", "--dump-config"});
  ASSERT_EQ(r.code, 0) << r.err;
  const RunConfig c = parse_config(r.out);
  EXPECT_EQ(c.model.id, ModelId::ExpOU);
  EXPECT_EQ(c.ks, std::vector<int>{40});
  EXPECT_EQ(c.seed_base, 5u);
  const CliRun t = cli({"--config", (dir / "run.ini").string(), "--preset", "table2", "--k", "300", "--dump-config"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(parse_config(t.out).preset, Preset::Table2);
  EXPECT_EQ(parse_config(t.out).ks, std::vector<int>{300});
}

TEST(Cli, SimulateThenEstimate) {
  const fs::path dir = oracle::scratch_dir("sim_est");
  const CliRun sim = cli({"simulate", "--seed", "3", "--out", (dir / "sim").string()});
  ASSERT_EQ(sim.code, 0) << sim.err;
  EXPECT_TRUE(fs::exists(dir / "sim" / "path.csv"));
  ASSERT_TRUE(fs::exists(dir / "sim" / "observations.csv"));

  const CliRun est = cli({"estimate", "--input", (dir / "sim" / "observations.csv").string(), "--target", "both",
                          "--out", (dir / "est").string()});
  ASSERT_EQ(est.code, 0) << est.err;
  for (const char* f : {"qv.csv", "regression_drift.csv", "regression_diffusion.csv", "trace_drift.csv",
                        "trace_diffusion.csv", "curve_drift.csv", "curve_diffusion.csv", "estimate.json"}) {
    EXPECT_TRUE(fs::exists(dir / "est" / f)) << f;
  }
  const auto j = nlohmann::json::parse(oracle::slurp(dir / "est" / "estimate.json"));
  EXPECT_GE(j["drift"]["chosen"]["dim"].get<int>(), 1);
  EXPECT_GE(j["diffusion"]["chosen"]["dim"].get<int>(), 1);

  std::istringstream trace(oracle::slurp(dir / "est" / "trace_drift.csv"));
  std::string line;
  std::getline(trace, line);
  EXPECT_EQ(line, "family,dim,contrast,penalty,criterion,chosen");
  int chosen = 0;
  while (std::getline(trace, line)) chosen += line.back() == '1';
  EXPECT_EQ(chosen, 1);

  // Estimating from the simulated observations in memory gives the same files.
  const CliRun direct = cli({"estimate", "--seed", "3", "--out", (dir / "direct").string()});
  ASSERT_EQ(direct.code, 0) << direct.err;
  EXPECT_EQ(oracle::slurp(dir / "direct" / "estimate.json"), oracle::slurp(dir / "est" / "estimate.json"));

  const CliRun drift_only = cli({"estimate", "--input", (dir / "sim" / "observations.csv").string(), "--target",
                                 "drift", "--out", (dir / "drift").string()});
  ASSERT_EQ(drift_only.code, 0);
  EXPECT_TRUE(fs::exists(dir / "drift" / "trace_drift.csv"));
  EXPECT_FALSE(fs::exists(dir / "drift" / "trace_diffusion.csv"));
  EXPECT_NE(cli({"estimate", "--target", "volatility"}).code, 0);
}

TEST(Cli, McTableIsByteIdenticalAcrossRuns) {
  unsetenv("STOVOL_WORKERS");
  const fs::path dir = oracle::scratch_dir("mc");
  const fs::path ini = dir / "small.ini";
  io::write_text(ini, "preset = desk\n[mc]\nreplications = 4\ncurves = 2\n");
  const CliRun a = cli({"mc-table", "--config", ini.string(), "--seed", "7", "--out", (dir / "a").string()});
  const CliRun b = cli({"mc-table", "--config", ini.string(), "--seed", "7", "--out", (dir / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"report.json", "report.csv", "curves.csv"}) {
    const std::string x = oracle::slurp(dir / "a" / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, oracle::slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(a.out, b.out);
  std::istringstream csv(oracle::slurp(dir / "a" / "report.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "model,basis,k,target,mean,std,R,failures");
}
