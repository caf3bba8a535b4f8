#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stovol/config.hpp"
#include "stovol/error.hpp"
#include "stovol/io.hpp"
#include "stovol/mc_harness.hpp"
#include "stovol/pipeline.hpp"
#include "stovol/sampling.hpp"

namespace stovol {

namespace detail {

inline void emit_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string basis;
  std::optional<int> k;
  bool dump_config = false;
  std::string input;
  std::string target = "both";
};

inline RunConfig resolve_config(const CliOptions& o) {
  std::string text = o.config_path.empty() ? std::string() : read_file(o.config_path);
  if (!o.preset.empty()) {
    // The flag wins over a preset line in the file.
    std::string filtered;
    std::istringstream in(text);
    std::string line;
    bool in_root = true;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (!t.empty() && t.front() == '[') in_root = false;
      if (in_root && t.rfind("preset", 0) == 0 && t.find('=') != std::string::npos &&
          trim(std::string_view(t).substr(0, t.find('='))) == "preset") {
        filtered += "\n";
        continue;
      }
      filtered += line + "\n";
    }
    text = "preset = " + o.preset + "\n" + filtered;
  }
  RunConfig cfg = parse_config(text);
  if (o.seed) cfg.seed_base = *o.seed;
  if (!o.basis.empty()) {
    try {
      cfg.family = parse_family(o.basis);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, std::string("--basis: ") + e.what());
    }
  }
  if (o.k) cfg.ks = {*o.k};
  validate(cfg);
  return cfg;
}

inline int cmd_simulate(const RunConfig& cfg, const CliOptions& o, std::ostream& out) {
  const SamplingPlan plan = cfg.sampling();
  const DiffusionModel model = cfg.model.build();
  Engine vol(cfg.volatility_seed());
  Engine price(cfg.price_seed());
  const SimulatedVolatility sim = simulate_integrated(model, plan.fine_step, plan.n_fine, plan.ratio, vol);
  const ObservationSet obs = generate_observations(sim.integrated, price);
  const std::filesystem::path dir(o.out_dir);
  {
    std::ofstream f = io::open_output(dir / "path.csv");
    io::write_path_csv(f, sim.coarse_values, plan.step);
  }
  {
    std::ofstream f = io::open_output(dir / "observations.csv");
    io::write_observations_csv(f, obs);
  }
  out << "wrote " << (dir / "path.csv").string() << " and " << (dir / "observations.csv").string()
      << " (" << obs.increments.size() << " increments)\n";
  return 0;
}

inline int cmd_estimate(const RunConfig& cfg, const CliOptions& o, std::ostream& out) {
  require(o.target == "drift" || o.target == "diffusion" || o.target == "both", ErrorKind::Config,
          "--target: expected drift, diffusion or both");
  ObservationSet obs;
  if (!o.input.empty()) {
    obs = io::read_observations_csv(o.input, cfg.step);
  } else {
    const SamplingPlan plan = cfg.sampling();
    const DiffusionModel model = cfg.model.build();
    Engine vol(cfg.volatility_seed());
    Engine price(cfg.price_seed());
    obs = generate_observations(
        simulate_integrated(model, plan.fine_step, plan.n_fine, plan.ratio, vol).integrated, price);
  }
  const int k = cfg.ks.front();
  EstimationSettings settings = cfg.settings();
  if (settings.mode == PenaltyMode::Theoretical) {
    require(settings.sigma1_sq > 0.0, ErrorKind::Config,
            "penalty.sigma1_sq: theoretical mode on observed data needs an explicit bound");
  }
  const Estimation est = estimate(obs, k, settings);

  const std::filesystem::path dir(o.out_dir);
  {
    std::ofstream f = io::open_output(dir / "qv.csv");
    io::write_quadvar_csv(f, est.qv);
  }
  const bool drift = o.target != "diffusion";
  const bool diffusion = o.target != "drift";
  if (drift) {
    std::ofstream r = io::open_output(dir / "regression_drift.csv");
    io::write_regression_csv(r, est.drift_sample);
    std::ofstream t = io::open_output(dir / "trace_drift.csv");
    io::write_trace_csv(t, est.drift);
    std::ofstream c = io::open_output(dir / "curve_drift.csv");
    io::write_curve_csv(c, est.drift.chosen_fit());
  }
  if (diffusion) {
    std::ofstream r = io::open_output(dir / "regression_diffusion.csv");
    io::write_regression_csv(r, est.diff_sample);
    std::ofstream t = io::open_output(dir / "trace_diffusion.csv");
    io::write_trace_csv(t, est.diffusion);
    std::ofstream c = io::open_output(dir / "curve_diffusion.csv");
    io::write_curve_csv(c, est.diffusion.chosen_fit());
  }
  io::write_text(dir / "estimate.json", io::estimation_json(est).dump(2) + "\n");
  out << "k=" << k << " blocks=" << est.qv.blocks() << " domain=[" << format_double(est.domain.lo)
      << ", " << format_double(est.domain.hi) << "]";
  if (drift) out << " drift:" << est.drift.chosen_row().spec.label();
  if (diffusion) out << " diffusion:" << est.diffusion.chosen_row().spec.label();
  out << "\n";
  return 0;
}

inline int cmd_mc_table(const RunConfig& cfg, const CliOptions& o, std::ostream& out, std::ostream& err) {
  const McReport report = run_tables(experiment_plans(cfg));
  const std::filesystem::path dir(o.out_dir);
  io::write_text(dir / "report.json", io::report_json(report).dump(2) + "\n");
  {
    std::ofstream f = io::open_output(dir / "report.csv");
    io::write_report_csv(f, report);
  }
  {
    std::ofstream f = io::open_output(dir / "curves.csv");
    io::write_curves_csv(f, report);
  }
  io::write_report_csv(out, report);
  err << "elapsed " << report.elapsed_seconds << " s\n";
  return 0;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. Returns the exit status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric drift and diffusion estimation for a stochastic volatility model", "stovol"};
  detail::CliOptions o;
  app.add_option("--config", o.config_path, "Run configuration file");
  app.add_option("--preset", o.preset, "Preset: desk, table1 or table2");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--out", o.out_dir, "Output directory");
  app.add_option("--basis", o.basis, "Basis family: trig or gp");
  app.add_option("--k", o.k, "Increments per realized-variation block");
  app.add_flag("--dump-config", o.dump_config, "Print the resolved configuration and exit");
  app.fallthrough();

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a volatility path and price observations");
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "Estimate drift and diffusion from observations");
  estimate_cmd->add_option("--input", o.input, "Observation CSV with header l,dX");
  estimate_cmd->add_option("--target", o.target, "drift, diffusion or both");
  CLI::App* mc = app.add_subcommand("mc-table", "Monte Carlo error table");
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    detail::emit_error(err, "usage", e.what());
    return 2;
  }

  try {
    const RunConfig cfg = detail::resolve_config(o);
    if (o.dump_config) {
      out << dump_config(cfg);
      return 0;
    }
    if (simulate->parsed()) return detail::cmd_simulate(cfg, o, out);
    if (estimate_cmd->parsed()) return detail::cmd_estimate(cfg, o, out);
    if (mc->parsed()) return detail::cmd_mc_table(cfg, o, out, err);
    out << app.help();
    return 2;
  } catch (const Error& e) {
    detail::emit_error(err, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    detail::emit_error(err, "internal", e.what());
    return 1;
  }
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace stovol
