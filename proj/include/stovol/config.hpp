#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stovol/bases.hpp"
#include "stovol/diffusion_models.hpp"
#include "stovol/error.hpp"
#include "stovol/mc_harness.hpp"
#include "stovol/model_selection.hpp"
#include "stovol/pipeline.hpp"
#include "stovol/rng.hpp"

namespace stovol {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

enum class Preset { None, Desk, Table1, Table2 };

inline std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::None: return "none";
    case Preset::Desk: return "desk";
    case Preset::Table1: return "table1";
    case Preset::Table2: return "table2";
  }
  return "none";
}

inline Preset parse_preset(std::string_view s) {
  for (Preset p : {Preset::None, Preset::Desk, Preset::Table1, Preset::Table2}) {
    if (s == preset_name(p)) return p;
  }
  throw Error(ErrorKind::Config, "preset: unknown preset '" + std::string(s) +
                                     "' (expected none, desk, table1 or table2)");
}

/// Fully resolved run configuration.
struct RunConfig {
  Preset preset = Preset::Desk;
  ModelSpec model = ModelSpec::reference(ModelId::CIR);

  double horizon = 200.0;
  double fine_step = 1e-3;
  double step = 1e-2;
  std::vector<int> ks{50};

  BasisFamily family = BasisFamily::Trig;
  int max_dim = 0;
  int r_max = kDefaultMaxDegree;

  double q_lo = kDefaultQuantileLo;
  double q_hi = kDefaultQuantileHi;

  PenaltyMode penalty_mode = PenaltyMode::Practical;
  double kappa = kDefaultKappa;
  double sigma1_sq = 0.0;

  std::uint64_t seed_base = 1;
  std::optional<std::uint64_t> seed_volatility;
  std::optional<std::uint64_t> seed_price;

  std::size_t replications = 20;
  std::size_t curve_replications = 20;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  SamplingPlan sampling() const { return SamplingPlan::make(horizon, fine_step, step); }

  EstimationSettings settings() const {
    EstimationSettings s;
    s.family = family;
    s.max_dim = max_dim;
    s.max_degree = r_max;
    s.q_lo = q_lo;
    s.q_hi = q_hi;
    s.mode = penalty_mode;
    s.kappa = kappa;
    s.sigma1_sq = sigma1_sq;
    return s;
  }

  std::uint64_t volatility_seed() const {
    return seed_volatility.value_or(derive_seed(seed_base, kVolatilityStream, 0));
  }
  std::uint64_t price_seed() const {
    return seed_price.value_or(derive_seed(seed_base, kPriceStream, 0));
  }
};

/// Sampling, k and replication defaults of each preset. The model is left alone.
inline void apply_preset(RunConfig& cfg, Preset p) {
  cfg.preset = p;
  switch (p) {
    case Preset::None:
      break;
    case Preset::Desk:
      cfg.horizon = 200.0;
      cfg.fine_step = 1e-3;
      cfg.step = 1e-2;
      cfg.ks = {50};
      cfg.replications = 20;
      break;
    case Preset::Table1:
      cfg.horizon = 1000.0;
      cfg.fine_step = 2e-4;
      cfg.step = 2e-3;
      cfg.ks = {150, 200, 250, 300, 500};
      cfg.replications = 100;
      break;
    case Preset::Table2:
      cfg.horizon = 1000.0;
      cfg.fine_step = 2e-4;
      cfg.step = 2e-3;
      cfg.ks = {250};
      cfg.replications = 100;
      break;
  }
}

namespace detail {

struct IniEntry {
  std::string value;
  int line = 0;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// `key = value` lines grouped under `[section]` headers; `#` and `;` start comments.
inline std::map<std::string, IniEntry> parse_ini(std::string_view text) {
  std::map<std::string, IniEntry> out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, ErrorKind::Config,
              where + "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Config, where + "expected 'key = value', got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    require(!key.empty(), ErrorKind::Config, where + "empty key");
    const std::string path = section.empty() ? key : section + "." + key;
    require(!out.contains(path), ErrorKind::Config, where + "duplicate key '" + path + "'");
    out[path] = {value, line_no};
  }
  return out;
}

template <class T>
T parse_number(const std::string& path, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  require(res.ec == std::errc() && res.ptr == last, ErrorKind::Config,
          path + ": cannot parse '" + text + "' as a number");
  return v;
}

inline std::vector<int> parse_int_list(const std::string& path, const std::string& text) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(path, trim(item)));
  require(!out.empty(), ErrorKind::Config, path + ": empty list");
  return out;
}

}  // namespace detail

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "preset", "model",
      "model.name", "model.theta", "model.c", "model.d",
      "sampling.horizon", "sampling.fine_step", "sampling.step", "sampling.k",
      "basis.family", "basis.max_dim", "basis.r_max",
      "domain.q_lo", "domain.q_hi",
      "penalty.mode", "penalty.kappa", "penalty.sigma1_sq",
      "seeds.base", "seeds.volatility", "seeds.price",
      "mc.replications", "mc.curves"};
  return keys;
}

/// Checks the structural constraints; messages name the offending keys.
inline void validate(const RunConfig& c) {
  require(c.model.theta > 0.0, ErrorKind::Config, "model.theta: must be positive");
  require(c.model.c > 0.0, ErrorKind::Config, "model.c: must be positive");
  if (c.model.id == ModelId::CIR) {
    require(c.model.d.has_value() && *c.model.d >= 1, ErrorKind::Config, "model.d: CIR needs d >= 1");
  } else {
    require(!c.model.d.has_value(), ErrorKind::Config, "model.d: only valid for CIR");
  }
  require(c.horizon > 0.0, ErrorKind::Config, "sampling.horizon: must be positive");
  require(c.fine_step > 0.0, ErrorKind::Config, "sampling.fine_step: must be positive");
  require(c.step > 0.0, ErrorKind::Config, "sampling.step: must be positive");
  const double ratio = c.step / c.fine_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::round(ratio) || std::round(ratio) < 1.0) {
    throw Error(ErrorKind::Config, "sampling.step (" + format_double(c.step) +
                                       ") is not an integer multiple of sampling.fine_step (" +
                                       format_double(c.fine_step) + ")");
  }
  const double n = c.horizon / c.step;
  if (std::abs(n - std::round(n)) > 1e-9 * std::round(n) || std::round(n) < 1.0) {
    throw Error(ErrorKind::Config, "sampling.horizon (" + format_double(c.horizon) +
                                       ") is not an integer multiple of sampling.step (" +
                                       format_double(c.step) + ")");
  }
  for (int k : c.ks) {
    require(k >= 1, ErrorKind::Config, "sampling.k: every k must be >= 1");
    require(static_cast<double>(k) * 3.0 <= std::round(n), ErrorKind::Config,
            "sampling.k: k=" + std::to_string(k) + " leaves fewer than 3 blocks over sampling.horizon");
  }
  require(c.max_dim >= 0, ErrorKind::Config, "basis.max_dim: must be >= 0 (0 = automatic)");
  require(c.r_max >= 0, ErrorKind::Config, "basis.r_max: must be >= 0");
  require(0.0 <= c.q_lo && c.q_lo < c.q_hi && c.q_hi <= 1.0, ErrorKind::Config,
          "domain.q_lo/domain.q_hi: need 0 <= q_lo < q_hi <= 1");
  require(c.kappa > 0.0, ErrorKind::Config, "penalty.kappa: must be positive");
  require(c.sigma1_sq >= 0.0, ErrorKind::Config, "penalty.sigma1_sq: must be >= 0");
  require(c.replications >= 1, ErrorKind::Config, "mc.replications: must be >= 1");
}

/// Parses a run configuration. Keys absent from the text keep the preset's
/// value (or the built-in default); unknown keys are rejected.
inline RunConfig parse_config(std::string_view text) {
  auto entries = detail::parse_ini(text);
  for (const auto& [key, entry] : entries) {
    require(known_config_keys().contains(key), ErrorKind::Config,
            "line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
  }
  if (entries.contains("model")) {
    require(!entries.contains("model.name"), ErrorKind::Config,
            "model: given both as 'model' and 'model.name'");
    entries["model.name"] = entries["model"];
  }
  const auto get = [&](const std::string& key) -> const std::string* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second.value;
  };
  const auto number = [&](const std::string& key, auto& target) {
    if (const std::string* v = get(key)) {
      target = detail::parse_number<std::remove_reference_t<decltype(target)>>(key, *v);
    }
  };
  const auto wrap = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      throw Error(ErrorKind::Config, key + ": " + e.what());
    }
  };

  RunConfig cfg;
  if (const std::string* p = get("preset")) {
    apply_preset(cfg, parse_preset(*p));
  } else {
    apply_preset(cfg, Preset::Desk);
  }

  if (const std::string* name = get("model.name")) {
    wrap("model.name", [&] { cfg.model = ModelSpec::reference(parse_model_id(*name)); });
  }
  number("model.theta", cfg.model.theta);
  number("model.c", cfg.model.c);
  if (const std::string* d = get("model.d")) cfg.model.d = detail::parse_number<int>("model.d", *d);

  number("sampling.horizon", cfg.horizon);
  number("sampling.fine_step", cfg.fine_step);
  number("sampling.step", cfg.step);
  if (const std::string* k = get("sampling.k")) cfg.ks = detail::parse_int_list("sampling.k", *k);

  if (const std::string* f = get("basis.family")) {
    wrap("basis.family", [&] { cfg.family = parse_family(*f); });
  }
  number("basis.max_dim", cfg.max_dim);
  number("basis.r_max", cfg.r_max);

  number("domain.q_lo", cfg.q_lo);
  number("domain.q_hi", cfg.q_hi);

  if (const std::string* m = get("penalty.mode")) {
    if (*m == "practical") {
      cfg.penalty_mode = PenaltyMode::Practical;
    } else if (*m == "theoretical") {
      cfg.penalty_mode = PenaltyMode::Theoretical;
    } else {
      throw Error(ErrorKind::Config, "penalty.mode: expected practical or theoretical, got '" + *m + "'");
    }
  }
  number("penalty.kappa", cfg.kappa);
  number("penalty.sigma1_sq", cfg.sigma1_sq);

  number("seeds.base", cfg.seed_base);
  if (const std::string* s = get("seeds.volatility")) {
    cfg.seed_volatility = detail::parse_number<std::uint64_t>("seeds.volatility", *s);
  }
  if (const std::string* s = get("seeds.price")) {
    cfg.seed_price = detail::parse_number<std::uint64_t>("seeds.price", *s);
  }
  number("mc.replications", cfg.replications);
  number("mc.curves", cfg.curve_replications);

  validate(cfg);
  return cfg;
}

/// Canonical text form; parse_config(dump_config(c)) == c.
inline std::string dump_config(const RunConfig& c) {
  std::ostringstream out;
  out << "preset = " << preset_name(c.preset) << "\n\n";
  out << "[model]\n";
  out << "name = " << model_name(c.model.id) << "\n";
  out << "theta = " << format_double(c.model.theta) << "\n";
  out << "c = " << format_double(c.model.c) << "\n";
  if (c.model.d) out << "d = " << *c.model.d << "\n";
  out << "\n[sampling]\n";
  out << "horizon = " << format_double(c.horizon) << "\n";
  out << "fine_step = " << format_double(c.fine_step) << "\n";
  out << "step = " << format_double(c.step) << "\n";
  out << "k = ";
  for (std::size_t i = 0; i < c.ks.size(); ++i) out << (i ? "," : "") << c.ks[i];
  out << "\n\n[basis]\n";
  out << "family = " << family_name(c.family) << "\n";
  out << "max_dim = " << c.max_dim << "\n";
  out << "r_max = " << c.r_max << "\n";
  out << "\n[domain]\n";
  out << "q_lo = " << format_double(c.q_lo) << "\n";
  out << "q_hi = " << format_double(c.q_hi) << "\n";
  out << "\n[penalty]\n";
  out << "mode = " << penalty_mode_name(c.penalty_mode) << "\n";
  out << "kappa = " << format_double(c.kappa) << "\n";
  out << "sigma1_sq = " << format_double(c.sigma1_sq) << "\n";
  out << "\n[seeds]\n";
  out << "base = " << c.seed_base << "\n";
  if (c.seed_volatility) out << "volatility = " << *c.seed_volatility << "\n";
  if (c.seed_price) out << "price = " << *c.seed_price << "\n";
  out << "\n[mc]\n";
  out << "replications = " << c.replications << "\n";
  out << "curves = " << c.curve_replications << "\n";
  return out.str();
}

/// Experiment plans for `mc-table`. The table2 preset expands to the four
/// reference models, with both bases for CIR.
inline std::vector<ExperimentPlan> experiment_plans(const RunConfig& c) {
  const auto make = [&](ModelSpec model, std::vector<BasisFamily> families) {
    ExperimentPlan p;
    p.model = model;
    p.sampling = c.sampling();
    p.ks = c.ks;
    p.families = std::move(families);
    p.replications = c.replications;
    p.base_seed = c.seed_base;
    p.settings = c.settings();
    p.curve_replications = c.curve_replications;
    return p;
  };
  if (c.preset == Preset::Table2) {
    return {make(ModelSpec::reference(ModelId::ExpOU), {BasisFamily::Trig}),
            make(ModelSpec::reference(ModelId::TanhOUShift), {BasisFamily::Trig}),
            make(ModelSpec::reference(ModelId::ExpTanhOU), {BasisFamily::Trig}),
            make(ModelSpec::reference(ModelId::CIR), {BasisFamily::Trig, BasisFamily::PiecewisePoly})};
  }
  return {make(c.model, {c.family})};
}

}  // namespace stovol
