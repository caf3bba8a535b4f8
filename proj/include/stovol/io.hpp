#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stovol/config.hpp"
#include "stovol/error.hpp"
#include "stovol/lsq_estimator.hpp"
#include "stovol/mc_harness.hpp"
#include "stovol/model_selection.hpp"
#include "stovol/pipeline.hpp"
#include "stovol/quadvar.hpp"
#include "stovol/sampling.hpp"

namespace stovol::io {

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
}

/// `t,V` at the observation grid.
inline void write_path_csv(std::ostream& out, const std::vector<double>& coarse_values, double step) {
  out << "t,V\n";
  for (std::size_t i = 0; i < coarse_values.size(); ++i) {
    out << format_double(static_cast<double>(i) * step) << ',' << format_double(coarse_values[i]) << '\n';
  }
}

/// `l,dX`, l = 1..n.
inline void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  out << "l,dX\n";
  for (std::size_t l = 0; l < obs.increments.size(); ++l) {
    out << (l + 1) << ',' << format_double(obs.increments[l]) << '\n';
  }
}

/// Reads an `l,dX` file. Rows must be in increasing l starting at 1.
inline ObservationSet read_observations_csv(std::istream& in, double step) {
  ObservationSet obs;
  obs.step = step;
  std::string line;
  int line_no = 0;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, "observation file is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "l,dX", ErrorKind::Io, "observation file: expected header 'l,dX', got '" + line + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::Io,
            "observation file line " + std::to_string(line_no) + ": expected 'l,dX'");
    const auto l = detail::parse_number<std::size_t>("l", line.substr(0, comma));
    require(l == obs.increments.size() + 1, ErrorKind::Io,
            "observation file line " + std::to_string(line_no) + ": out-of-sequence index");
    double dx = 0.0;
    try {
      dx = detail::parse_number<double>("dX", line.substr(comma + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::Io, "observation file line " + std::to_string(line_no) + ": " + e.what());
    }
    obs.increments.push_back(dx);
  }
  require(!obs.increments.empty(), ErrorKind::Io, "observation file has no data rows");
  return obs;
}

inline ObservationSet read_observations_csv(const std::filesystem::path& path, double step) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open observation file '" + path.string() + "'");
  return read_observations_csv(in, step);
}

/// `i,qv`.
inline void write_quadvar_csv(std::ostream& out, const QuadVarSeries& qv) {
  out << "i,qv\n";
  for (std::size_t i = 0; i < qv.values.size(); ++i) out << i << ',' << format_double(qv.values[i]) << '\n';
}

/// `i,x,y`.
inline void write_regression_csv(std::ostream& out, const RegressionSample& s) {
  out << "i,x,y\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << i << ',' << format_double(s.x[i]) << ',' << format_double(s.y[i]) << '\n';
  }
}

/// `family,dim,contrast,penalty,criterion,chosen`.
inline void write_trace_csv(std::ostream& out, const SelectionOutcome& sel) {
  out << "family,dim,contrast,penalty,criterion,chosen\n";
  for (std::size_t i = 0; i < sel.table.size(); ++i) {
    const SelectionRow& r = sel.table[i];
    out << family_name(r.spec.family) << ',' << r.spec.dimension() << ',' << format_double(r.contrast)
        << ',' << format_double(r.penalty) << ',' << format_double(r.criterion) << ','
        << (i == sel.chosen ? 1 : 0) << '\n';
  }
}

/// `v,fhat` on 512 points over the estimation domain.
inline void write_curve_csv(std::ostream& out, const Fit& f) {
  out << "v,fhat\n";
  for (const CurvePoint& p : fitted_curve(f)) out << format_double(p.v) << ',' << format_double(p.fhat) << '\n';
}

inline nlohmann::json spec_json(const BasisSpec& s) {
  nlohmann::json j{{"family", family_name(s.family)}, {"dim", s.dimension()}};
  if (s.family == BasisFamily::PiecewisePoly) {
    j["depth"] = s.depth;
    j["degree"] = s.degree;
  }
  return j;
}

inline nlohmann::json estimation_json(const Estimation& est) {
  nlohmann::json j;
  j["k"] = est.qv.k;
  j["blocks"] = est.qv.blocks();
  j["block_length"] = est.qv.block_length;
  j["domain"] = {est.domain.lo, est.domain.hi};
  j["max_dim"] = est.max_dim;
  j["guarded"] = est.guarded();
  if (est.calibration) {
    const DiffCalibration& c = *est.calibration;
    j["calibration"] = {{"preliminary_s_sq", c.preliminary_s_sq},
                        {"preliminary_choice", spec_json(c.preliminary.chosen_row().spec)},
                        {"quantile", c.quantile},
                        {"s2", c.s2},
                        {"s2_sq", c.s2_sq}};
  }
  j["drift_s_sq"] = est.drift_s_sq;
  j["drift"] = {{"chosen", spec_json(est.drift.chosen_row().spec)},
                {"coeffs", est.drift.chosen_fit().coeffs},
                {"contrast", est.drift.chosen_row().contrast}};
  j["diffusion"] = {{"chosen", spec_json(est.diffusion.chosen_row().spec)},
                    {"coeffs", est.diffusion.chosen_fit().coeffs},
                    {"contrast", est.diffusion.chosen_row().contrast}};
  return j;
}

inline nlohmann::json model_json(const ModelSpec& m) {
  nlohmann::json j{{"name", model_name(m.id)}, {"theta", m.theta}, {"c", m.c}};
  if (m.d) j["d"] = *m.d;
  return j;
}

inline nlohmann::json stats_json(const ErrorStats& s) {
  nlohmann::json j;
  j["mean"] = s.values.empty() ? nlohmann::json(nullptr) : nlohmann::json(s.mean);
  j["std"] = s.stddev ? nlohmann::json(*s.stddev) : nlohmann::json(nullptr);
  j["values"] = s.values;
  return j;
}

/// Full report. Excludes wall-clock time so equal inputs give equal bytes.
inline nlohmann::json report_json(const McReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary& c : r.cells) {
    nlohmann::json j;
    j["model"] = model_json(c.model);
    j["basis"] = family_name(c.family);
    j["k"] = c.k;
    j["R"] = c.replications;
    j["failures"] = c.failures.size();
    nlohmann::json reasons = nlohmann::json::object();
    for (const auto& [rep, why] : c.failures) reasons[std::to_string(rep)] = why;
    j["failure_reasons"] = reasons;
    j["guarded"] = c.guarded;
    j["b"] = stats_json(c.b);
    j["sigma2"] = stats_json(c.sig);
    nlohmann::json db = nlohmann::json::object();
    for (const auto& [d, n] : c.dims_b) db[std::to_string(d)] = n;
    nlohmann::json ds = nlohmann::json::object();
    for (const auto& [d, n] : c.dims_sig) ds[std::to_string(d)] = n;
    j["dims_b"] = db;
    j["dims_sigma2"] = ds;
    cells.push_back(std::move(j));
  }
  return nlohmann::json{{"cells", cells}};
}

/// `model,basis,k,target,mean,std,R,failures`; std left empty when absent.
inline void write_report_csv(std::ostream& out, const McReport& r) {
  out << "model,basis,k,target,mean,std,R,failures\n";
  for (const CellSummary& c : r.cells) {
    for (const auto& [target, stats] : {std::pair{"b", &c.b}, std::pair{"sigma2", &c.sig}}) {
      out << model_name(c.model.id) << ',' << family_name(c.family) << ',' << c.k << ',' << target << ','
          << (stats->values.empty() ? std::string() : format_double(stats->mean)) << ','
          << (stats->stddev ? format_double(*stats->stddev) : std::string()) << ',' << c.replications
          << ',' << c.failures.size() << '\n';
    }
  }
}

/// `model,basis,k,rep,target,v,fhat,truth` for the retained curve bundles.
inline void write_curves_csv(std::ostream& out, const McReport& r) {
  out << "model,basis,k,rep,target,v,fhat,truth\n";
  for (const CellSummary& c : r.cells) {
    for (const CurveBundle& b : c.curves) {
      for (const auto& [target, pts] : {std::pair{"b", &b.drift}, std::pair{"sigma2", &b.diffusion}}) {
        for (const CurveSample& p : *pts) {
          out << model_name(c.model.id) << ',' << family_name(c.family) << ',' << c.k << ',' << b.rep
              << ',' << target << ',' << format_double(p.v) << ',' << format_double(p.fhat) << ','
              << format_double(p.truth) << '\n';
        }
      }
    }
  }
}

}  // namespace stovol::io
