#pragma once

// Run configuration, experiment orchestration, trace CSV files and SVG
// convergence plots.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stream_ot/compressed_online.hpp"

namespace stream_ot {

struct RunConfig {
  std::string preset = "gauss1d_paper";
  std::optional<nlohmann::json> alpha;  // inline distribution, overrides the preset
  std::optional<nlohmann::json> beta;
  double epsilon = 0.3;
  double a = 1.2;
  double b = -0.6;
  double zeta = 1.0;
  std::string algo = "os";         // os | cos
  std::string compress = "none";   // none | fourier | gq
  std::string basis = "measure";   // measure | kernel
  std::size_t trigger = 1000;
  std::size_t every = 1;
  std::optional<std::size_t> n_max;
  std::optional<std::size_t> iterations;
  std::uint64_t seed = 1;
  std::string output;

  Schedule schedule() const { return {a, b, epsilon, zeta}; }
  Budget budget() const;
  CompressionConfig compression() const;
  DistributionPair distributions() const;
};

/// Effective configuration resolved in this order, later winning: built-in
/// defaults, STREAM_OT_SEED (seed only), the JSON file, then `flags`, a JSON
/// object with the same keys as the file. Schedule violations are rejected
/// here, naming the violated assumption.
RunConfig parse_config(const std::optional<std::string>& path,
                       const nlohmann::json& flags = nlohmann::json::object());

nlohmann::json dump_config(const RunConfig& cfg);

/// Builds a distribution from {"mean": [...], "cov": [[...]]} or
/// {"means": [[...]], "covs": [[[...]]], "weights": [...]}.
Distribution distribution_from_json(const nlohmann::json& spec);

inline constexpr const char* trace_csv_header =
    "t,N,support_f,support_g,err_succ_var,dual_obj,comp_sup_err,wall_ms";

std::string trace_to_csv(const Trace& trace);
void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

struct ExperimentResult {
  Trace trace;
  CompressionStats stats;
  std::string summary;
};

/// Runs one configuration, writes the CSV if an output path is set and
/// returns a one-line summary with the fitted and theoretical rates.
ExperimentResult run_experiment(const RunConfig& cfg);

struct PlotSeries {
  std::string label;
  Trace trace;
};

/// SVG of err_succ_var against N on log-log axes, one polyline per series,
/// plus guide lines of slope -a/(2a+1) and b/(2a+1) anchored at the last
/// point of the first series. Also writes the plotted data next to it as
/// <out>.data.csv.
void emit_plot(const std::vector<PlotSeries>& series, const std::string& out_path,
               double a, double b);
std::string render_plot(const std::vector<PlotSeries>& series, double a, double b);

}  // namespace stream_ot
