#include "stream_ot/compressed_online.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stream_ot/analysis.hpp"
#include "stream_ot/error.hpp"

namespace stream_ot {

void CompressionConfig::validate(std::size_t dim) const {
  if (trigger_n == 0) throw Error(Errc::invalid_argument, "compression trigger must be at least 1");
  if (every == 0) throw Error(Errc::invalid_argument, "compression cadence must be at least 1");
  if (method == CompressionMethod::gq && dim != 1) {
    throw Error(Errc::invalid_argument, "Gaussian quadrature compression needs d = 1");
  }
}

StepOutcome cos_step(RunState& state, const Schedule& sched, const CompressionConfig& cfg,
                     const Diagnostics& diag, CompressionStats& stats) {
  const std::size_t t = state.t;
  if (cfg.method == CompressionMethod::none) {
    os_step(state, sched);
    return {};
  }
  const Potential g_before = state.pair.g;
  os_step(state, sched);
  if (state.n < cfg.trigger_n) return {};
  if (stats.eligible++ % cfg.every != 0) return {};

  const std::size_t m = sched.compression_size(t);
  const Potential f_full = state.pair.f;
  const Potential g_full = state.pair.g;

  auto compress = [&](Potential& target, const Potential& phi) {
    if (cfg.monitor_weights) {
      for (double lw : measure_log_weights(target, phi)) {
        stats.max_log_weight = std::max(stats.max_log_weight, lw);
      }
    }
    try {
      auto res = compress_potential(target, phi, cfg.method, m, cfg.basis);
      if (!res.report.converged || res.potential.size() == 0) {
        ++state.warnings;
        ++stats.failures;
        return;
      }
      if (res.potential.size() > 10 * m) ++stats.oversize;
      target = std::move(res.potential);
    } catch (const Error&) {
      ++state.warnings;
      ++stats.failures;
    }
  };
  compress(state.pair.f, g_before);
  compress(state.pair.g, state.pair.f);
  ++stats.events;

  const double err = std::max(compression_error_probe(f_full, state.pair.f, diag.probe_x),
                              compression_error_probe(g_full, state.pair.g, diag.probe_y));
  return {err, m};
}

CompressedRunResult run_compressed(const Distribution& alpha, const Distribution& beta,
                                   const Schedule& sched, const CompressionConfig& cfg,
                                   const Budget& budget, std::uint64_t seed,
                                   const DiagnosticsOptions& opts) {
  cfg.validate(alpha.dim());
  CompressedRunResult out;
  out.run = run_driver(
      alpha, beta, sched, budget, seed,
      [&](RunState& st, const Diagnostics& diag) {
        return cos_step(st, sched, cfg, diag, out.stats);
      },
      opts);
  return out;
}

DecayFit assumption4_monitor(const Trace& trace) {
  std::vector<double> lm;
  std::vector<double> le;
  for (const auto& row : trace.rows) {
    if (row.comp_sup_err && row.m_t && *row.comp_sup_err > 0.0) {
      lm.push_back(std::log(static_cast<double>(*row.m_t)));
      le.push_back(std::log(*row.comp_sup_err));
    }
  }
  if (lm.size() < 4) {
    throw Error(Errc::insufficient_data,
                "need at least 4 compression events, have " + std::to_string(lm.size()));
  }
  return {fit_line(lm, le).slope, lm.size()};
}

}  // namespace stream_ot
