#pragma once

// Streaming Sinkhorn with the potentials' supports compressed after each
// update once enough samples have been seen.

#include <cstddef>
#include <limits>

#include "stream_ot/compression.hpp"
#include "stream_ot/online_sinkhorn.hpp"

namespace stream_ot {

struct CompressionConfig {
  CompressionMethod method = CompressionMethod::fourier;
  std::size_t trigger_n = 1000;  // compress once this many samples per side were drawn
  std::size_t every = 1;         // then every k-th iteration
  bool monitor_weights = false;  // track the largest measure weight (costs an extra evaluation)
  FourierBasis basis = FourierBasis::measure;

  void validate(std::size_t dim) const;
};

struct CompressionStats {
  std::size_t events = 0;
  std::size_t failures = 0;
  std::size_t oversize = 0;  // outputs with more than 10 m_t atoms
  std::size_t eligible = 0;  // iterations past the trigger
  double max_log_weight = -std::numeric_limits<double>::infinity();
};

/// One streaming update followed, when due, by compression of f (reference
/// measure from the g before the update) and then of g (reference measure
/// from the f just compressed).
StepOutcome cos_step(RunState& state, const Schedule& sched, const CompressionConfig& cfg,
                     const Diagnostics& diag, CompressionStats& stats);

struct CompressedRunResult {
  RunResult run;
  CompressionStats stats;
};

CompressedRunResult run_compressed(const Distribution& alpha, const Distribution& beta,
                                   const Schedule& sched, const CompressionConfig& cfg,
                                   const Budget& budget, std::uint64_t seed,
                                   const DiagnosticsOptions& opts = {});

struct DecayFit {
  double slope = 0.0;
  std::size_t events = 0;
};

/// Log-log slope of the recorded compression error against m_t. Needs at
/// least four events with a positive error.
DecayFit assumption4_monitor(const Trace& trace);

}  // namespace stream_ot
