#pragma once

// Streaming Sinkhorn: potentials kept as growing log-domain atom sets,
// updated by convex combinations with fresh sample batches.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stream_ot/core.hpp"
#include "stream_ot/sampling.hpp"

namespace stream_ot {

/// Learning-rate, batch-size and compression-size exponents:
///   eta_t = (t+1)^b,  b_t = ceil((t+1)^(2a)),  m_t = ceil((t+1)^((a-b)/zeta)).
struct Schedule {
  double a = 1.2;
  double b = -0.6;
  double epsilon = 0.3;
  double zeta = 1.0;

  /// Throws Errc::schedule naming the violated assumption.
  void validate() const;

  double eta(std::size_t t) const;
  std::size_t batch(std::size_t t) const;
  std::size_t compression_size(std::size_t t) const;
};

/// Samples drawn per side up to and including iteration t, counting the
/// initial batch: sum_{i=0..t} b_i. This is the trace's N column.
std::size_t samples_through(const Schedule& sched, std::size_t t);

/// First iteration t for which samples_through(t) > n.
std::size_t iteration_for_samples(const Schedule& sched, std::size_t n);

struct CostEstimate {
  double flops = 0.0;   // kernel evaluations, n_t * b_t
  double memory = 0.0;  // stored atoms, n_t
};

/// Cost of iteration t with n_t = sum_{i=1..t} b_i.
CostEstimate per_iteration_cost(const Schedule& sched, std::size_t t);
/// Kernel evaluations summed over iterations 1..t.
double cumulative_cost(const Schedule& sched, std::size_t t);

struct Timers {
  double step_ms = 0.0;
  double compress_ms = 0.0;
};

struct RunState {
  Distribution alpha;
  Distribution beta;
  std::size_t t = 1;
  std::size_t n = 0;  // samples drawn per side
  DualPair pair;
  Rng rng;
  Timers timers;
  std::size_t warnings = 0;
};

/// Draws the initial batch of b_0 samples per side with zero weights.
RunState init_run(const Distribution& alpha, const Distribution& beta,
                  const Schedule& sched, std::uint64_t seed);

struct UpdateResult {
  std::vector<double> g_at_batch;  // g_t at the new target samples
  std::vector<double> f_at_batch;  // f_{t+1} at the new source samples
};

/// One convex-combination update of both potentials with the given batches:
///   exp(-f'/eps) = (1-eta) exp(-f/eps) + eta mean_j exp((g(y_j) - C(., y_j))/eps)
/// then the same for g using f'. eta = 1 replaces the supports.
UpdateResult apply_online_update(DualPair& pair, const PointSet& x_batch,
                                 const PointSet& y_batch, double eta);

struct StepReport {
  double eta = 0.0;
  std::size_t batch = 0;
};

/// Draws b_t samples per side and applies the update with eta_t.
StepReport os_step(RunState& state, const Schedule& sched);

struct TraceRow {
  std::size_t t = 0;
  std::size_t N = 0;
  std::size_t support_f = 0;
  std::size_t support_g = 0;
  double err_succ_var = 0.0;
  double dual_obj = 0.0;
  std::optional<double> comp_sup_err;
  std::optional<std::size_t> m_t;
  double wall_ms = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::size_t warnings = 0;
};

/// Either an iteration count or a per-side sample budget.
struct Budget {
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> n_max;

  static Budget of_iterations(std::size_t t) { return {t, std::nullopt}; }
  static Budget of_samples(std::size_t n) { return {std::nullopt, n}; }
  void validate() const;
};

struct DiagnosticsOptions {
  std::size_t grid_size = 256;
  std::size_t probe_size = 16;
  std::size_t pilot_size = 256;
  bool dual_objective = true;
};

/// Fixed point sets used to monitor a run. Built from a pilot sample that
/// is drawn from its own sub-stream, so it does not perturb the run.
struct Diagnostics {
  PointSet pilot_x, pilot_y;
  PointSet grid_x, grid_y;
  PointSet probe_x, probe_y;
};

/// n Sobol points (indices 1..n) mapped into a box.
PointSet box_qmc(const Box& box, std::size_t n);

Diagnostics make_diagnostics(const Distribution& alpha, const Distribution& beta,
                             std::uint64_t seed, const DiagnosticsOptions& opts);

struct RunResult {
  Trace trace;
  DualPair pair;
  std::size_t iterations = 0;
  std::size_t samples = 0;
};

/// What a step reports back to the driver beyond the state change.
struct StepOutcome {
  std::optional<double> comp_sup_err;
  std::optional<std::size_t> m;
};

using StepFunction = std::function<StepOutcome(RunState&, const Diagnostics&)>;

/// Runs `step` until the budget is spent, recording one trace row per
/// iteration. wall_ms covers the step function only, not the diagnostics.
RunResult run_driver(const Distribution& alpha, const Distribution& beta,
                     const Schedule& sched, const Budget& budget, std::uint64_t seed,
                     const StepFunction& step, const DiagnosticsOptions& opts = {});

RunResult run_online_sinkhorn(const Distribution& alpha, const Distribution& beta,
                              const Schedule& sched, const Budget& budget,
                              std::uint64_t seed, const DiagnosticsOptions& opts = {});

}  // namespace stream_ot
