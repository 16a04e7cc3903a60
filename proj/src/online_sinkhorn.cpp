#include "stream_ot/online_sinkhorn.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "stream_ot/error.hpp"

namespace stream_ot {

namespace {

std::size_t ceil_pow(double base, double exponent) {
  const double v = std::pow(base, exponent);
  // Guard exact integer powers against pow() rounding up by an ulp.
  return static_cast<std::size_t>(std::ceil(v * (1.0 - 1e-12)));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void Schedule::validate() const {
  if (!(b > -1.0 && b < -0.5)) {
    throw Error(Errc::schedule, "Assumption 2 violated: need −1 < b < −1/2, got b = " + fmt(b));
  }
  if (!(a - b > 1.0)) {
    throw Error(Errc::schedule, "Assumption 3 violated: a−b ≤ 1 (a = " + fmt(a) +
                                    ", b = " + fmt(b) + ")");
  }
  if (!(epsilon > 0.0)) {
    throw Error(Errc::schedule, "epsilon must be positive, got " + fmt(epsilon));
  }
  if (!(zeta > 0.0)) {
    throw Error(Errc::schedule, "zeta must be positive, got " + fmt(zeta));
  }
}

double Schedule::eta(std::size_t t) const {
  return std::pow(static_cast<double>(t) + 1.0, b);
}

std::size_t Schedule::batch(std::size_t t) const {
  return ceil_pow(static_cast<double>(t) + 1.0, 2.0 * a);
}

std::size_t Schedule::compression_size(std::size_t t) const {
  return ceil_pow(static_cast<double>(t) + 1.0, (a - b) / zeta);
}

std::size_t samples_through(const Schedule& sched, std::size_t t) {
  std::size_t n = 0;
  for (std::size_t i = 0; i <= t; ++i) n += sched.batch(i);
  return n;
}

std::size_t iteration_for_samples(const Schedule& sched, std::size_t n) {
  std::size_t total = sched.batch(0);
  for (std::size_t t = 1;; ++t) {
    total += sched.batch(t);
    if (total > n) return t;
  }
}

CostEstimate per_iteration_cost(const Schedule& sched, std::size_t t) {
  if (t == 0) throw Error(Errc::invalid_argument, "iteration index starts at 1");
  double n = 0.0;
  for (std::size_t i = 1; i <= t; ++i) n += static_cast<double>(sched.batch(i));
  return {n * static_cast<double>(sched.batch(t)), n};
}

double cumulative_cost(const Schedule& sched, std::size_t t) {
  double n = 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i <= t; ++i) {
    const auto b = static_cast<double>(sched.batch(i));
    n += b;
    total += n * b;
  }
  return total;
}

RunState init_run(const Distribution& alpha, const Distribution& beta,
                  const Schedule& sched, std::uint64_t seed) {
  sched.validate();
  if (alpha.dim() != beta.dim()) throw Error(Errc::alignment, "distribution dimensions differ");
  RunState st{alpha, beta, 1, 0, {}, Rng(seed), {}, 0};
  const auto b0 = sched.batch(0);
  const CostSpec cost{CostKind::squared_euclidean, alpha.dim()};
  PointSet xs = alpha.sample(b0, st.rng);
  PointSet ys = beta.sample(b0, st.rng);
  st.pair.f = Potential(sched.epsilon, cost, std::move(ys), std::vector<double>(b0, 0.0));
  st.pair.g = Potential(sched.epsilon, cost, std::move(xs), std::vector<double>(b0, 0.0));
  st.n = b0;
  return st;
}

UpdateResult apply_online_update(DualPair& pair, const PointSet& x_batch,
                                 const PointSet& y_batch, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(Errc::schedule, "learning rate must be in (0, 1]");
  if (x_batch.empty() || y_batch.empty()) throw Error(Errc::invalid_argument, "empty batch");
  const double eps = pair.epsilon();
  UpdateResult res;

  res.g_at_batch = pair.g(y_batch);
  std::vector<double> q(y_batch.size());
  const double share_y = eps * std::log(eta / static_cast<double>(y_batch.size()));
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = share_y + res.g_at_batch[j];
  if (eta == 1.0) {
    pair.f = Potential(eps, pair.f.cost(), y_batch, std::move(q));
  } else {
    pair.f.shift_weights(eps * std::log1p(-eta));
    pair.f.append(y_batch, q);
  }

  res.f_at_batch = pair.f(x_batch);
  std::vector<double> p(x_batch.size());
  const double share_x = eps * std::log(eta / static_cast<double>(x_batch.size()));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = share_x + res.f_at_batch[i];
  if (eta == 1.0) {
    pair.g = Potential(eps, pair.g.cost(), x_batch, std::move(p));
  } else {
    pair.g.shift_weights(eps * std::log1p(-eta));
    pair.g.append(x_batch, p);
  }
  return res;
}

StepReport os_step(RunState& state, const Schedule& sched) {
  if (state.t == 0) throw Error(Errc::schedule, "iterations start at t = 1");
  const double eta = sched.eta(state.t);
  if (!(eta < 1.0)) throw Error(Errc::schedule, "learning rate must be below 1");
  const auto batch = sched.batch(state.t);
  PointSet xs = state.alpha.sample(batch, state.rng);
  PointSet ys = state.beta.sample(batch, state.rng);
  apply_online_update(state.pair, xs, ys, eta);
  state.n += batch;
  ++state.t;
  return {eta, batch};
}

void Budget::validate() const {
  if (iterations.has_value() == n_max.has_value()) {
    throw Error(Errc::invalid_argument, "give exactly one of an iteration count or a sample budget");
  }
}

PointSet box_qmc(const Box& box, std::size_t n) {
  PointSet out = SobolSequence::points(box.dim(), 1, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = out[i];
    for (std::size_t k = 0; k < box.dim(); ++k) p[k] = box.lo[k] + p[k] * (box.hi[k] - box.lo[k]);
  }
  return out;
}

Diagnostics make_diagnostics(const Distribution& alpha, const Distribution& beta,
                             std::uint64_t seed, const DiagnosticsOptions& opts) {
  Rng rng = Rng(seed).substream(3);
  Diagnostics d;
  d.pilot_x = alpha.sample(opts.pilot_size, rng);
  d.pilot_y = beta.sample(opts.pilot_size, rng);
  const Box bx = bounding_box(d.pilot_x);
  const Box by = bounding_box(d.pilot_y);
  d.grid_x = box_grid(bx, opts.grid_size);
  d.grid_y = box_grid(by, opts.grid_size);
  d.probe_x = box_qmc(bx, opts.probe_size);
  d.probe_y = box_qmc(by, opts.probe_size);
  return d;
}

RunResult run_driver(const Distribution& alpha, const Distribution& beta,
                     const Schedule& sched, const Budget& budget, std::uint64_t seed,
                     const StepFunction& step, const DiagnosticsOptions& opts) {
  budget.validate();
  sched.validate();
  const Diagnostics diag = make_diagnostics(alpha, beta, seed, opts);
  RunState st = init_run(alpha, beta, sched, seed);

  std::vector<double> prev_f = st.pair.f(diag.grid_x);
  std::vector<double> prev_g = st.pair.g(diag.grid_y);
  std::vector<double> diff_f(prev_f.size());
  std::vector<double> diff_g(prev_g.size());

  RunResult out;
  double wall_ms = 0.0;
  std::size_t done = 0;
  using clock = std::chrono::steady_clock;
  while (true) {
    if (budget.iterations && done >= *budget.iterations) break;
    if (budget.n_max && st.n >= *budget.n_max) break;

    const std::size_t t = st.t;
    const auto start = clock::now();
    const StepOutcome outcome = step(st, diag);
    wall_ms += std::chrono::duration<double, std::milli>(clock::now() - start).count();
    ++done;

    TraceRow row;
    row.t = t;
    row.N = st.n;
    row.support_f = st.pair.f.size();
    row.support_g = st.pair.g.size();
    auto f_now = st.pair.f(diag.grid_x);
    auto g_now = st.pair.g(diag.grid_y);
    for (std::size_t i = 0; i < f_now.size(); ++i) diff_f[i] = f_now[i] - prev_f[i];
    for (std::size_t i = 0; i < g_now.size(); ++i) diff_g[i] = g_now[i] - prev_g[i];
    row.err_succ_var = variational_norm(diff_f) + variational_norm(diff_g);
    row.dual_obj = opts.dual_objective ? dual_objective(st.pair, diag.pilot_x, diag.pilot_y)
                                       : 0.0;
    row.comp_sup_err = outcome.comp_sup_err;
    row.m_t = outcome.m;
    row.wall_ms = wall_ms;
    out.trace.rows.push_back(row);
    prev_f = std::move(f_now);
    prev_g = std::move(g_now);
  }
  out.trace.warnings = st.warnings;
  out.iterations = done;
  out.samples = st.n;
  out.pair = std::move(st.pair);
  return out;
}

RunResult run_online_sinkhorn(const Distribution& alpha, const Distribution& beta,
                              const Schedule& sched, const Budget& budget,
                              std::uint64_t seed, const DiagnosticsOptions& opts) {
  return run_driver(
      alpha, beta, sched, budget, seed,
      [&sched](RunState& st, const Diagnostics&) {
        os_step(st, sched);
        return StepOutcome{};
      },
      opts);
}

}  // namespace stream_ot
