#pragma once

// Log-domain Sinkhorn on fixed uniform empirical measures. Serves as the
// correctness oracle for the streaming solvers and as a reference-value
// generator.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stream_ot/core.hpp"
#include "stream_ot/points.hpp"
#include "stream_ot/sampling.hpp"

namespace stream_ot {

struct DiscreteProblem {
  PointSet xs;
  PointSet ys;
  double epsilon = 1.0;
  CostSpec cost;

  void validate() const;
};

struct DiscreteSolution {
  std::vector<double> f;  // at xs
  std::vector<double> g;  // at ys
  bool converged = false;
  std::size_t iterations = 0;
  double last_change = 0.0;
  double dual_value = 0.0;

  /// Continuous extension: f(x) = T_beta_n(g)(x), g(y) = T_alpha_n(f)(y).
  DualPair as_dual_pair(const DiscreteProblem& prob) const;
};

/// f <- T_beta_n(g) on xs.
std::vector<double> sinkhorn_f_update(const DiscreteProblem& prob,
                                      const std::vector<double>& g);
/// g <- T_alpha_n(f) on ys.
std::vector<double> sinkhorn_g_update(const DiscreteProblem& prob,
                                      const std::vector<double>& f);

/// The (f, g) iterates produced by `steps` alternating updates started from
/// g_init; element k holds the pair after k + 1 updates.
std::vector<std::pair<std::vector<double>, std::vector<double>>> sinkhorn_iterates(
    const DiscreteProblem& prob, std::vector<double> g_init, std::size_t steps);

/// Alternating updates from g = 0 until the sup-norm change of both
/// potentials drops below tol. f is reported with f(x_1) = 0.
DiscreteSolution sinkhorn_solve(const DiscreteProblem& prob, double tol,
                                std::size_t max_iters);

/// Row and column sums of the plan exp((f_i + g_j - C_ij)/eps) / n^2.
struct Marginals {
  std::vector<double> rows;
  std::vector<double> cols;
};
Marginals plan_marginals(const DiscreteProblem& prob, const std::vector<double>& f,
                         const std::vector<double>& g);

struct ReferenceValue {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t n_ref = 0;
};

/// Dual value of discrete Sinkhorn on n_ref i.i.d. samples per side.
ReferenceValue reference_dual_value(const Distribution& alpha, const Distribution& beta,
                                    double epsilon, std::size_t n_ref, std::uint64_t seed,
                                    double tol = 1e-9, std::size_t max_iters = 100000);

}  // namespace stream_ot
