#include "stream_ot/discrete_sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stream_ot/error.hpp"

namespace stream_ot {

void DiscreteProblem::validate() const {
  if (xs.empty() || ys.empty()) throw Error(Errc::invalid_argument, "empty discrete problem");
  if (xs.size() != ys.size()) {
    throw Error(Errc::invalid_argument, "discrete problem needs equally many points per side");
  }
  if (xs.dim() != cost.dim || ys.dim() != cost.dim) {
    throw Error(Errc::alignment, "point dimension differs from cost dimension");
  }
  if (!(epsilon > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
  for (double v : xs.coords())
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite point");
  for (double v : ys.coords())
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite point");
}

namespace {

// -eps log( (1/n) sum_j exp((h_j - C(p, atoms_j))/eps) ) evaluated at every p.
std::vector<double> half_step(const PointSet& points, const PointSet& atoms,
                              const std::vector<double>& h, const CostSpec& cost,
                              double eps) {
  const double shift = eps * std::log(1.0 / static_cast<double>(atoms.size()));
  std::vector<double> w(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) w[j] = h[j] + shift;
  Potential p(eps, cost, atoms, std::move(w));
  return p(points);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::vector<double> sinkhorn_f_update(const DiscreteProblem& prob,
                                      const std::vector<double>& g) {
  if (g.size() != prob.ys.size()) throw Error(Errc::alignment, "g not aligned with ys");
  return half_step(prob.xs, prob.ys, g, prob.cost, prob.epsilon);
}

std::vector<double> sinkhorn_g_update(const DiscreteProblem& prob,
                                      const std::vector<double>& f) {
  if (f.size() != prob.xs.size()) throw Error(Errc::alignment, "f not aligned with xs");
  return half_step(prob.ys, prob.xs, f, prob.cost, prob.epsilon);
}

std::vector<std::pair<std::vector<double>, std::vector<double>>> sinkhorn_iterates(
    const DiscreteProblem& prob, std::vector<double> g_init, std::size_t steps) {
  prob.validate();
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  out.reserve(steps);
  std::vector<double> g = std::move(g_init);
  for (std::size_t k = 0; k < steps; ++k) {
    auto f = sinkhorn_f_update(prob, g);
    g = sinkhorn_g_update(prob, f);
    out.emplace_back(std::move(f), g);
  }
  return out;
}

DualPair DiscreteSolution::as_dual_pair(const DiscreteProblem& prob) const {
  const double shift = prob.epsilon * std::log(1.0 / static_cast<double>(prob.xs.size()));
  std::vector<double> q(g.size());
  std::vector<double> p(f.size());
  for (std::size_t j = 0; j < g.size(); ++j) q[j] = g[j] + shift;
  for (std::size_t i = 0; i < f.size(); ++i) p[i] = f[i] + shift;
  return DualPair{Potential(prob.epsilon, prob.cost, prob.ys, std::move(q)),
                  Potential(prob.epsilon, prob.cost, prob.xs, std::move(p))};
}

DiscreteSolution sinkhorn_solve(const DiscreteProblem& prob, double tol,
                                std::size_t max_iters) {
  prob.validate();
  if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "tolerance must be positive");
  DiscreteSolution sol;
  std::vector<double> f(prob.xs.size(), 0.0);
  std::vector<double> g(prob.ys.size(), 0.0);
  sol.last_change = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < max_iters; ++it) {
    auto f_new = sinkhorn_f_update(prob, g);
    auto g_new = sinkhorn_g_update(prob, f_new);
    const double change = std::max(sup_diff(f_new, f), sup_diff(g_new, g));
    f = std::move(f_new);
    g = std::move(g_new);
    sol.iterations = it + 1;
    sol.last_change = change;
    if (change < tol) {
      sol.converged = true;
      break;
    }
  }
  const double c = f[0];
  for (double& v : f) v -= c;
  for (double& v : g) v += c;
  sol.dual_value = dual_objective(f, g, prob.xs, prob.ys, prob.cost, prob.epsilon);
  sol.f = std::move(f);
  sol.g = std::move(g);
  return sol;
}

Marginals plan_marginals(const DiscreteProblem& prob, const std::vector<double>& f,
                         const std::vector<double>& g) {
  const auto n = prob.xs.size();
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(prob.ys.size()));
  Marginals m{std::vector<double>(n, 0.0), std::vector<double>(prob.ys.size(), 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < prob.ys.size(); ++j) {
      const double p =
          std::exp((f[i] + g[j] - prob.cost(prob.xs[i], prob.ys[j])) / prob.epsilon) * inv_n2;
      m.rows[i] += p;
      m.cols[j] += p;
    }
  }
  return m;
}

ReferenceValue reference_dual_value(const Distribution& alpha, const Distribution& beta,
                                    double epsilon, std::size_t n_ref, std::uint64_t seed,
                                    double tol, std::size_t max_iters) {
  if (n_ref < 256) throw Error(Errc::invalid_argument, "reference needs n_ref >= 256");
  if (alpha.dim() != beta.dim()) throw Error(Errc::alignment, "distribution dimensions differ");
  Rng rng(seed);
  Rng rx = rng.substream(1);
  Rng ry = rng.substream(2);
  DiscreteProblem prob{alpha.sample(n_ref, rx), beta.sample(n_ref, ry), epsilon,
                       CostSpec{CostKind::squared_euclidean, alpha.dim()}};
  const auto sol = sinkhorn_solve(prob, tol, max_iters);
  return {sol.dual_value, sol.converged, sol.iterations, n_ref};
}

}  // namespace stream_ot
