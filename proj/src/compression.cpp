#include "stream_ot/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

#include "stream_ot/error.hpp"
#include "stream_ot/nnls.hpp"
#include "stream_ot/quadrature.hpp"
#include "stream_ot/sampling.hpp"

namespace stream_ot {

namespace {

constexpr double prune_ratio = 1e-14;

void check_shared(const Potential& u, const Potential& v) {
  if (u.epsilon() != v.epsilon() || !(u.cost() == v.cost())) {
    throw Error(Errc::invalid_argument, "potentials must share epsilon and cost");
  }
}

struct LogFourierResult {
  std::vector<std::size_t> kept;
  std::vector<double> log_x;
  double scaled_residual = 0.0;  // residual after scaling the top weight to 1
  double log_scale = 0.0;
  CompressionReport report;
};

// Nonnegative fit of the damped Fourier moments exp(-eps|k|^2/4) exp(-i k.y)
// of sum_i x_i delta_{y_i}, with x given in log form. Columns all have the
// same norm; the largest weight is scaled to 1 before solving.
LogFourierResult fourier_compress_log(const PointSet& atoms, std::span<const double> log_x,
                                      std::size_t m, double eps) {
  if (m == 0) throw Error(Errc::invalid_argument, "compression size must be positive");
  const std::size_t n = atoms.size();
  const std::size_t d = atoms.dim();
  const double top = *std::max_element(log_x.begin(), log_x.end());
  if (!std::isfinite(top)) throw Error(Errc::empty_representation, "measure has no mass");

  const FrequencySet freqs = make_frequency_set(m, d, eps);
  const auto rows = static_cast<Eigen::Index>(2 * m);
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < m; ++k) {
    auto freq = freqs.frequencies[k];
    double k2 = 0.0;
    for (double c : freq) k2 += c * c;
    const double damp = std::exp(-eps * k2 / 4.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto y = atoms[i];
      double phase = 0.0;
      for (std::size_t c = 0; c < d; ++c) phase += freq[c] * y[c];
      a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = damp * std::cos(phase);
      a(static_cast<Eigen::Index>(m + k), static_cast<Eigen::Index>(i)) = -damp * std::sin(phase);
    }
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = std::exp(log_x[i] - top);
  const Eigen::VectorXd b = a * x;

  const NnlsResult sol = nnls(a, b);
  const double xmax = sol.x.maxCoeff();
  LogFourierResult out;
  Eigen::VectorXd pruned = Eigen::VectorXd::Zero(sol.x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = sol.x(static_cast<Eigen::Index>(i));
    if (xi > prune_ratio * xmax && xi > 0.0) {
      out.kept.push_back(i);
      out.log_x.push_back(std::log(xi) + top);
      pruned(static_cast<Eigen::Index>(i)) = xi;
    }
  }
  const double res = (a * pruned - b).norm();
  out.scaled_residual = res;
  out.log_scale = top;
  out.report.input_size = n;
  out.report.output_size = out.kept.size();
  out.report.target = m;
  out.report.relative_residual = b.norm() > 0.0 ? res / b.norm() : 0.0;
  out.report.converged = sol.converged && !out.kept.empty();
  out.report.iterations = sol.iterations;
  return out;
}

}  // namespace

FrequencySet make_frequency_set(std::size_t m, std::size_t dim, double epsilon) {
  if (m == 0) throw Error(Errc::invalid_argument, "frequency count must be positive");
  FrequencySet out{PointSet(dim), epsilon};
  out.frequencies.reserve(m);
  const std::vector<double> zero(dim, 0.0);
  out.frequencies.push_back(zero);
  if (m > 1) out.frequencies.append(qmc_gaussian_frequencies(m - 1, dim, epsilon));
  return out;
}

WeightedMeasure merge_duplicates(const WeightedMeasure& mu) {
  mu.validate();
  const std::size_t n = mu.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t i, std::size_t j) {
    auto p = mu.atoms[i];
    auto q = mu.atoms[j];
    return std::lexicographical_compare(p.begin(), p.end(), q.begin(), q.end());
  };
  std::stable_sort(order.begin(), order.end(), less);
  WeightedMeasure out{PointSet(mu.atoms.dim()), {}};
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto i = order[idx];
    if (mu.weights[i] == 0.0) continue;
    if (!out.weights.empty()) {
      auto last = out.atoms[out.size() - 1];
      auto cur = mu.atoms[i];
      if (std::equal(last.begin(), last.end(), cur.begin())) {
        out.weights.back() += mu.weights[i];
        continue;
      }
    }
    out.atoms.push_back(mu.atoms[i]);
    out.weights.push_back(mu.weights[i]);
  }
  return out;
}

std::vector<double> measure_log_weights(const Potential& u, const Potential& v) {
  check_shared(u, v);
  const double eps = u.epsilon();
  std::vector<double> out = v(u.atoms());
  const auto& q = u.log_weights();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (q[i] - out[i]) / eps;
  return out;
}

WeightedMeasure potential_to_measure(const Potential& u, const Potential& v) {
  const auto logw = measure_log_weights(u, v);
  WeightedMeasure mu{u.atoms(), std::vector<double>(logw.size())};
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double w = std::exp(logw[i]);
    if (w > 1.0 + 1e-6) {
      throw Error(Errc::representation_corruption,
                  "measure weight " + std::to_string(w) + " exceeds 1 at atom " + std::to_string(i));
    }
    mu.weights[i] = w;
  }
  return mu;
}

Potential measure_to_potential(const WeightedMeasure& mu_hat, const Potential& v, double epsilon) {
  if (mu_hat.size() != mu_hat.atoms.size()) throw Error(Errc::alignment, "weights and atoms differ");
  std::vector<double> q = v(mu_hat.atoms);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(mu_hat.weights[i] > 0.0)) {
      throw Error(Errc::invalid_argument, "zero weights must be pruned before conversion");
    }
    q[i] += epsilon * std::log(mu_hat.weights[i]);
  }
  return Potential(epsilon, v.cost(), mu_hat.atoms, std::move(q));
}

CompressedMeasure gq_compress(const WeightedMeasure& mu, std::size_t m) {
  if (mu.atoms.dim() != 1) throw Error(Errc::invalid_argument, "Gaussian quadrature needs d = 1");
  if (m == 0) throw Error(Errc::invalid_argument, "compression size must be positive");
  const WeightedMeasure merged = merge_duplicates(mu);
  const std::size_t n = merged.size();
  CompressedMeasure out;
  out.report.input_size = mu.size();
  out.report.target = m;
  if (m > n) {
    out.measure = mu;
    out.report.output_size = mu.size();
    out.report.noop = true;
    return out;
  }
  // Center and scale the nodes so the recurrence works on O(1) numbers.
  const auto& x = merged.atoms.coords();
  const double lo = x.front();
  const double hi = x.back();
  const double mid = 0.5 * (lo + hi);
  const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = (x[i] - mid) / half;
  const double mass = merged.total_mass();
  std::vector<double> w(merged.weights);
  for (double& wi : w) wi /= mass;

  const QuadratureRule rule = gauss_rule(lanczos_recurrence(t, w, m));
  out.measure.atoms = PointSet(1);
  for (std::size_t k = 0; k < m; ++k) {
    if (!(rule.weights[k] > 0.0)) continue;
    const double node = mid + half * rule.nodes[k];
    out.measure.atoms.push_back(std::span<const double>(&node, 1));
    out.measure.weights.push_back(rule.weights[k] * mass);
  }
  out.report.output_size = out.measure.size();
  return out;
}

MomentSystem fourier_moment_system(const WeightedMeasure& mu, const Potential& v,
                                   const FrequencySet& freqs) {
  if (freqs.size() == 0) throw Error(Errc::invalid_argument, "no frequencies");
  if (mu.size() != mu.atoms.size()) throw Error(Errc::alignment, "weights and atoms differ");
  const double eps = freqs.epsilon;
  const std::size_t d = mu.atoms.dim();
  const std::size_t n = mu.size();
  const std::vector<double> gv = v(mu.atoms);
  for (std::size_t i = 0; i < n; ++i) {
    if (gv[i] / eps > 700.0) {
      throw Error(Errc::scaling, "reference density underflows at atom " + std::to_string(i) +
                                     " (log value " + std::to_string(-gv[i] / eps) + ")");
    }
  }
  const double scale = std::pow(eps * std::numbers::pi, static_cast<double>(d) / 2.0);
  MomentSystem sys;
  sys.matrix.resize(static_cast<Eigen::Index>(freqs.size()), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    auto freq = freqs.frequencies[k];
    double k2 = 0.0;
    for (double c : freq) k2 += c * c;
    const double damp = scale * std::exp(-eps * k2 / 4.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto y = mu.atoms[i];
      double phase = 0.0;
      for (std::size_t c = 0; c < d; ++c) phase += freq[c] * y[c];
      sys.matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          damp * std::exp(gv[i] / eps) * std::polar(1.0, -phase);
    }
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = mu.weights[i];
  sys.rhs = sys.matrix * w.cast<std::complex<double>>();
  return sys;
}

Eigen::MatrixXd stack_real(const Eigen::MatrixXcd& m) {
  Eigen::MatrixXd out(2 * m.rows(), m.cols());
  out.topRows(m.rows()) = m.real();
  out.bottomRows(m.rows()) = m.imag();
  return out;
}

Eigen::VectorXd stack_real(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

CompressedMeasure fourier_compress(const WeightedMeasure& mu, const Potential& v, std::size_t m,
                                   double epsilon, FourierBasis basis) {
  mu.validate();
  const std::vector<double> gv = v(mu.atoms);
  std::vector<std::size_t> live;
  std::vector<double> log_x;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weights[i] > 0.0) {
      live.push_back(i);
      const double lw = std::log(mu.weights[i]);
      log_x.push_back(basis == FourierBasis::kernel ? lw + gv[i] / epsilon : lw);
    }
  }
  const PointSet atoms = mu.atoms.subset(live);
  auto res = fourier_compress_log(atoms, log_x, m, epsilon);
  CompressedMeasure out;
  out.measure.atoms = atoms.subset(res.kept);
  for (std::size_t j = 0; j < res.kept.size(); ++j) {
    const double back = basis == FourierBasis::kernel ? gv[live[res.kept[j]]] / epsilon : 0.0;
    out.measure.weights.push_back(std::exp(res.log_x[j] - back));
  }
  out.report = res.report;
  out.report.input_size = mu.size();
  // In kernel units the moment matrix carries (eps pi)^(d/2) and the
  // weights were scaled by exp(-log_scale).
  if (basis == FourierBasis::kernel) {
    const double scale = std::pow(epsilon * std::numbers::pi, static_cast<double>(mu.atoms.dim()) / 2.0);
    out.report.residual = scale * std::exp(res.log_scale) * res.scaled_residual;
  } else {
    out.report.residual = std::exp(res.log_scale) * res.scaled_residual;
  }
  return out;
}

CompressedPotential compress_potential(const Potential& u, const Potential& phi,
                                       CompressionMethod method, std::size_t m,
                                       FourierBasis basis) {
  check_shared(u, phi);
  const double eps = u.epsilon();
  CompressedPotential out;
  switch (method) {
    case CompressionMethod::none:
      out.potential = u;
      out.report.input_size = out.report.output_size = u.size();
      out.report.noop = true;
      return out;
    case CompressionMethod::fourier: {
      std::vector<double> log_x;
      if (basis == FourierBasis::kernel) {
        log_x = u.log_weights();
        for (double& v : log_x) v /= eps;
      } else {
        log_x = measure_log_weights(u, phi);
      }
      auto res = fourier_compress_log(u.atoms(), log_x, m, eps);
      PointSet atoms = u.atoms().subset(res.kept);
      std::vector<double> q(res.log_x.size());
      std::vector<double> back(q.size(), 0.0);
      if (basis == FourierBasis::measure) back = phi(atoms);
      for (std::size_t j = 0; j < q.size(); ++j) q[j] = eps * res.log_x[j] + back[j];
      out.potential = Potential(eps, u.cost(), std::move(atoms), std::move(q));
      out.report = res.report;
      out.report.residual = std::exp(res.log_scale) * res.scaled_residual;
      return out;
    }
    case CompressionMethod::gq: {
      const auto logw = measure_log_weights(u, phi);
      const double top = *std::max_element(logw.begin(), logw.end());
      WeightedMeasure mu{u.atoms(), std::vector<double>(logw.size())};
      for (std::size_t i = 0; i < logw.size(); ++i) mu.weights[i] = std::exp(logw[i] - top);
      auto res = gq_compress(mu, m);
      if (res.report.noop) {
        out.potential = u;
      } else {
        std::vector<double> q = phi(res.measure.atoms);
        for (std::size_t i = 0; i < q.size(); ++i) {
          q[i] += eps * (std::log(res.measure.weights[i]) + top);
        }
        out.potential = Potential(eps, u.cost(), std::move(res.measure.atoms), std::move(q));
      }
      out.report = res.report;
      return out;
    }
  }
  throw Error(Errc::invalid_argument, "unknown compression method");
}

double compression_error_probe(const Potential& f, const Potential& f_hat, const PointSet& grid) {
  const auto a = f(grid);
  const auto b = f_hat(grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace stream_ot
