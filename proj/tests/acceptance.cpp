// Acceptance checks: one PASS/FAIL line per criterion, exit code 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "stream_ot/analysis.hpp"
#include "stream_ot/compressed_online.hpp"
#include "stream_ot/compression.hpp"
#include "stream_ot/discrete_sinkhorn.hpp"
#include "stream_ot/nnls.hpp"
#include "stream_ot/online_sinkhorn.hpp"
#include "test_util.hpp"

namespace so = stream_ot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const so::CostSpec cost1{so::CostKind::squared_euclidean, 1};

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool same_traces(const so::Trace& a, const so::Trace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    if (x.t != y.t || x.N != y.N || x.support_f != y.support_f || x.support_g != y.support_g ||
        x.err_succ_var != y.err_succ_var || x.dual_obj != y.dual_obj ||
        x.comp_sup_err != y.comp_sup_err || x.m_t != y.m_t) {
      return false;
    }
  }
  return true;
}

struct Smooth {
  so::Potential u;
  so::Potential v;
  so::PointSet probe;
};

// Uniform atoms on [-w, w] with equal reference weights and a smooth
// two-atom reference potential.
Smooth smooth_instance(double eps, double w, std::size_t n = 2000) {
  so::Rng rng(5);
  so::PointSet ys(1);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = w * (2.0 * rng.uniform() - 1.0);
    ys.push_back(std::span<const double>(&t, 1));
  }
  so::Potential v(eps, cost1, so::testing::line({-0.3 * w, 0.4 * w}), {0.0, 0.0});
  auto q = v(ys);
  for (double& x : q) x += eps * std::log(1.0 / static_cast<double>(n));
  so::Potential u(eps, cost1, ys, q);
  return {u, v, so::box_qmc(so::bounding_box(ys), 16)};
}

void rate_reproduction() {
  const auto pair = so::preset("gauss1d_paper");
  const so::Schedule sched{1.2, -0.6, 0.3, 1.0};
  int inside = 0;
  double slowest = 0.0;
  double mean = 0.0;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto t0 = Clock::now();
    const auto run = so::run_online_sinkhorn(pair.alpha, pair.beta, sched, so::Budget::of_samples(30000), seed);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    const auto fit = so::fit_loglog_slope(run.trace, so::Metric::err_succ_var);
    if (fit.slope >= -0.45 && fit.slope <= -0.25) ++inside;
    mean += fit.slope / 3.0;
    detail += "seed " + std::to_string(seed) + " slope " + fmt("%.3f", fit.slope) + " (" + fmt("%.1f", secs) + " s, N " +
              std::to_string(run.samples) + "); ";
  }
  detail += "mean " + fmt("%.3f", mean) + "; " + std::to_string(inside) + "/3 in [-0.45, -0.25]";
  report(1, inside >= 2 && slowest <= 300.0, detail);
}

void rate_table() {
  struct Case {
    const char* a;
    const char* b;
    double new_rate;
    double old_rate;
  } cases[] = {{"1.2", "-0.6", -0.35, -0.18}, {"1.7", "-0.6", -0.39, -0.14}, {"1.5", "-0.55", -0.38, -0.14}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto r = so::theoretical_rates(so::Rational::parse(c.a), so::Rational::parse(c.b));
    const double nr = std::round(r.new_rate * 100.0) / 100.0;
    const double orr = std::round(r.old_rate * 100.0) / 100.0;
    ok = ok && std::abs(nr - c.new_rate) < 1e-9 && std::abs(orr - c.old_rate) < 1e-9;
    detail += "(" + fmt("%.2f", nr) + ", " + fmt("%.2f", orr) + ") ";
  }
  report(2, ok, detail);
}

void complexity_table() {
  const auto p = [](const char* s) { return so::Rational::parse(s); };
  const auto gq = so::complexity_exponents(p("1.5"), p("-0.6"), p("2"));
  const auto fourier = so::complexity_exponents(p("1.5"), p("-0.6"), p("0.95"));
  const auto second = so::complexity_exponents(p("1.2"), p("-0.6"), p("0.9"));
  const std::vector<std::pair<std::string, std::string>> got = {{gq.os_exponent.str(), "16/3"},
                                                                {gq.cos_exponent.str(), "101/30"},
                                                                {fourier.cos_exponent.str(), "290/57"},
                                                                {second.cos_exponent.str(), "35/6"},
                                                                {second.os_exponent.str(), "17/3"}};
  bool ok = true;
  std::string detail;
  for (const auto& [have, want] : got) {
    ok = ok && have == want;
    detail += have + " ";
  }
  report(3, ok, detail);
}

void unit_step_oracle() {
  const auto t0 = Clock::now();
  so::Rng rng(2);
  const auto pair = so::preset("gauss1d_paper");
  const std::size_t n = 64;
  const double eps = 0.3;
  so::DiscreteProblem prob{pair.alpha.sample(n, rng), pair.beta.sample(n, rng), eps, cost1};
  so::DualPair dp{so::Potential(eps, cost1, prob.ys, std::vector<double>(n, 0.0)),
                  so::Potential(eps, cost1, prob.xs, std::vector<double>(n, 0.0))};
  const auto iters = so::sinkhorn_iterates(prob, dp.g(prob.ys), 20);
  double worst = 0.0;
  for (std::size_t k = 0; k < 20; ++k) {
    so::apply_online_update(dp, prob.xs, prob.ys, 1.0);
    worst = std::max(worst, so::testing::sup_diff(dp.f(prob.xs), iters[k].first));
    worst = std::max(worst, so::testing::sup_diff(dp.g(prob.ys), iters[k].second));
  }
  const double secs = seconds_since(t0);
  report(4, worst < 1e-9 && secs < 1.0, "sup diff " + fmt("%.2e", worst) + ", " + fmt("%.3f", secs) + " s");
}

void gq_moments() {
  const auto t0 = Clock::now();
  so::Rng rng(77);
  double worst_moment = 0.0;
  double worst_mass = 0.0;
  bool positive = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + rng.next_u64() % 481;
    std::vector<double> x(n), w(n);
    const double spread = 0.1 + 10.0 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = spread * rng.normal();
      w[i] = rng.uniform() + 1e-3;
    }
    const so::WeightedMeasure mu{so::testing::line(x), w};
    for (std::size_t m = 2; m <= 10; ++m) {
      const auto r = so::gq_compress(mu, m);
      for (double wi : r.measure.weights) positive = positive && wi > 0.0;
      for (std::size_t k = 0; k < 2 * m; ++k) {
        long double exact = 0.0L, scale = 0.0L, got = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
          const long double xi = x[i];
          exact += w[i] * std::pow(xi, static_cast<int>(k));
          scale += w[i] * std::pow(std::abs(xi), static_cast<int>(k));
        }
        for (std::size_t i = 0; i < r.measure.size(); ++i) {
          got += r.measure.weights[i] * std::pow(static_cast<long double>(r.measure.atoms[i][0]), static_cast<int>(k));
        }
        if (k == 0) {
          worst_mass = std::max(worst_mass, static_cast<double>(std::abs(got - exact) / exact));
        } else {
          worst_moment = std::max(worst_moment, static_cast<double>(std::abs(got - exact) / scale));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  report(5, positive && worst_moment < 1e-8 && worst_mass < 1e-12 && secs < 10.0,
         "worst moment " + fmt("%.2e", worst_moment) + ", worst mass " + fmt("%.2e", worst_mass) + ", " +
             fmt("%.2f", secs) + " s");
}

void fourier_decay() {
  const auto t0 = Clock::now();
  const auto inst = smooth_instance(1.0, 3.0);
  const auto mu = so::potential_to_measure(inst.u, inst.v);
  std::vector<double> lm, le;
  bool residual_ok = true;
  std::string detail;
  for (std::size_t m : {16u, 32u, 64u, 128u}) {
    const auto r = so::fourier_compress(mu, inst.v, m, 1.0, so::FourierBasis::kernel);
    const auto freqs = so::make_frequency_set(m, 1, 1.0);
    const auto full = so::fourier_moment_system(mu, inst.v, freqs);
    const auto compressed = so::fourier_moment_system(r.measure, inst.v, freqs);
    const Eigen::VectorXcd diff = full.rhs - compressed.rhs;
    for (Eigen::Index k = 0; k < diff.size(); ++k) {
      residual_ok = residual_ok && std::abs(diff(k)) <= r.report.residual + 1e-10;
    }
    const auto f_hat = so::measure_to_potential(r.measure, inst.v, 1.0);
    const double e = so::compression_error_probe(inst.u, f_hat, inst.probe);
    lm.push_back(std::log(static_cast<double>(m)));
    le.push_back(std::log(e));
    detail += "m " + std::to_string(m) + " err " + fmt("%.2e", e) + "; ";
  }
  const double slope = so::fit_line(lm, le).slope;
  const double secs = seconds_since(t0);
  detail += "slope " + fmt("%.3f", slope) + ", " + fmt("%.2f", secs) + " s";
  report(6, residual_ok && slope <= -0.7 && secs < 30.0, detail);
}

void compressed_vs_online() {
  const auto pair = so::preset("gauss1d_paper");
  const so::Schedule sched{1.5, -0.6, 0.4, 0.95};
  so::CompressionConfig cfg;
  cfg.method = so::CompressionMethod::fourier;
  cfg.trigger_n = 1000;
  const auto budget = so::Budget::of_samples(20000);
  const auto t0 = Clock::now();
  const auto os = so::run_online_sinkhorn(pair.alpha, pair.beta, sched, budget, 7);
  const auto cos = so::run_compressed(pair.alpha, pair.beta, sched, cfg, budget, 7);
  const double secs = seconds_since(t0);
  const auto cmp = so::compare_runs(os.trace, cos.run.trace);
  const double s_os = so::fit_loglog_slope(os.trace, so::Metric::err_succ_var).slope;
  const double s_cos = so::fit_loglog_slope(cos.run.trace, so::Metric::err_succ_var).slope;
  const bool accurate = cmp.error_ratio <= 3.0 && cmp.error_ratio >= 1.0 / 3.0 && std::abs(s_os - s_cos) <= 0.1;
  report(7, accurate && cmp.n_common >= 1e4 && secs <= 600.0,
         "N " + fmt("%.0f", cmp.n_common) + ", error ratio " + fmt("%.3f", cmp.error_ratio) + ", slopes OS " +
             fmt("%.3f", s_os) + " COS " + fmt("%.3f", s_cos) + ", " + fmt("%.1f", secs) + " s");
  report(8, cmp.time_ratio <= 0.8 && cmp.n_common >= 2e4,
         "wall-time ratio COS/OS " + fmt("%.3f", cmp.time_ratio) + " at N " + fmt("%.0f", cmp.n_common) +
             " (OS " + fmt("%.0f", os.trace.rows.back().wall_ms) + " ms, COS " +
             fmt("%.0f", cos.run.trace.rows.back().wall_ms) + " ms)");
}

void property_suite() {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  {
    double worst_kappa = 0.0;
    bool nonexpansive = true;
    for (int trial = 0; trial < 20; ++trial) {
      so::Rng rng(200 + static_cast<std::uint64_t>(trial));
      const std::size_t d = 1 + static_cast<std::size_t>(trial % 3);
      const so::CostSpec cost{so::CostKind::squared_euclidean, d};
      const auto ys = so::testing::uniform_points(40, d, 0, 1, rng);
      std::vector<double> w(40);
      for (double& v : w) v = rng.uniform() + 0.05;
      std::vector<double> h1(40), h2(40), dh(40);
      for (std::size_t i = 0; i < 40; ++i) {
        h1[i] = rng.normal();
        h2[i] = h1[i] + 0.5 * rng.normal();
        dh[i] = h1[i] - h2[i];
      }
      const double eps = 0.05 + 0.5 * rng.uniform();
      const auto xs = so::testing::uniform_points(64, d, 0, 1, rng);
      const auto t1 = so::soft_c_transform(h1, so::WeightedMeasure{ys, w}, cost, eps, xs);
      const auto t2 = so::soft_c_transform(h2, so::WeightedMeasure{ys, w}, cost, eps, xs);
      std::vector<double> dt(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) dt[i] = t1[i] - t2[i];
      double sup_h = 0.0, sup_t = 0.0;
      for (double v : dh) sup_h = std::max(sup_h, std::abs(v));
      for (double v : dt) sup_t = std::max(sup_t, std::abs(v));
      nonexpansive = nonexpansive && sup_t <= sup_h + 1e-12;
      worst_kappa = std::max(worst_kappa, so::variational_norm(dt) / so::variational_norm(dh));
    }
    expect(nonexpansive, "non-expansive");
    expect(worst_kappa <= 1.0, "kappa " + fmt("%.4f", worst_kappa));
  }

  {
    so::Rng rng(11);
    const auto atoms = so::testing::uniform_points(30, 2, -1, 1, rng);
    std::vector<double> q(30);
    for (double& v : q) v = rng.normal();
    const so::CostSpec cost2{so::CostKind::squared_euclidean, 2};
    so::Potential p(0.2, cost2, atoms, q);
    auto shifted = p;
    shifted.shift_weights(1.75);
    const auto probe = so::testing::uniform_points(50, 2, -2, 2, rng);
    const auto a = p(probe);
    const auto b = shifted(probe);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(b[i] - (a[i] - 1.75)));
    expect(worst < 1e-12, "translation covariance");
  }

  {
    so::Rng rng(42);
    const so::DiscreteProblem prob{so::testing::uniform_points(16, 1, -1, 1, rng),
                                   so::testing::uniform_points(16, 1, -0.5, 1.5, rng), 0.3, cost1};
    const auto sol = so::sinkhorn_solve(prob, 1e-12, 100000);
    const auto marg = so::plan_marginals(prob, sol.f, sol.g);
    double worst = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      worst = std::max({worst, std::abs(marg.rows[i] - 1.0 / 16), std::abs(marg.cols[i] - 1.0 / 16)});
    }
    expect(sol.converged && worst <= 1e-8, "marginals " + fmt("%.2e", worst));
  }

  {
    so::Rng rng(9);
    bool ok = true;
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::Index rows = 5 + static_cast<Eigen::Index>(rng.next_u64() % 20);
      const Eigen::Index cols = 3 + static_cast<Eigen::Index>(rng.next_u64() % 40);
      Eigen::MatrixXd a(rows, cols);
      Eigen::VectorXd b(rows);
      for (Eigen::Index i = 0; i < rows; ++i) {
        b(i) = rng.normal();
        for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
      }
      const auto r = so::nnls(a, b);
      ok = ok && r.converged && (r.x.array() >= 0.0).all() && so::kkt_check(a, b, r.x, r.tolerance).ok;
    }
    expect(ok, "nnls kkt");
  }

  {
    double worst = 0.0;
    for (double eps : {0.1, 0.5, 2.0}) {
      const auto inst = smooth_instance(eps, 2.0, 300);
      const auto back = so::measure_to_potential(so::potential_to_measure(inst.u, inst.v), inst.v, eps);
      worst = std::max(worst, so::compression_error_probe(inst.u, back, inst.probe));
    }
    expect(worst <= 1e-10, "round trip " + fmt("%.2e", worst));
  }

  {
    const auto pair = so::preset("gauss1d_paper");
    const so::Schedule sched{1.5, -0.6, 0.4, 0.95};
    const auto budget = so::Budget::of_samples(4000);
    const auto os1 = so::run_online_sinkhorn(pair.alpha, pair.beta, sched, budget, 21);
    const auto os2 = so::run_online_sinkhorn(pair.alpha, pair.beta, sched, budget, 21);
    expect(same_traces(os1.trace, os2.trace) && os1.pair.f == os2.pair.f && os1.pair.g == os2.pair.g,
           "online determinism");

    so::CompressionConfig fourier;
    const auto c1 = so::run_compressed(pair.alpha, pair.beta, sched, fourier, budget, 21);
    const auto c2 = so::run_compressed(pair.alpha, pair.beta, sched, fourier, budget, 21);
    expect(same_traces(c1.run.trace, c2.run.trace) && c1.run.pair.f == c2.run.pair.f, "compressed determinism");

    so::CompressionConfig none;
    none.method = so::CompressionMethod::none;
    const auto plain = so::run_compressed(pair.alpha, pair.beta, sched, none, budget, 21);
    expect(same_traces(os1.trace, plain.run.trace) && os1.pair.f == plain.run.pair.f &&
               os1.pair.g == plain.run.pair.g,
           "no compression equals online");
  }

  const double secs = seconds_since(t0);
  std::string detail = fmt("%.2f", secs) + " s";
  for (const auto& f : failed) detail += "; failed: " + f;
  report(9, failed.empty() && secs < 60.0, detail);
}

void gmm_smoke() {
  const auto pair = so::preset("gmm2d_paper");
  const so::Schedule sched{1.2, -0.6, 0.5, 0.9};
  so::CompressionConfig cfg;
  cfg.method = so::CompressionMethod::fourier;
  cfg.trigger_n = 1000;
  const auto budget = so::Budget::of_samples(5000);
  const auto t0 = Clock::now();
  const auto os = so::run_online_sinkhorn(pair.alpha, pair.beta, sched, budget, 5);
  const auto cos = so::run_compressed(pair.alpha, pair.beta, sched, cfg, budget, 5);
  const double secs = seconds_since(t0);
  std::size_t compressed_rows = 0;
  bool smaller = true;
  for (const auto& r : cos.run.trace.rows) {
    if (!r.m_t) continue;
    ++compressed_rows;
    smaller = smaller && r.support_f < r.N;
  }
  const auto cmp = so::compare_runs(os.trace, cos.run.trace);
  const bool ok = compressed_rows > 0 && smaller && cmp.error_ratio <= 5.0 && cmp.error_ratio >= 0.2;
  report(10, ok,
         "N " + fmt("%.0f", cmp.n_common) + ", compressed rows " + std::to_string(compressed_rows) +
             ", final support_f " + std::to_string(cos.run.trace.rows.back().support_f) + ", error ratio " +
             fmt("%.3f", cmp.error_ratio) + ", " + fmt("%.1f", secs) + " s");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> checks = {
      {1, rate_reproduction}, {2, rate_table},   {3, complexity_table},     {4, unit_step_oracle},
      {5, gq_moments},        {6, fourier_decay}, {7, compressed_vs_online}, {9, property_suite},
      {10, gmm_smoke}};
  for (const auto& [id, check] : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
      if (id == 7) report(8, false, "not run");
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
