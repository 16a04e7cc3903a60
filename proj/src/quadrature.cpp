#include "stream_ot/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stream_ot/error.hpp"

namespace stream_ot {

Recurrence lanczos_recurrence(std::span<const double> nodes,
                              std::span<const double> weights, std::size_t m) {
  const std::size_t n = nodes.size();
  if (weights.size() != n) throw Error(Errc::alignment, "nodes and weights differ in length");
  if (m == 0 || m > n) throw Error(Errc::invalid_argument, "recurrence length out of range");

  // Rutishauser-Kahan-Pal-Walker updating: atoms are absorbed one at a time
  // into the Jacobi matrix by a sweep of plane rotations.
  std::vector<double> p0(nodes.begin(), nodes.end());
  std::vector<double> p1(n, 0.0);
  p1[0] = weights[0];
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double pn = weights[k + 1];
    double gam = 1.0;
    double sig = 0.0;
    double t = 0.0;
    const double lam = nodes[k + 1];
    for (std::size_t j = 0; j <= k + 1; ++j) {
      const double rho = p1[j] + pn;
      const double tmp = gam * rho;
      const double tsig = sig;
      if (rho <= 0.0) {
        gam = 1.0;
        sig = 0.0;
      } else {
        gam = p1[j] / rho;
        sig = pn / rho;
      }
      const double tk = sig * (p0[j] - lam) - gam * t;
      p0[j] -= tk - t;
      t = tk;
      if (sig <= 0.0) {
        pn = tsig * p1[j];
      } else {
        pn = t * t / sig;
      }
      p1[j] = tmp;
    }
  }
  p0.resize(m);
  p1.resize(m);
  return {std::move(p0), std::move(p1)};
}

TridiagonalEigen tridiagonal_eigen(std::vector<double> d, std::vector<double> offdiag) {
  const std::size_t n = d.size();
  if (n == 0) return {};
  if (offdiag.size() + 1 != n) throw Error(Errc::alignment, "off-diagonal must have n-1 entries");
  std::vector<double> e(std::move(offdiag));
  e.push_back(0.0);
  std::vector<double> z(n, 0.0);
  z[0] = 1.0;
  const double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iter > 60) throw Error(Errc::invalid_argument, "tridiagonal QL failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool deflated = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            deflated = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (deflated) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return {std::move(d), std::move(z)};
}

QuadratureRule gauss_rule(const Recurrence& rec) {
  const std::size_t m = rec.alpha.size();
  if (m == 0 || rec.beta.size() != m) throw Error(Errc::alignment, "malformed recurrence");
  std::vector<double> off(m - 1);
  for (std::size_t k = 1; k < m; ++k) off[k - 1] = std::sqrt(std::max(rec.beta[k], 0.0));
  auto eig = tridiagonal_eigen(rec.alpha, std::move(off));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return eig.values[i] < eig.values[j]; });
  QuadratureRule rule;
  for (auto i : order) {
    rule.nodes.push_back(eig.values[i]);
    rule.weights.push_back(rec.beta[0] * eig.first_components[i] * eig.first_components[i]);
  }
  return rule;
}

}  // namespace stream_ot
