#pragma once

// Gaussian quadrature for discrete 1D measures: three-term recurrence
// coefficients by the Lanczos method, then nodes and weights from the
// Jacobi matrix.

#include <cstddef>
#include <span>
#include <vector>

namespace stream_ot {

/// Monic recurrence p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1};
/// beta_0 is the total mass.
struct Recurrence {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// First m recurrence coefficients of sum_i w_i delta_{x_i}. Atoms must be
/// distinct with positive weights and m <= number of atoms.
Recurrence lanczos_recurrence(std::span<const double> nodes,
                              std::span<const double> weights, std::size_t m);

struct TridiagonalEigen {
  std::vector<double> values;
  std::vector<double> first_components;  // first entry of each unit eigenvector
};

/// Implicit QL on a symmetric tridiagonal matrix. offdiag has size n-1.
TridiagonalEigen tridiagonal_eigen(std::vector<double> diag,
                                   std::vector<double> offdiag);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes sorted ascending.
QuadratureRule gauss_rule(const Recurrence& rec);

}  // namespace stream_ot
