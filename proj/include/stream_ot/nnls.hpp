#pragma once

// Nonnegative least squares, min |Ax - b| subject to x >= 0, by the
// Lawson-Hanson active-set method.

#include <Eigen/Dense>
#include <cstddef>

namespace stream_ot {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // |Ax - b|
  bool converged = false;
  std::size_t iterations = 0;
  double tolerance = 0.0;  // the gradient tolerance actually used
};

/// tol <= 0 picks a tolerance proportional to |b| and the largest column
/// norm. max_iterations == 0 means 3 * columns. On hitting the cap the
/// current feasible iterate is returned with converged = false.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = 0.0,
                std::size_t max_iterations = 0);

double default_nnls_tolerance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

struct KktReport {
  bool ok = false;
  double worst_zero = 0.0;      // most negative gradient entry on zero weights
  double worst_positive = 0.0;  // largest |gradient| on positive weights
};

/// Gradient is A^T (Ax - b). Zero weights need gradient >= -tol, positive
/// weights need |gradient| <= tol.
KktReport kkt_check(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& x, double tol);

}  // namespace stream_ot
