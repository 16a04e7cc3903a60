#pragma once

// Compressing the measure behind a potential to fewer atoms while matching
// moments: Gaussian quadrature (1D polynomial moments) or Fourier moments of
// the Gaussian kernel solved by nonnegative least squares.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "stream_ot/core.hpp"

namespace stream_ot {

enum class CompressionMethod { none, fourier, gq };

struct FrequencySet {
  PointSet frequencies;
  double epsilon = 1.0;

  std::size_t size() const noexcept { return frequencies.size(); }
};

/// The zero frequency followed by m-1 QMC Gaussian frequencies.
FrequencySet make_frequency_set(std::size_t m, std::size_t dim, double epsilon);

/// Sorts atoms lexicographically, sums weights of equal atoms, drops zeros.
WeightedMeasure merge_duplicates(const WeightedMeasure& mu);

/// log of exp(q_i / eps) * phi(y_i) with phi = exp(-v / eps), per atom of u.
std::vector<double> measure_log_weights(const Potential& u, const Potential& v);

/// Throws representation_corruption if a weight exceeds 1 + 1e-6.
WeightedMeasure potential_to_measure(const Potential& u, const Potential& v);

/// Inverse of potential_to_measure: q_i = eps * log w_i + v(y_i).
Potential measure_to_potential(const WeightedMeasure& mu_hat, const Potential& v, double epsilon);

struct CompressionReport {
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  std::size_t target = 0;
  double residual = 0.0;           // |M w_hat - b|, Fourier only
  double relative_residual = 0.0;  // residual / |b|
  bool converged = true;
  bool noop = false;
  std::size_t iterations = 0;
};

struct CompressedMeasure {
  WeightedMeasure measure;
  CompressionReport report;
};

/// m-point Gaussian quadrature of a 1D measure. If m exceeds the number of
/// distinct atoms the input comes back unchanged with report.noop set.
CompressedMeasure gq_compress(const WeightedMeasure& mu, std::size_t m);

struct MomentSystem {
  Eigen::MatrixXcd matrix;  // frequencies x atoms
  Eigen::VectorXcd rhs;
};

/// Entry (k, i) is the kernel transform at k of the atom y_i divided by
/// phi(y_i); rhs = matrix * weights.
MomentSystem fourier_moment_system(const WeightedMeasure& mu, const Potential& v,
                                   const FrequencySet& freqs);

/// Real and imaginary parts stacked as rows [Re; Im].
Eigen::MatrixXd stack_real(const Eigen::MatrixXcd& m);
Eigen::VectorXd stack_real(const Eigen::VectorXcd& v);

/// Which moments the Fourier method matches.
///  kernel:  the kernel transform over x of u, i.e. P_k(y) = K_y^(k) / phi(y).
///           Exact moments, but dominated by the atoms where u is largest, so
///           log u (the potential) is lost wherever u is relatively small.
///  measure: plain Fourier modes exp(-i k.y) of the phi-weighted measure. Its
///           weights are bounded, and the potential is then reproduced with
///           a uniform relative accuracy in u.
enum class FourierBasis { kernel, measure };

CompressedMeasure fourier_compress(const WeightedMeasure& mu, const Potential& v,
                                   std::size_t m, double epsilon,
                                   FourierBasis basis = FourierBasis::kernel);

struct CompressedPotential {
  Potential potential;
  CompressionReport report;
};

/// Compresses u to about m atoms. phi is the potential defining the
/// reference measure; with the kernel basis the result does not depend on it.
CompressedPotential compress_potential(const Potential& u, const Potential& phi,
                                       CompressionMethod method, std::size_t m,
                                       FourierBasis basis = FourierBasis::measure);

/// sup over the grid of |f - f_hat|.
double compression_error_probe(const Potential& f, const Potential& f_hat, const PointSet& grid);

}  // namespace stream_ot
