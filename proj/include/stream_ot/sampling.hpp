#pragma once

// Test distributions, seeded sampling and low-discrepancy Gaussian
// frequencies.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stream_ot/points.hpp"

namespace stream_ot {

/// Seeded generator. The engine is std::mt19937_64 (its output sequence is
/// fixed by the standard); uniforms and normals are derived here rather
/// than through std:: distributions, whose algorithms are unspecified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent generator for a numbered sub-stream of this seed.
  Rng substream(std::uint64_t stream) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.seed_ == b.seed_ && a.engine_ == b.engine_ &&
           a.has_spare_ == b.has_spare_ && a.spare_ == b.spare_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finaliser, used to derive sub-stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

enum class DistributionKind { gaussian, gmm2 };

/// Gaussian or equal-or-weighted two-component Gaussian mixture in R^d.
class Distribution {
 public:
  static Distribution gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  static Distribution mixture(std::vector<Eigen::VectorXd> means,
                              std::vector<Eigen::MatrixXd> covariances,
                              std::vector<double> weights);

  DistributionKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(means_.front().size()); }
  const std::vector<Eigen::VectorXd>& means() const noexcept { return means_; }
  const std::vector<Eigen::MatrixXd>& covariances() const noexcept { return covs_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// n i.i.d. draws. For mixtures the component is chosen first.
  PointSet sample(std::size_t n, Rng& rng) const;
  /// Same as sample, also reporting the chosen component per draw.
  PointSet sample(std::size_t n, Rng& rng, std::vector<int>* components) const;

 private:
  Distribution() = default;

  DistributionKind kind_ = DistributionKind::gaussian;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> covs_;
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<double> weights_;
};

PointSet sample(const Distribution& dist, std::size_t n, Rng& rng);

/// c * Q Q^T + 1e-8 c I with Q having i.i.d. standard normal entries.
Eigen::MatrixXd random_covariance(std::size_t d, double c, Rng& rng);

/// Source and target distributions addressable by name.
struct DistributionPair {
  std::string name;
  Distribution alpha;
  Distribution beta;
};

/// gauss1d_paper, gmm2d_paper, gmm5d_paper. Random preset parameters come
/// from a fixed internal seed, so a name always denotes the same pair.
DistributionPair preset(std::string_view name);
std::vector<std::string> preset_names();

// ---------------------------------------------------------------------------
// Low-discrepancy points

/// Base-2 digital (Sobol) sequence with Joe-Kuo direction numbers,
/// generated in Gray-code order.
class SobolSequence {
 public:
  static constexpr std::size_t max_dim = 10;

  explicit SobolSequence(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  /// Next point; the first call returns the all-zeros point.
  std::vector<double> next();
  /// Points with indices [first, first + count).
  static PointSet points(std::size_t dim, std::size_t first, std::size_t count);

 private:
  std::size_t dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<std::vector<std::uint32_t>> directions_;
};

/// Standard normal quantile; absolute error below 1e-12 on (0, 1).
double inverse_normal_cdf(double p);
double normal_cdf(double x);

/// m points of N(0, (2/eps) I): Sobol points 1..m through the inverse
/// normal CDF, scaled by sqrt(2/eps).
PointSet qmc_gaussian_frequencies(std::size_t m, std::size_t d, double epsilon);

/// n points filling a box: a uniform grid in 1D, Sobol points otherwise.
PointSet box_grid(const Box& box, std::size_t n);

}  // namespace stream_ot
