#include "stream_ot/sampling.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "stream_ot/error.hpp"

namespace stream_ot {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

Rng Rng::substream(std::uint64_t stream) const {
  return Rng(mix_seed(seed_ ^ mix_seed(stream + 0x5851f42d4c957f2dULL)));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

// ---------------------------------------------------------------------------
// Distributions

namespace {

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw Error(Errc::not_spd, "covariance must be a non-empty square matrix");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff())) {
    throw Error(Errc::not_spd, "covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::not_spd, "covariance is not positive definite");
  }
  Eigen::MatrixXd L = llt.matrixL();
  if (!(L.diagonal().minCoeff() > 0.0)) {
    throw Error(Errc::not_spd, "covariance is singular");
  }
  return L;
}

}  // namespace

Distribution Distribution::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  return mixture({std::move(mean)}, {std::move(covariance)}, {1.0});
}

Distribution Distribution::mixture(std::vector<Eigen::VectorXd> means,
                                   std::vector<Eigen::MatrixXd> covariances,
                                   std::vector<double> weights) {
  if (means.empty() || means.size() != covariances.size() || means.size() != weights.size()) {
    throw Error(Errc::invalid_argument, "mixture components are inconsistent");
  }
  if (means.size() > 2) throw Error(Errc::invalid_argument, "at most two mixture components");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(Errc::invalid_argument, "negative mixture weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(Errc::invalid_argument, "mixture weights must sum to 1");
  }
  Distribution out;
  out.kind_ = means.size() == 1 ? DistributionKind::gaussian : DistributionKind::gmm2;
  const auto d = means.front().size();
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (means[c].size() != d || covariances[c].rows() != d) {
      throw Error(Errc::alignment, "mixture component dimensions differ");
    }
    out.factors_.push_back(cholesky_or_throw(covariances[c]));
  }
  out.means_ = std::move(means);
  out.covs_ = std::move(covariances);
  out.weights_ = std::move(weights);
  return out;
}

PointSet Distribution::sample(std::size_t n, Rng& rng) const {
  return sample(n, rng, nullptr);
}

PointSet Distribution::sample(std::size_t n, Rng& rng, std::vector<int>* components) const {
  if (n == 0) throw Error(Errc::invalid_argument, "sample count must be positive");
  const auto d = dim();
  PointSet out(d);
  out.reserve(n);
  Eigen::VectorXd z(d);
  std::vector<double> p(d);
  if (components) components->clear();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    if (means_.size() == 2) c = rng.uniform() < weights_[0] ? 0 : 1;
    if (components) components->push_back(static_cast<int>(c));
    for (std::size_t k = 0; k < d; ++k) z[k] = rng.normal();
    const Eigen::VectorXd x = means_[c] + factors_[c] * z;
    for (std::size_t k = 0; k < d; ++k) p[k] = x[k];
    out.push_back(p);
  }
  return out;
}

PointSet sample(const Distribution& dist, std::size_t n, Rng& rng) {
  return dist.sample(n, rng);
}

Eigen::MatrixXd random_covariance(std::size_t d, double c, Rng& rng) {
  if (d == 0) throw Error(Errc::invalid_argument, "dimension must be positive");
  if (!(c > 0.0)) throw Error(Errc::invalid_argument, "covariance scale must be positive");
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) = rng.normal();
  Eigen::MatrixXd m = c * (q * q.transpose());
  m = 0.5 * (m + m.transpose());
  m.diagonal().array() += 1e-8 * c;
  return m;
}

namespace {

constexpr std::uint64_t kPresetSeed = 20230611;

DistributionPair gmm_preset(std::string name, std::size_t d, double c1, double c2) {
  Rng rng(kPresetSeed + d);
  auto make = [&](double mean_sd) {
    Eigen::VectorXd mu(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < mu.size(); ++k) mu[k] = mean_sd * rng.normal();
    auto s1 = random_covariance(d, c1, rng);
    auto s2 = random_covariance(d, c2, rng);
    return Distribution::mixture({mu, -mu}, {s1, s2}, {0.5, 0.5});
  };
  auto alpha = make(10.0);
  auto beta = make(5.0);
  return {std::move(name), std::move(alpha), std::move(beta)};
}

}  // namespace

DistributionPair preset(std::string_view name) {
  if (name == "gauss1d_paper") {
    return {std::string(name),
            Distribution::gaussian(Eigen::VectorXd::Constant(1, 3.0),
                                   Eigen::MatrixXd::Constant(1, 1, 4.0)),
            Distribution::gaussian(Eigen::VectorXd::Constant(1, 1.0),
                                   Eigen::MatrixXd::Constant(1, 1, 2.0))};
  }
  if (name == "gmm2d_paper") return gmm_preset(std::string(name), 2, 3.0, 4.0);
  if (name == "gmm5d_paper") return gmm_preset(std::string(name), 5, 1.0, 0.4);
  throw Error(Errc::invalid_argument, "unknown distribution preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"gauss1d_paper", "gmm2d_paper", "gmm5d_paper"};
}

// ---------------------------------------------------------------------------
// Sobol

namespace {

struct DirectionSpec {
  unsigned s;
  unsigned a;
  std::uint32_t m[5];
};

// new-joe-kuo-6.21201, dimensions 2..10.
constexpr DirectionSpec kJoeKuo[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
};

constexpr unsigned kBits = 32;

}  // namespace

SobolSequence::SobolSequence(std::size_t dim) : dim_(dim), state_(dim, 0) {
  if (dim == 0 || dim > max_dim) {
    throw Error(Errc::invalid_argument,
                "Sobol dimension must be in [1, " + std::to_string(max_dim) + "]");
  }
  directions_.assign(dim, std::vector<std::uint32_t>(kBits));
  for (unsigned j = 0; j < kBits; ++j) directions_[0][j] = 1u << (kBits - 1 - j);
  for (std::size_t k = 1; k < dim; ++k) {
    const auto& spec = kJoeKuo[k - 1];
    auto& v = directions_[k];
    for (unsigned j = 0; j < spec.s && j < kBits; ++j) v[j] = spec.m[j] << (kBits - 1 - j);
    for (unsigned j = spec.s; j < kBits; ++j) {
      std::uint32_t x = v[j - spec.s] ^ (v[j - spec.s] >> spec.s);
      for (unsigned l = 1; l < spec.s; ++l) {
        if ((spec.a >> (spec.s - 1 - l)) & 1u) x ^= v[j - l];
      }
      v[j] = x;
    }
  }
}

std::vector<double> SobolSequence::next() {
  std::vector<double> out(dim_);
  if (index_ > 0) {
    const auto c = static_cast<unsigned>(std::countr_one(index_ - 1));
    if (c >= kBits) throw Error(Errc::invalid_argument, "Sobol sequence exhausted");
    for (std::size_t k = 0; k < dim_; ++k) state_[k] ^= directions_[k][c];
  }
  for (std::size_t k = 0; k < dim_; ++k) out[k] = static_cast<double>(state_[k]) * 0x1.0p-32;
  ++index_;
  return out;
}

PointSet SobolSequence::points(std::size_t dim, std::size_t first, std::size_t count) {
  SobolSequence seq(dim);
  for (std::size_t i = 0; i < first; ++i) seq.next();
  PointSet out(dim);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(seq.next());
  return out;
}

// ---------------------------------------------------------------------------
// Normal quantile

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::invalid_argument, "normal quantile needs p in (0, 1)");
  }
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Refine against the tail that is resolved in floating point.
  const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

PointSet qmc_gaussian_frequencies(std::size_t m, std::size_t d, double epsilon) {
  if (m == 0) throw Error(Errc::invalid_argument, "frequency count must be positive");
  if (!(epsilon > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
  const double scale = std::sqrt(2.0 / epsilon);
  PointSet out = SobolSequence::points(d, 1, m);
  for (double& v : out.coords()) v = scale * inverse_normal_cdf(v);
  return out;
}

PointSet box_grid(const Box& box, std::size_t n) {
  if (n == 0) throw Error(Errc::invalid_argument, "grid size must be positive");
  const auto d = box.dim();
  PointSet out(d);
  out.reserve(n);
  if (d == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
      const double v = box.lo[0] + t * (box.hi[0] - box.lo[0]);
      out.push_back(std::span<const double>(&v, 1));
    }
    return out;
  }
  out = SobolSequence::points(d, 0, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = out[i];
    for (std::size_t k = 0; k < d; ++k) p[k] = box.lo[k] + p[k] * (box.hi[k] - box.lo[k]);
  }
  return out;
}

}  // namespace stream_ot
