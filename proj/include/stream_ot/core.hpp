#pragma once

// Cost functions, the log-domain potential representation, the soft
// C-transform and the entropic dual objective.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "stream_ot/points.hpp"

namespace stream_ot {

enum class CostKind { squared_euclidean };

struct CostSpec {
  CostKind kind = CostKind::squared_euclidean;
  std::size_t dim = 1;

  double operator()(std::span<const double> x,
                    std::span<const double> y) const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - y[k];
      s += d * d;
    }
    return s;
  }

  /// Lipschitz constant of C(., y) on a box, for y in the same box.
  double lipschitz_on(const Box& box) const { return 2.0 * box.diameter(); }

  friend bool operator==(const CostSpec&, const CostSpec&) = default;
};

/// Parses a cost name; anything other than squared Euclidean is rejected.
CostSpec parse_cost(std::string_view name, std::size_t dim);

/// Atoms with nonnegative weights.
struct WeightedMeasure {
  PointSet atoms;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  double total_mass() const;
  /// Throws unless weights are aligned, nonnegative and not all zero.
  void validate() const;
};

/// A dual potential stored as log-domain weights on atoms:
///   f(x) = -eps * log sum_i exp((w_i - C(x, atom_i)) / eps).
class Potential {
 public:
  Potential() = default;
  Potential(double epsilon, CostSpec cost, PointSet atoms,
            std::vector<double> log_weights);

  double epsilon() const noexcept { return epsilon_; }
  const CostSpec& cost() const noexcept { return cost_; }
  const PointSet& atoms() const noexcept { return atoms_; }
  const std::vector<double>& log_weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }

  double operator()(std::span<const double> x) const;
  std::vector<double> operator()(const PointSet& xs) const;

  /// Adds c to every log weight.
  void shift_weights(double c);
  void append(const PointSet& atoms, std::span<const double> log_weights);
  /// Drops all atoms whose index is not listed.
  void keep(std::span<const std::size_t> indices);

  friend bool operator==(const Potential&, const Potential&) = default;

 private:
  double epsilon_ = 1.0;
  CostSpec cost_;
  PointSet atoms_;
  std::vector<double> weights_;
};

/// f lives on the source space and carries atoms drawn from the target;
/// g the other way round.
struct DualPair {
  Potential f;
  Potential g;

  double epsilon() const noexcept { return f.epsilon(); }
  void validate() const;
};

/// Max-shifted log(sum exp(v)); -inf for an empty input.
double log_sum_exp(std::span<const double> values);

std::vector<double> eval_potential(const Potential& p, const PointSet& xs);

/// T(h)(x) = -eps * log integral exp((h(y) - C(x, y)) / eps) dmu(y).
std::vector<double> soft_c_transform(std::span<const double> h_values,
                                     const WeightedMeasure& measure,
                                     const CostSpec& cost, double epsilon,
                                     const PointSet& xs);

/// max - min: the seminorm for functions identified up to constants.
double variational_norm(std::span<const double> values);

/// Monte Carlo estimate of the dual objective from already evaluated
/// potential values on the two sample sets.
double dual_objective(std::span<const double> f_values,
                      std::span<const double> g_values, const PointSet& xs,
                      const PointSet& ys, const CostSpec& cost, double epsilon);

double dual_objective(const DualPair& pair, const PointSet& xs,
                      const PointSet& ys);

}  // namespace stream_ot
