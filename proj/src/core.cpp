#include "stream_ot/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stream_ot/error.hpp"

namespace stream_ot {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::empty_representation: return "empty representation";
    case Errc::alignment: return "alignment";
    case Errc::not_spd: return "not symmetric positive definite";
    case Errc::schedule: return "schedule";
    case Errc::scaling: return "scaling";
    case Errc::representation_corruption: return "representation corruption";
    case Errc::insufficient_data: return "insufficient data";
    case Errc::io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// PointSet

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) {
    throw Error(Errc::alignment, "point coordinates not a multiple of dim");
  }
}

void PointSet::push_back(std::span<const double> p) {
  if (p.size() != dim_) throw Error(Errc::alignment, "point dimension mismatch");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

void PointSet::append(const PointSet& other) {
  if (other.empty()) return;
  if (empty() && dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) throw Error(Errc::alignment, "point dimension mismatch");
  coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
  PointSet out(dim_);
  out.reserve(indices.size());
  for (auto i : indices) out.push_back((*this)[i]);
  return out;
}

double Box::diameter() const {
  double s = 0.0;
  for (std::size_t k = 0; k < lo.size(); ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(s);
}

Box bounding_box(const PointSet& points) {
  if (points.empty()) throw Error(Errc::invalid_argument, "bounding box of no points");
  const auto d = points.dim();
  Box box{std::vector<double>(d, std::numeric_limits<double>::infinity()),
          std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points[i];
    for (std::size_t k = 0; k < d; ++k) {
      box.lo[k] = std::min(box.lo[k], p[k]);
      box.hi[k] = std::max(box.hi[k], p[k]);
    }
  }
  return box;
}

// ---------------------------------------------------------------------------
// Cost and measures

CostSpec parse_cost(std::string_view name, std::size_t dim) {
  if (dim == 0) throw Error(Errc::invalid_argument, "cost dimension must be positive");
  if (name == "squared_euclidean" || name == "sqeuclidean" || name == "l2sq") {
    return CostSpec{CostKind::squared_euclidean, dim};
  }
  throw Error(Errc::invalid_argument,
              "unsupported cost '" + std::string(name) +
                  "': only squared_euclidean is available");
}

double WeightedMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void WeightedMeasure::validate() const {
  if (atoms.size() != weights.size()) {
    throw Error(Errc::alignment, "measure atoms and weights differ in length");
  }
  bool positive = false;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(Errc::invalid_argument, "negative or NaN measure weight");
    positive = positive || w > 0.0;
  }
  if (!positive) throw Error(Errc::invalid_argument, "measure has no positive weight");
}

// ---------------------------------------------------------------------------
// Potential

Potential::Potential(double epsilon, CostSpec cost, PointSet atoms,
                     std::vector<double> log_weights)
    : epsilon_(epsilon),
      cost_(cost),
      atoms_(std::move(atoms)),
      weights_(std::move(log_weights)) {
  if (!(epsilon_ > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
  if (atoms_.size() != weights_.size()) {
    throw Error(Errc::alignment, "potential atoms and weights differ in length");
  }
  if (!atoms_.empty() && atoms_.dim() != cost_.dim) {
    throw Error(Errc::alignment, "atom dimension differs from cost dimension");
  }
}

namespace {

// Fixed summation order per point, independent of how callers batch points.
double eval_one(const Potential& p, std::span<const double> x,
                std::vector<double>& scratch) {
  const auto n = p.size();
  const double inv_eps = 1.0 / p.epsilon();
  const auto& w = p.log_weights();
  const double* y = p.atoms().coords().data();
  scratch.resize(n);
  double m = -std::numeric_limits<double>::infinity();
  if (p.cost().dim == 1) {
    const double x0 = x[0];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x0 - y[i];
      const double s = (w[i] - d * d) * inv_eps;
      scratch[i] = s;
      m = std::max(m, s);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (w[i] - p.cost()(x, p.atoms()[i])) * inv_eps;
      scratch[i] = s;
      m = std::max(m, s);
    }
  }
  if (m == -std::numeric_limits<double>::infinity()) {
    return std::numeric_limits<double>::infinity();
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(scratch[i] - m);
  return -p.epsilon() * (m + std::log(acc));
}

}  // namespace

double Potential::operator()(std::span<const double> x) const {
  if (weights_.empty()) throw Error(Errc::empty_representation, "potential has no atoms");
  if (x.size() != cost_.dim) throw Error(Errc::alignment, "point dimension mismatch");
  thread_local std::vector<double> scratch;
  return eval_one(*this, x, scratch);
}

std::vector<double> Potential::operator()(const PointSet& xs) const {
  if (weights_.empty()) throw Error(Errc::empty_representation, "potential has no atoms");
  if (xs.empty()) return {};
  if (xs.dim() != cost_.dim) throw Error(Errc::alignment, "point dimension mismatch");
  thread_local std::vector<double> scratch;
  std::vector<double> out(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] = eval_one(*this, xs[j], scratch);
  return out;
}

void Potential::shift_weights(double c) {
  for (double& w : weights_) w += c;
}

void Potential::append(const PointSet& atoms, std::span<const double> log_weights) {
  if (atoms.size() != log_weights.size()) {
    throw Error(Errc::alignment, "appended atoms and weights differ in length");
  }
  if (!atoms.empty() && atoms.dim() != cost_.dim) {
    throw Error(Errc::alignment, "atom dimension differs from cost dimension");
  }
  atoms_.append(atoms);
  weights_.insert(weights_.end(), log_weights.begin(), log_weights.end());
}

void Potential::keep(std::span<const std::size_t> indices) {
  std::vector<double> w;
  w.reserve(indices.size());
  for (auto i : indices) w.push_back(weights_[i]);
  atoms_ = atoms_.subset(indices);
  weights_ = std::move(w);
}

void DualPair::validate() const {
  if (f.epsilon() != g.epsilon()) {
    throw Error(Errc::invalid_argument, "dual pair potentials use different epsilon");
  }
  if (!(f.cost() == g.cost())) {
    throw Error(Errc::invalid_argument, "dual pair potentials use different costs");
  }
}

// ---------------------------------------------------------------------------
// Operations

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

std::vector<double> eval_potential(const Potential& p, const PointSet& xs) {
  if (xs.empty()) throw Error(Errc::invalid_argument, "no evaluation points");
  return p(xs);
}

std::vector<double> soft_c_transform(std::span<const double> h_values,
                                     const WeightedMeasure& measure,
                                     const CostSpec& cost, double epsilon,
                                     const PointSet& xs) {
  if (h_values.size() != measure.size() || measure.atoms.size() != measure.size()) {
    throw Error(Errc::alignment, "h values not aligned with measure atoms");
  }
  if (!(measure.total_mass() > 0.0)) {
    throw Error(Errc::invalid_argument, "measure mass must be positive");
  }
  // exp((h - C)/eps) * w = exp((h + eps log w - C)/eps); zero weights drop out.
  std::vector<double> logw;
  PointSet atoms(measure.atoms.dim());
  for (std::size_t i = 0; i < measure.size(); ++i) {
    if (measure.weights[i] > 0.0) {
      logw.push_back(h_values[i] + epsilon * std::log(measure.weights[i]));
      atoms.push_back(measure.atoms[i]);
    }
  }
  Potential p(epsilon, cost, std::move(atoms), std::move(logw));
  return eval_potential(p, xs);
}

double variational_norm(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::invalid_argument, "variational norm of empty vector");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

double dual_objective(std::span<const double> f_values,
                      std::span<const double> g_values, const PointSet& xs,
                      const PointSet& ys, const CostSpec& cost, double epsilon) {
  if (xs.empty() || ys.empty()) throw Error(Errc::invalid_argument, "empty sample set");
  if (f_values.size() != xs.size() || g_values.size() != ys.size()) {
    throw Error(Errc::alignment, "potential values not aligned with samples");
  }
  const auto nx = xs.size();
  const auto ny = ys.size();
  double mean_f = 0.0;
  double mean_g = 0.0;
  for (double v : f_values) mean_f += v;
  for (double v : g_values) mean_g += v;
  mean_f /= static_cast<double>(nx);
  mean_g /= static_cast<double>(ny);

  // log of sum_ij exp((f_i + g_j - C_ij)/eps), accumulated row by row.
  std::vector<double> row(ny);
  std::vector<double> row_lse(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      row[j] = (f_values[i] + g_values[j] - cost(xs[i], ys[j])) / epsilon;
    }
    row_lse[i] = log_sum_exp(row);
  }
  const double lse = log_sum_exp(row_lse);
  const double mass = std::exp(lse - std::log(static_cast<double>(nx)) -
                               std::log(static_cast<double>(ny)));
  return mean_f + mean_g - epsilon * mass;
}

double dual_objective(const DualPair& pair, const PointSet& xs, const PointSet& ys) {
  pair.validate();
  const auto fv = eval_potential(pair.f, xs);
  const auto gv = eval_potential(pair.g, ys);
  return dual_objective(fv, gv, xs, ys, pair.f.cost(), pair.epsilon());
}

}  // namespace stream_ot
