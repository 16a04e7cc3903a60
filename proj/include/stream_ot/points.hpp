#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stream_ot {

/// Contiguous row-major list of points in R^d.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept {
    return dim_ == 0 ? 0 : coords_.size() / dim_;
  }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) {
    return {coords_.data() + i * dim_, dim_};
  }

  const std::vector<double>& coords() const noexcept { return coords_; }
  std::vector<double>& coords() noexcept { return coords_; }

  void push_back(std::span<const double> p);
  void append(const PointSet& other);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  /// Points selected by index, in the given order.
  PointSet subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const noexcept { return lo.size(); }
  double diameter() const;
};

Box bounding_box(const PointSet& points);

}  // namespace stream_ot
