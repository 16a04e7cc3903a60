#pragma once

// Theoretical rates and complexity exponents, log-log slope fitting and
// comparison of two run traces.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "stream_ot/online_sinkhorn.hpp"

namespace stream_ot {

/// Exact fraction over 64-bit integers; operations throw on overflow.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Parses "1.2", "-0.55", "3", "3/4".
  static Rational parse(std::string_view text);
  /// Shortest decimal that round-trips the double, then parsed exactly.
  static Rational from_double(double v);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  /// "p/q", or "p" when the denominator is 1.
  std::string str() const;

  friend Rational operator+(Rational x, Rational y);
  friend Rational operator-(Rational x, Rational y);
  friend Rational operator*(Rational x, Rational y);
  friend Rational operator/(Rational x, Rational y);
  Rational operator-() const { return Rational(-num_, den_); }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& x, const Rational& y);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct RateReport {
  double new_rate = 0.0;            // -a / (2a + 1)
  double old_rate = 0.0;            // b / (2a + 1)
  double transient_exponent = 0.0;  // (b + 1) / (2a + 1)
  Rational new_rate_exact;
  Rational old_rate_exact;
  Rational transient_exact;
  std::optional<double> fitted_slope;
  std::optional<double> fit_n_lo;
  std::optional<double> fit_n_hi;
};

/// Throws a schedule error when (a, b) violates the schedule constraints.
RateReport theoretical_rates(Rational a, Rational b);
RateReport theoretical_rates(double a, double b);

enum class Regime { zeta_large, zeta_small };

struct ComplexityReport {
  Rational os_exponent;
  Rational cos_exponent;
  Rational ratio_exponent;   // os - cos; positive means compression wins
  Rational regime_boundary;  // (a - b) / a
  Rational break_even;       // 3 (a - b) / (4a + 1)
  Regime regime = Regime::zeta_large;
};

ComplexityReport complexity_exponents(Rational a, Rational b, Rational zeta);
ComplexityReport complexity_exponents(double a, double b, double zeta);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

enum class Metric { err_succ_var, dual_obj, comp_sup_err };

struct SlopeFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
  double n_lo = 0.0;
  double n_hi = 0.0;
};

/// Fit of log(metric) against log(N) over rows with N in [n_lo, n_hi]. With
/// no window given the last decade of N is used, widened to the last 8 rows
/// if the decade holds fewer. Needs at least 5 rows, all metric values > 0.
SlopeFit fit_loglog_slope(const Trace& trace, Metric metric,
                          std::optional<double> n_lo = std::nullopt,
                          std::optional<double> n_hi = std::nullopt);

struct RunComparison {
  double n_common = 0.0;
  double error_ratio = 0.0;    // second / first
  double time_ratio = 0.0;
  double support_ratio = 0.0;  // support_f
};

/// Ratios at the largest N both traces reach, interpolating in log N.
RunComparison compare_runs(const Trace& first, const Trace& second);

}  // namespace stream_ot
