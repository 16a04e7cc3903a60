#include "stream_ot/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <vector>

#include "stream_ot/error.hpp"

namespace stream_ot {

namespace {

__extension__ using wide = __int128;

std::int64_t narrow(wide v) {
  if (v > INT64_MAX || v < -INT64_MAX) throw Error(Errc::invalid_argument, "rational overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(wide num, wide den) {
  if (den == 0) throw Error(Errc::invalid_argument, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  wide a = num < 0 ? -num : num;
  wide b = den;
  while (b != 0) {
    const wide r = a % b;
    a = b;
    b = r;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

void check_schedule(const Rational& a, const Rational& b) {
  if (!(b > Rational(-1) && b < Rational(-1, 2))) {
    throw Error(Errc::schedule, "Assumption 2 violated: need −1 < b < −1/2, got b = " + b.str());
  }
  if (!(a - b > Rational(1))) {
    throw Error(Errc::schedule, "Assumption 3 violated: a−b ≤ 1 (a-b = " + (a - b).str() + ")");
  }
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(Errc::invalid_argument, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g > 1 ? num / g : num;
  den_ = g > 1 ? den / g : den;
}

Rational Rational::parse(std::string_view text) {
  if (text.empty()) throw Error(Errc::invalid_argument, "empty number");
  const auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    const Rational p = parse(text.substr(0, slash));
    const Rational q = parse(text.substr(slash + 1));
    return p / q;
  }
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  wide num = 0;
  wide den = 1;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.' && !seen_dot) {
      seen_dot = true;
      continue;
    }
    if (c == 'e' || c == 'E') {
      int exp10 = 0;
      const auto tail = text.substr(pos + 1);
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), exp10);
      if (ec != std::errc() || ptr != tail.data() + tail.size() || std::abs(exp10) > 30) {
        throw Error(Errc::invalid_argument, "bad number: " + std::string(text));
      }
      for (int i = 0; i < std::abs(exp10); ++i) {
        if (exp10 > 0) num *= 10; else den *= 10;
      }
      break;
    }
    if (c < '0' || c > '9') throw Error(Errc::invalid_argument, "bad number: " + std::string(text));
    seen_digit = true;
    num = num * 10 + (c - '0');
    if (seen_dot) den *= 10;
    if (num > INT64_MAX || den > INT64_MAX) throw Error(Errc::invalid_argument, "number too precise");
  }
  if (!seen_digit) throw Error(Errc::invalid_argument, "bad number: " + std::string(text));
  return make(negative ? -num : num, den);
}

Rational Rational::from_double(double v) {
  if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite value");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(Errc::invalid_argument, "cannot format value");
  return parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(Rational x, Rational y) {
  return make(static_cast<wide>(x.num_) * y.den_ + static_cast<wide>(y.num_) * x.den_,
              static_cast<wide>(x.den_) * y.den_);
}

Rational operator-(Rational x, Rational y) { return x + (-y); }

Rational operator*(Rational x, Rational y) {
  return make(static_cast<wide>(x.num_) * y.num_, static_cast<wide>(x.den_) * y.den_);
}

Rational operator/(Rational x, Rational y) {
  if (y.num_ == 0) throw Error(Errc::invalid_argument, "division by zero");
  return make(static_cast<wide>(x.num_) * y.den_, static_cast<wide>(x.den_) * y.num_);
}

std::strong_ordering operator<=>(const Rational& x, const Rational& y) {
  const wide l = static_cast<wide>(x.num_) * y.den_;
  const wide r = static_cast<wide>(y.num_) * x.den_;
  return l <=> r;
}

RateReport theoretical_rates(Rational a, Rational b) {
  check_schedule(a, b);
  RateReport r;
  const Rational denom = Rational(2) * a + Rational(1);
  r.new_rate_exact = -a / denom;
  r.old_rate_exact = b / denom;
  r.transient_exact = (b + Rational(1)) / denom;
  r.new_rate = r.new_rate_exact.to_double();
  r.old_rate = r.old_rate_exact.to_double();
  r.transient_exponent = r.transient_exact.to_double();
  return r;
}

RateReport theoretical_rates(double a, double b) {
  return theoretical_rates(Rational::from_double(a), Rational::from_double(b));
}

ComplexityReport complexity_exponents(Rational a, Rational b, Rational zeta) {
  check_schedule(a, b);
  if (!(zeta > Rational(0))) throw Error(Errc::schedule, "zeta must be positive, got " + zeta.str());
  ComplexityReport r;
  const Rational one(1);
  const Rational gap = a - b;
  r.os_exponent = Rational(4) + Rational(2) / a;
  r.regime_boundary = gap / a;
  r.break_even = Rational(3) * gap / (Rational(4) * a + one);
  if (zeta >= r.regime_boundary) {
    r.regime = Regime::zeta_large;
    r.cos_exponent = Rational(2) + gap / (a * zeta) + one / a;
  } else {
    r.regime = Regime::zeta_small;
    r.cos_exponent = Rational(3) * gap / (a * zeta) + one / a;
  }
  r.ratio_exponent = r.os_exponent - r.cos_exponent;
  return r;
}

ComplexityReport complexity_exponents(double a, double b, double zeta) {
  return complexity_exponents(Rational::from_double(a), Rational::from_double(b),
                              Rational::from_double(zeta));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::alignment, "fit: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw Error(Errc::insufficient_data, "fit needs at least 2 points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::insufficient_data, "fit: all x values equal");
  LineFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      sse += r * r;
    }
    f.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

namespace {

double metric_value(const TraceRow& row, Metric metric) {
  switch (metric) {
    case Metric::err_succ_var: return row.err_succ_var;
    case Metric::dual_obj: return row.dual_obj;
    case Metric::comp_sup_err: return row.comp_sup_err.value_or(0.0);
  }
  return 0.0;
}

}  // namespace

SlopeFit fit_loglog_slope(const Trace& trace, Metric metric, std::optional<double> n_lo,
                          std::optional<double> n_hi) {
  if (trace.rows.empty()) throw Error(Errc::insufficient_data, "empty trace");
  const auto& rows = trace.rows;
  double lo = 0.0;
  double hi = 0.0;
  if (n_lo || n_hi) {
    lo = n_lo.value_or(0.0);
    hi = n_hi.value_or(static_cast<double>(rows.back().N));
  } else {
    hi = static_cast<double>(rows.back().N);
    lo = hi / 10.0;
    std::size_t inside = 0;
    for (const auto& r : rows) inside += static_cast<double>(r.N) >= lo ? 1 : 0;
    if (inside < 8) {
      lo = static_cast<double>(rows[rows.size() >= 8 ? rows.size() - 8 : 0].N);
    }
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : rows) {
    const auto n = static_cast<double>(r.N);
    if (n < lo || n > hi) continue;
    const double v = metric_value(r, metric);
    if (!(v > 0.0)) {
      throw Error(Errc::invalid_argument, "metric must be positive at N = " + std::to_string(r.N));
    }
    x.push_back(std::log(n));
    y.push_back(std::log(v));
  }
  if (x.size() < 5) {
    throw Error(Errc::insufficient_data,
                "slope fit needs at least 5 rows in the window, have " + std::to_string(x.size()));
  }
  const LineFit f = fit_line(x, y);
  return {f.slope, f.slope_stderr, f.points, lo, hi};
}

namespace {

// Value at log N = target by linear interpolation between bracketing rows.
template <typename Get>
double interpolate(const Trace& tr, double log_n, Get get) {
  const auto& rows = tr.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double li = std::log(static_cast<double>(rows[i].N));
    if (li == log_n) return get(rows[i]);
    if (li > log_n) {
      if (i == 0) break;
      const double lp = std::log(static_cast<double>(rows[i - 1].N));
      const double s = (log_n - lp) / (li - lp);
      return (1.0 - s) * get(rows[i - 1]) + s * get(rows[i]);
    }
  }
  throw Error(Errc::invalid_argument, "N outside the trace range");
}

}  // namespace

RunComparison compare_runs(const Trace& first, const Trace& second) {
  if (first.rows.empty() || second.rows.empty()) {
    throw Error(Errc::insufficient_data, "cannot compare empty traces");
  }
  const double top = static_cast<double>(std::min(first.rows.back().N, second.rows.back().N));
  const double bottom = static_cast<double>(std::max(first.rows.front().N, second.rows.front().N));
  if (bottom > top) throw Error(Errc::invalid_argument, "traces do not overlap in N");
  const double ln = std::log(top);
  auto log_err = [](const TraceRow& r) { return std::log(r.err_succ_var); };
  auto wall = [](const TraceRow& r) { return r.wall_ms; };
  auto support = [](const TraceRow& r) { return static_cast<double>(r.support_f); };
  RunComparison c;
  c.n_common = top;
  c.error_ratio = std::exp(interpolate(second, ln, log_err) - interpolate(first, ln, log_err));
  const double t1 = interpolate(first, ln, wall);
  c.time_ratio = t1 > 0.0 ? interpolate(second, ln, wall) / t1 : 1.0;
  c.support_ratio = interpolate(second, ln, support) / interpolate(first, ln, support);
  return c;
}

}  // namespace stream_ot
