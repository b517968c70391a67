#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nsmaxstab::mathkit {

namespace detail {

inline void require_positive_df(double df, const char* where) {
  if (!(df > 0.0) || std::isinf(df)) {
    throw std::domain_error(std::string(where) + ": degrees of freedom must be positive and finite, got " +
                            std::to_string(df));
  }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
/// Converges quickly for x < (a + 1) / (a + b + 2).
inline double incomplete_beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Log of the complete beta function B(a, b).
inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Regularized incomplete beta I_x(a, b). The complement y = 1 - x is passed
/// separately so callers can supply it without cancellation.
inline double regularized_incomplete_beta(double a, double b, double x, double y, double lbeta) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log(y) - lbeta;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * detail::incomplete_beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * detail::incomplete_beta_cf(b, a, y) / b;
}

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("regularized_incomplete_beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("regularized_incomplete_beta: x outside [0, 1]");
  return regularized_incomplete_beta(a, b, x, 1.0 - x, log_beta(a, b));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Student t distribution with the normalizing constants cached, for use in
/// tight loops where df is fixed.
class StudentT {
 public:
  explicit StudentT(double df) : df_(df) {
    detail::require_positive_df(df, "StudentT");
    lbeta_ = log_beta(0.5 * df_, 0.5);
    log_norm_ = std::lgamma(0.5 * (df_ + 1.0)) - std::lgamma(0.5 * df_) - 0.5 * std::log(df_ * std::numbers::pi);
  }

  [[nodiscard]] double df() const noexcept { return df_; }

  [[nodiscard]] double cdf(double x) const {
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    const double x2 = x * x;
    const double denom = df_ + x2;
    // tail = P(T > |x|) = I_{df/(df+x^2)}(df/2, 1/2) / 2
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * df_, 0.5, df_ / denom, x2 / denom, lbeta_);
    return x > 0.0 ? 1.0 - tail : tail;
  }

  [[nodiscard]] double log_pdf(double x) const {
    return log_norm_ - 0.5 * (df_ + 1.0) * std::log1p(x * x / df_);
  }

  [[nodiscard]] double pdf(double x) const { return std::exp(log_pdf(x)); }

  /// Inverse CDF by bisection on a bracket that is widened until it contains p.
  [[nodiscard]] double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      if (p == 0.0) return -std::numeric_limits<double>::infinity();
      if (p == 1.0) return std::numeric_limits<double>::infinity();
      throw std::domain_error("student_t_quantile: p outside [0, 1]");
    }
    double lo = -1.0;
    double hi = 1.0;
    while (cdf(lo) > p) lo *= 2.0;
    while (cdf(hi) < p) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

 private:
  double df_;
  double lbeta_;
  double log_norm_;
};

inline double student_t_cdf(double x, double df) { return StudentT(df).cdf(x); }
inline double student_t_pdf(double x, double df) { return StudentT(df).pdf(x); }
inline double student_t_quantile(double p, double df) { return StudentT(df).quantile(p); }

}  // namespace nsmaxstab::mathkit
