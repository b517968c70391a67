#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsmaxstab/mathkit/optimize.hpp"

namespace nsmaxstab::gev {

/// Generalized extreme-value parameters. |xi| below this is treated as the
/// Gumbel limit.
inline constexpr double kGumbelShape = 1e-8;

struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
};

class OutsideSupport : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// -log G(x) = [1 + xi (x - mu) / sigma]_+^{-1/xi}; +inf below the lower
/// endpoint, 0 above the upper endpoint.
inline double neg_log_cdf(double x, const GevParams& p) {
  if (!(p.sigma > 0.0)) throw std::domain_error("GEV: sigma must be positive");
  const double y = (x - p.mu) / p.sigma;
  if (std::fabs(p.xi) < kGumbelShape) return std::exp(-y);
  const double t = 1.0 + p.xi * y;
  if (t <= 0.0) return p.xi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::pow(t, -1.0 / p.xi);
}

inline double cdf(double x, const GevParams& p) { return std::exp(-neg_log_cdf(x, p)); }

inline double log_pdf(double x, const GevParams& p) {
  const double y = (x - p.mu) / p.sigma;
  if (std::fabs(p.xi) < kGumbelShape) return -std::log(p.sigma) - y - std::exp(-y);
  const double t = 1.0 + p.xi * y;
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  const double lt = std::log(t);
  return -std::log(p.sigma) - (1.0 / p.xi + 1.0) * lt - std::exp(-lt / p.xi);
}

inline double quantile(double prob, const GevParams& p) {
  const double y = -std::log(prob);
  if (std::fabs(p.xi) < kGumbelShape) return p.mu - p.sigma * std::log(y);
  return p.mu + p.sigma * (std::pow(y, -p.xi) - 1.0) / p.xi;
}

/// z = -1 / log G(x); maps GEV(p) data to the unit Frechet scale.
inline double gev_to_frechet(double x, const GevParams& p) {
  const double y = (x - p.mu) / p.sigma;
  if (!(p.sigma > 0.0)) throw std::domain_error("GEV: sigma must be positive");
  if (std::fabs(p.xi) >= kGumbelShape && !(1.0 + p.xi * y > 0.0))
    throw OutsideSupport("gev_to_frechet: value outside the GEV support");
  return 1.0 / neg_log_cdf(x, p);
}

struct GevFit {
  GevParams params;
  double loglik = 0.0;
  bool converged = false;
};

/// Maximum likelihood for an i.i.d. GEV sample, optimized over
/// (mu, log sigma, xi) from a Gumbel moment start.
inline GevFit fit_gev_mle(std::span<const double> x) {
  if (x.size() < 3) throw std::invalid_argument("fit_gev_mle: need at least 3 observations");
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s2 = 0.0;
  for (double v : x) s2 += (v - m) * (v - m);
  const double sd = std::sqrt(s2 / static_cast<double>(x.size() - 1));
  if (!(sd > 0.0)) throw std::invalid_argument("fit_gev_mle: sample has zero variance");
  const double sigma0 = sd * std::sqrt(6.0) / std::numbers::pi;
  const double mu0 = m - std::numbers::egamma * sigma0;

  auto nll = [&](const std::vector<double>& w) {
    const GevParams p{w[0], std::exp(w[1]), w[2]};
    double s = 0.0;
    for (double v : x) {
      const double lp = log_pdf(v, p);
      if (!std::isfinite(lp)) return std::numeric_limits<double>::infinity();
      s += lp;
    }
    return -s;
  };

  mathkit::NelderMeadOptions opt;
  opt.initial_step = 0.1;
  opt.xtol = 1e-8;
  opt.ftol = 1e-10;
  opt.max_iterations = 4000;
  std::vector<double> start{mu0, std::log(sigma0), 0.1};
  GevFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  for (double xi0 : {0.1, -0.1}) {
    start[2] = xi0;
    if (!std::isfinite(nll(start))) continue;
    auto r = mathkit::nelder_mead(nll, start, opt);
    r = mathkit::nelder_mead(nll, r.argmin, opt);  // restart from the optimum
    if (-r.fmin > best.loglik) {
      best.params = {r.argmin[0], std::exp(r.argmin[1]), r.argmin[2]};
      best.loglik = -r.fmin;
      best.converged = r.converged;
    }
  }
  if (!std::isfinite(best.loglik)) throw std::runtime_error("fit_gev_mle: no finite starting point");
  return best;
}

}  // namespace nsmaxstab::gev
