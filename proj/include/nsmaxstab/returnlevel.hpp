#pragma once

// Monte Carlo return levels of spatial functionals over pixelated regions,
// areal extremal coefficients and the exact MAX return level.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmaxstab/covmodel.hpp"
#include "nsmaxstab/extremal.hpp"
#include "nsmaxstab/mathkit/statistics.hpp"
#include "nsmaxstab/simulate.hpp"

namespace nsmaxstab::returnlevel {

using covmodel::SiteSet;

/// Rectangle pixelated on an edge-inclusive grid: [0, 0.2] x [0, 1] at
/// spacing 0.05 gives 5 x 21 = 105 pixels.
struct Region {
  std::string id = "region";
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double spacing = 0.05;

  [[nodiscard]] std::size_t nx() const { return steps(x1 - x0) + 1; }
  [[nodiscard]] std::size_t ny() const { return steps(y1 - y0) + 1; }
  [[nodiscard]] double area() const { return (x1 - x0) * (y1 - y0); }

  void validate() const {
    if (!(spacing > 0.0)) throw std::invalid_argument("region '" + id + "': spacing must be positive");
    if (!(x1 >= x0) || !(y1 >= y0)) throw std::invalid_argument("region '" + id + "': empty rectangle");
    static_cast<void>(nx());
    static_cast<void>(ny());
  }

  [[nodiscard]] SiteSet pixels() const {
    validate();
    return SiteSet::regular_grid({x0, y0, spacing, nx(), ny()});
  }

 private:
  [[nodiscard]] std::size_t steps(double len) const {
    const double k = len / spacing;
    const double r = std::round(k);
    if (std::fabs(k - r) > 1e-6)
      throw std::invalid_argument("region '" + id + "': side " + std::to_string(len) +
                                  " is not a whole number of spacings " + std::to_string(spacing));
    return static_cast<std::size_t>(r);
  }
};

enum class Functional { integral, minimum, maximum };
enum class Scale { frechet, gumbel };

inline const char* functional_name(Functional f) {
  switch (f) {
    case Functional::integral:
      return "INT";
    case Functional::minimum:
      return "MIN";
    case Functional::maximum:
      break;
  }
  return "MAX";
}

inline const char* scale_name(Scale s) { return s == Scale::frechet ? "frechet" : "gumbel"; }

/// Per-replicate INT (pixel mean x area), MIN and MAX over one region.
struct FunctionalSamples {
  std::string region_id;
  Scale scale = Scale::gumbel;
  std::vector<double> integral, minimum, maximum;
  simulate::Provenance provenance;

  [[nodiscard]] const std::vector<double>& values(Functional f) const {
    switch (f) {
      case Functional::integral:
        return integral;
      case Functional::minimum:
        return minimum;
      case Functional::maximum:
        break;
    }
    return maximum;
  }
};

/// Simulates the field on the region's pixels and reduces each replicate.
/// Replicates are drawn in batches; replicate r always uses stream r, so the
/// batch size does not change the values.
inline FunctionalSamples simulate_functionals(const extremal::DependenceModel& model, const Region& region,
                                              const simulate::SimulationConfig& config, Scale scale,
                                              std::size_t batch = 10000) {
  config.validate();
  const SiteSet pix = region.pixels();
  const double area = region.area();
  FunctionalSamples out;
  out.region_id = region.id;
  out.scale = scale;
  const std::size_t m = config.replicates;
  out.integral.reserve(m);
  out.minimum.reserve(m);
  out.maximum.reserve(m);
  std::size_t truncated = 0;
  for (std::size_t start = 0; start < m; start += batch) {
    auto cfg = config;
    cfg.first_stream = config.first_stream + start;
    cfg.replicates = std::min(batch, m - start);
    const auto f = simulate::simulate_extremal_t(pix, model, cfg);
    truncated += f.provenance.truncated;
    out.provenance = f.provenance;
    for (std::size_t r = 0; r < f.values.rows(); ++r) {
      double s = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (double z : f.values.row(r)) {
        const double v = scale == Scale::gumbel ? std::log(z) : z;
        s += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      out.integral.push_back(s / static_cast<double>(pix.size()) * area);
      out.minimum.push_back(lo);
      out.maximum.push_back(hi);
    }
  }
  out.provenance.truncated = truncated;
  out.provenance.seed = config.seed;
  return out;
}

struct LevelEstimate {
  double level = 0.0;
  double se = 0.0;  // Monte Carlo standard error
};

/// Empirical (1 - 1/N)-quantile (type 7). The standard error is half the
/// spread of the order statistics at p +- sqrt(p (1 - p) / m).
inline LevelEstimate return_level_empirical(std::vector<double> values, double N,
                                            std::vector<std::string>* warnings = nullptr) {
  const auto m = static_cast<double>(values.size());
  if (!(N > 1.0)) throw std::invalid_argument("return period must exceed 1");
  if (values.empty() || m < N)
    throw std::invalid_argument("return level: " + std::to_string(values.size()) + " values cannot resolve N = " +
                                std::to_string(N));
  if (warnings && m < 10.0 * N)
    warnings->push_back("return level at N = " + std::to_string(N) + " uses fewer than 10 N values");
  std::sort(values.begin(), values.end());
  const double p = 1.0 - 1.0 / N;
  const double half = std::sqrt(p * (1.0 - p) / m);
  LevelEstimate e;
  e.level = mathkit::sorted_quantile(values, p);
  const double lo = mathkit::sorted_quantile(values, std::max(0.0, p - half));
  const double hi = mathkit::sorted_quantile(values, std::min(1.0, p + half));
  e.se = 0.5 * (hi - lo);
  return e;
}

/// theta = m / sum(1 / M) for region maxima M on the unit Frechet scale;
/// 1 / M is exponential with rate theta, so se = theta / sqrt(m).
inline LevelEstimate areal_extremal_coefficient(const std::vector<double>& frechet_maxima) {
  if (frechet_maxima.empty()) throw std::invalid_argument("areal extremal coefficient: no maxima");
  double s = 0.0;
  for (double z : frechet_maxima) {
    if (!(z > 0.0)) throw std::domain_error("areal extremal coefficient: maxima must be positive");
    s += 1.0 / z;
  }
  const auto m = static_cast<double>(frechet_maxima.size());
  const double theta = m / s;
  return {theta, theta / std::sqrt(m)};
}

/// Same, from samples on either scale.
inline LevelEstimate areal_extremal_coefficient(const FunctionalSamples& s) {
  if (s.scale == Scale::frechet) return areal_extremal_coefficient(s.maximum);
  std::vector<double> z(s.maximum.size());
  std::transform(s.maximum.begin(), s.maximum.end(), z.begin(), [](double g) { return std::exp(g); });
  return areal_extremal_coefficient(z);
}

/// Gumbel-scale N-year level of the region maximum: log theta - log(-log(1 - 1/N)).
inline double return_level_max_exact(double theta, double N) {
  if (!(theta >= 1.0)) throw std::domain_error("areal extremal coefficient must be >= 1");
  if (!(N > 1.0)) throw std::domain_error("return period must exceed 1");
  return std::log(theta) - std::log(-std::log1p(-1.0 / N));
}

struct CurvePoint {
  double N = 0.0;
  double level = 0.0;
  double se = 0.0;
};

struct ReturnLevelCurve {
  Functional functional = Functional::integral;
  std::string region_id;
  Scale scale = Scale::gumbel;
  std::size_t replicates = 0;
  std::vector<CurvePoint> points;
};

/// INT and MIN curves by empirical quantiles; MAX by the exact formula with
/// the estimated areal coefficient (Gumbel scale) or by empirical quantiles
/// (Frechet scale).
inline std::vector<ReturnLevelCurve> return_level_curves(const FunctionalSamples& s, const std::vector<double>& periods,
                                                         std::vector<std::string>* warnings = nullptr) {
  std::vector<ReturnLevelCurve> out;
  for (auto f : {Functional::integral, Functional::minimum, Functional::maximum}) {
    ReturnLevelCurve c;
    c.functional = f;
    c.region_id = s.region_id;
    c.scale = s.scale;
    c.replicates = s.values(f).size();
    for (double N : periods) {
      if (f == Functional::maximum && s.scale == Scale::gumbel) {
        const auto th = areal_extremal_coefficient(s);
        c.points.push_back({N, return_level_max_exact(std::max(1.0, th.level), N), th.se / th.level});
      } else {
        const auto e = return_level_empirical(s.values(f), N, warnings);
        c.points.push_back({N, e.level, e.se});
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace nsmaxstab::returnlevel
