#pragma once

// Max-stable calculus for the extremal-t family: bivariate exponent measure,
// its partial derivatives, pairwise log-density, extremal coefficients and
// max-mixtures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nsmaxstab/covmodel.hpp"
#include "nsmaxstab/mathkit/special_functions.hpp"

namespace nsmaxstab::extremal {

inline constexpr double kCorrelationClamp = 1e-12;

inline double clamp_correlation(double rho) noexcept {
  return std::clamp(rho, -1.0 + kCorrelationClamp, 1.0 - kCorrelationClamp);
}

/// Extremal-t process: W(s) = c_df max{0, e(s)}^df with e Gaussian.
struct ExtremalT {
  double df = 5.0;
  covmodel::CorrelationModel correlation = covmodel::CorrelationComponent{};
};

/// Z(s) = max[a(s) Z1(s), {1 - a(s)} Z2(s)] with logit a(s) linear in the
/// covariates.
struct MaxMixture {
  ExtremalT first;
  ExtremalT second;
  covmodel::LinearPredictor logit_a{"a", {0}, {0.0}};
};

using DependenceModel = std::variant<ExtremalT, MaxMixture>;

/// Normalizing constant c_df making E W(s) = 1.
inline double extremal_t_constant(double df) {
  return std::pow(2.0, 1.0 - 0.5 * df) * std::sqrt(std::numbers::pi) / std::tgamma(0.5 * (df + 1.0));
}

struct PairExponent {
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double V12 = 0.0;
};

/// Failed density evaluations (non-positive numerator). Merged after parallel
/// sections, never shared between workers.
struct DensityDiagnostics {
  std::size_t nonpositive = 0;
  void merge(const DensityDiagnostics& o) noexcept { nonpositive += o.nonpositive; }
};

inline void require_positive_z(double z1, double z2) {
  if (!(z1 > 0.0) || !(z2 > 0.0)) throw std::domain_error("exponent measure: z must be positive");
}

/// Bivariate extremal-t exponent measure for one station pair, with df and
/// the pair correlation fixed.
///
/// With b = sqrt{(df+1)/(1-rho^2)}, r = (z2/z1)^{1/df}, a1 = b (r - rho) and
/// a2 = b (1/r - rho):
///   V   = T(a1)/z1 + T(a2)/z2
///   V1  = -T(a1)/z1^2,  V2 = -T(a2)/z2^2
///   V12 = -t(a1) b r / (df z1^2 z2)
/// T, t being the Student t_{df+1} cdf and density. The density-derivative
/// terms of V1 cancel exactly because t(a2) = r^{df+2} t(a1).
class ExtremalTPair {
 public:
  ExtremalTPair(double rho, double df, const mathkit::StudentT& t_df_plus_1)
      : rho_(clamp_correlation(rho)),
        df_(df),
        b_(std::sqrt((df + 1.0) / ((1.0 - rho_) * (1.0 + rho_)))),
        t_(&t_df_plus_1) {}

  [[nodiscard]] double rho() const noexcept { return rho_; }

  [[nodiscard]] double V(double z1, double z2) const {
    const double lr = (std::log(z2) - std::log(z1)) / df_;
    const double a1 = b_ * (std::exp(lr) - rho_);
    const double a2 = b_ * (std::exp(-lr) - rho_);
    return t_->cdf(a1) / z1 + t_->cdf(a2) / z2;
  }

  [[nodiscard]] PairExponent terms(double z1, double z2) const {
    const double lr = (std::log(z2) - std::log(z1)) / df_;
    const double r = std::exp(lr);
    const double a1 = b_ * (r - rho_);
    const double a2 = b_ * (1.0 / r - rho_);
    const double T1 = t_->cdf(a1);
    const double T2 = t_->cdf(a2);
    const double f1 = t_->pdf(a1);
    PairExponent p;
    p.V = T1 / z1 + T2 / z2;
    p.V1 = -T1 / (z1 * z1);
    p.V2 = -T2 / (z2 * z2);
    p.V12 = -f1 * b_ * r / (df_ * z1 * z1 * z2);
    return p;
  }

  /// log(V1 V2 - V12) - V, evaluated as a sum of positive terms.
  [[nodiscard]] double log_density(double z1, double z2, DensityDiagnostics* diag = nullptr) const {
    const double lz1 = std::log(z1);
    const double lz2 = std::log(z2);
    const double lr = (lz2 - lz1) / df_;
    const double r = std::exp(lr);
    const double a1 = b_ * (r - rho_);
    const double a2 = b_ * (1.0 / r - rho_);
    const double T1 = t_->cdf(a1);
    const double T2 = t_->cdf(a2);
    // (V1 V2 - V12) z1^2 z2 = T1 T2 / z2 + t(a1) b r / df
    const double inner = T1 * T2 / z2 + std::exp(t_->log_pdf(a1) + std::log(b_) + lr - std::log(df_));
    const double v = T1 / z1 + T2 / z2;
    if (!(inner > 0.0) || !std::isfinite(inner)) {
      if (diag) ++diag->nonpositive;
      return -std::numeric_limits<double>::infinity();
    }
    return std::log(inner) - 2.0 * lz1 - lz2 - v;
  }

 private:
  double rho_;
  double df_;
  double b_;
  const mathkit::StudentT* t_;
};

inline double exponent_V(double z1, double z2, double rho, double df) {
  require_positive_z(z1, z2);
  const mathkit::StudentT t(df + 1.0);
  return ExtremalTPair(rho, df, t).V(z1, z2);
}

inline PairExponent exponent_terms(double z1, double z2, double rho, double df) {
  require_positive_z(z1, z2);
  const mathkit::StudentT t(df + 1.0);
  return ExtremalTPair(rho, df, t).terms(z1, z2);
}

inline double dV_dz1(double z1, double z2, double rho, double df) { return exponent_terms(z1, z2, rho, df).V1; }
inline double dV_dz2(double z1, double z2, double rho, double df) { return exponent_terms(z1, z2, rho, df).V2; }
inline double d2V_dz1dz2(double z1, double z2, double rho, double df) {
  return exponent_terms(z1, z2, rho, df).V12;
}

inline double bivar_logdensity(double z1, double z2, double rho, double df, DensityDiagnostics* diag = nullptr) {
  require_positive_z(z1, z2);
  const mathkit::StudentT t(df + 1.0);
  return ExtremalTPair(rho, df, t).log_density(z1, z2, diag);
}

/// Pairwise extremal coefficient of the plain extremal-t model:
/// 2 T_{df+1}( sqrt{(df+1)(1-rho)/(1+rho)} ).
inline double extremal_t_theta(double rho, double df) {
  if (rho >= 1.0) return 1.0;
  const double r = clamp_correlation(rho);
  return 2.0 * mathkit::student_t_cdf(std::sqrt((df + 1.0) * (1.0 - r) / (1.0 + r)), df + 1.0);
}

/// Max-mixture exponent measure in any dimension, given the component
/// exponent measures:  V(z) = V1(z / a) + V2(z / (1 - a)).
inline double maxmix_exponent(std::span<const double> z, std::span<const double> a,
                              const std::function<double(std::span<const double>)>& V1,
                              const std::function<double(std::span<const double>)>& V2) {
  if (z.size() != a.size()) throw covmodel::DimensionMismatch("maxmix_exponent: weights and z differ in length");
  std::vector<double> u(z.size()), w(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!(a[j] > 0.0 && a[j] < 1.0)) throw std::domain_error("maxmix_exponent: weight outside (0, 1)");
    if (!(z[j] > 0.0)) throw std::domain_error("maxmix_exponent: z must be positive");
    u[j] = z[j] / a[j];
    w[j] = z[j] / (1.0 - a[j]);
  }
  return V1(u) + V2(w);
}

/// Pair terms of a max-mixture with site weights a1, a2.
inline PairExponent maxmix_pair_terms(const PairExponent& first_at_scaled, const PairExponent& second_at_scaled,
                                      double a1, double a2) {
  const double b1 = 1.0 - a1;
  const double b2 = 1.0 - a2;
  PairExponent p;
  p.V = first_at_scaled.V + second_at_scaled.V;
  p.V1 = first_at_scaled.V1 / a1 + second_at_scaled.V1 / b1;
  p.V2 = first_at_scaled.V2 / a2 + second_at_scaled.V2 / b2;
  p.V12 = first_at_scaled.V12 / (a1 * a2) + second_at_scaled.V12 / (b1 * b2);
  return p;
}

/// Per-site resolution of a dependence model on a site set: pair exponent
/// measures and extremal coefficients by station index.
class ResolvedModel {
 public:
  ResolvedModel(const DependenceModel& model, const covmodel::SiteSet& sites) {
    if (const auto* e = std::get_if<ExtremalT>(&model)) {
      add_component(*e, sites);
    } else {
      const auto& mm = std::get<MaxMixture>(model);
      add_component(mm.first, sites);
      add_component(mm.second, sites);
      weights_.resize(sites.size());
      for (std::size_t j = 0; j < sites.size(); ++j)
        weights_[j] = covmodel::logistic(mm.logit_a.eval(sites.covariates.row(j)));
    }
  }

  [[nodiscard]] bool is_max_mixture() const noexcept { return components_.size() == 2; }
  [[nodiscard]] double weight(std::size_t j) const { return weights_.at(j); }
  [[nodiscard]] std::size_t components() const noexcept { return components_.size(); }
  [[nodiscard]] double df(std::size_t c = 0) const { return components_[c].df; }
  [[nodiscard]] const mathkit::StudentT& student(std::size_t c = 0) const { return components_[c].t; }
  [[nodiscard]] double correlation(std::size_t j1, std::size_t j2, std::size_t c = 0) const {
    return (*components_[c].rho)(j1, j2);
  }

  /// Log-density of the pair (j1, j2) at (z1, z2).
  [[nodiscard]] double log_density(std::size_t j1, std::size_t j2, double z1, double z2,
                                   DensityDiagnostics* diag = nullptr) const {
    if (!is_max_mixture()) {
      return ExtremalTPair(correlation(j1, j2), df(), student()).log_density(z1, z2, diag);
    }
    const PairExponent p = terms(j1, j2, z1, z2);
    const double num = p.V1 * p.V2 - p.V12;
    if (!(num > 0.0) || !std::isfinite(num)) {
      if (diag) ++diag->nonpositive;
      return -std::numeric_limits<double>::infinity();
    }
    return std::log(num) - p.V;
  }

  [[nodiscard]] PairExponent terms(std::size_t j1, std::size_t j2, double z1, double z2) const {
    if (!is_max_mixture()) return ExtremalTPair(correlation(j1, j2), df(), student()).terms(z1, z2);
    const double a1 = weights_[j1];
    const double a2 = weights_[j2];
    const auto p1 = ExtremalTPair(correlation(j1, j2, 0), df(0), student(0)).terms(z1 / a1, z2 / a2);
    const auto p2 = ExtremalTPair(correlation(j1, j2, 1), df(1), student(1)).terms(z1 / (1.0 - a1), z2 / (1.0 - a2));
    return maxmix_pair_terms(p1, p2, a1, a2);
  }

  [[nodiscard]] double V(std::size_t j1, std::size_t j2, double z1, double z2) const {
    if (!is_max_mixture()) return ExtremalTPair(correlation(j1, j2), df(), student()).V(z1, z2);
    const double a1 = weights_[j1];
    const double a2 = weights_[j2];
    return ExtremalTPair(correlation(j1, j2, 0), df(0), student(0)).V(z1 / a1, z2 / a2) +
           ExtremalTPair(correlation(j1, j2, 1), df(1), student(1)).V(z1 / (1.0 - a1), z2 / (1.0 - a2));
  }

  [[nodiscard]] double theta(std::size_t j1, std::size_t j2) const { return V(j1, j2, 1.0, 1.0); }

 private:
  struct Component {
    double df;
    mathkit::StudentT t;
    std::unique_ptr<covmodel::ResolvedCorrelation> rho;
  };

  void add_component(const ExtremalT& e, const covmodel::SiteSet& sites) {
    if (!(e.df > 0.0)) throw std::domain_error("extremal-t: df must be positive");
    components_.push_back(
        {e.df, mathkit::StudentT(e.df + 1.0), std::make_unique<covmodel::ResolvedCorrelation>(e.correlation, sites)});
  }

  std::vector<Component> components_;
  std::vector<double> weights_;
};

/// theta(s1, s2) = V(1, 1) for sites j1, j2 of a site set.
inline double extremal_coefficient_pair(const DependenceModel& model, const covmodel::SiteSet& sites, std::size_t j1,
                                        std::size_t j2) {
  return ResolvedModel(model, sites).theta(j1, j2);
}

/// Unit Frechet -> standard Gumbel.
inline double frechet_to_gumbel(double z) {
  if (!(z > 0.0)) throw std::domain_error("frechet_to_gumbel: z must be positive");
  return std::log(z);
}

}  // namespace nsmaxstab::extremal
