#pragma once

// Named parameter vectors with working-scale transforms, and model templates
// that turn a parameter vector into a dependence model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmaxstab/covmodel.hpp"
#include "nsmaxstab/extremal.hpp"

namespace nsmaxstab::inference {

/// Map from the unconstrained working scale to the natural scale.
enum class Transform {
  identity,
  log,        // natural = exp(working), for positive parameters
  two_logit,  // natural = 2 logistic(working), for alpha in (0, 2)
};

inline double to_natural(Transform t, double w) {
  switch (t) {
    case Transform::log:
      return std::exp(w);
    case Transform::two_logit:
      return 2.0 * covmodel::logistic(w);
    case Transform::identity:
      break;
  }
  return w;
}

inline double to_working(Transform t, double v) {
  switch (t) {
    case Transform::log:
      if (!(v > 0.0)) throw std::domain_error("log-scale parameter must be positive");
      return std::log(v);
    case Transform::two_logit: {
      if (!(v > 0.0 && v <= 2.0)) throw std::domain_error("alpha must lie in (0, 2]");
      const double p = std::min(0.5 * v, 1.0 - 1e-12);
      return covmodel::logit(p);
    }
    case Transform::identity:
      break;
  }
  return v;
}

/// d natural / d working at working value w.
inline double natural_derivative(Transform t, double w) {
  switch (t) {
    case Transform::log:
      return std::exp(w);
    case Transform::two_logit: {
      const double l = covmodel::logistic(w);
      return 2.0 * l * (1.0 - l);
    }
    case Transform::identity:
      break;
  }
  return 1.0;
}

inline const char* transform_name(Transform t) {
  switch (t) {
    case Transform::log:
      return "log";
    case Transform::two_logit:
      return "two_logit";
    case Transform::identity:
      break;
  }
  return "identity";
}

struct Parameter {
  std::string name;
  double value = 0.0;  // natural scale
  Transform transform = Transform::identity;
  bool fixed = false;
};

class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::vector<Parameter> p) : params_(std::move(p)) {
    for (std::size_t i = 0; i < params_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (params_[i].name == params_[j].name) throw std::invalid_argument("duplicate parameter '" + params_[i].name + "'");
  }

  [[nodiscard]] const std::vector<Parameter>& all() const noexcept { return params_; }
  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }

  [[nodiscard]] std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return i;
    return std::nullopt;
  }
  [[nodiscard]] bool has(const std::string& name) const { return index_of(name).has_value(); }

  [[nodiscard]] const Parameter& at(const std::string& name) const {
    if (auto i = index_of(name)) return params_[*i];
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }
  [[nodiscard]] double operator[](const std::string& name) const { return at(name).value; }

  void set(const std::string& name, double value) { params_[require(name)].value = value; }
  void fix(const std::string& name, double value) {
    auto& p = params_[require(name)];
    p.value = value;
    p.fixed = true;
  }
  void release(const std::string& name) { params_[require(name)].fixed = false; }

  [[nodiscard]] std::vector<std::size_t> free_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (!params_[i].fixed) idx.push_back(i);
    return idx;
  }
  [[nodiscard]] std::size_t free_count() const { return free_indices().size(); }

  [[nodiscard]] std::vector<std::string> free_names() const {
    std::vector<std::string> n;
    for (auto i : free_indices()) n.push_back(params_[i].name);
    return n;
  }

  /// Working-scale values of the free parameters.
  [[nodiscard]] std::vector<double> working() const {
    std::vector<double> w;
    for (auto i : free_indices()) w.push_back(to_working(params_[i].transform, params_[i].value));
    return w;
  }

  [[nodiscard]] ParameterVector with_working(const std::vector<double>& w) const {
    const auto idx = free_indices();
    if (w.size() != idx.size()) throw covmodel::DimensionMismatch("working vector length differs from free parameters");
    ParameterVector out = *this;
    for (std::size_t k = 0; k < idx.size(); ++k)
      out.params_[idx[k]].value = to_natural(params_[idx[k]].transform, w[k]);
    return out;
  }

  /// Diagonal of d natural / d working for the free parameters.
  [[nodiscard]] std::vector<double> natural_jacobian() const {
    std::vector<double> d;
    for (auto i : free_indices())
      d.push_back(natural_derivative(params_[i].transform, to_working(params_[i].transform, params_[i].value)));
    return d;
  }

 private:
  std::size_t require(const std::string& name) const {
    if (auto i = index_of(name)) return *i;
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }

  std::vector<Parameter> params_;
};

enum class KernelKind {
  parametric,  // omega(s) = beta1 2^{-beta2 |s_x|}, isotropic
  covariate,   // log-linear omega_x, omega_y, logit-linear delta
};

enum class MixtureKind { none, sum, max };

/// Structure of a dependence model; the numbers live in a ParameterVector.
///
/// Parameter names: beta1, beta2 (parametric); omega_x:<cov>, omega_y:<cov>,
/// delta:<cov> (covariate kernel, <cov> = intercept or a covariate name);
/// alpha, alpha2 (second component of a mixture); a:<cov>; df.
struct ModelTemplate {
  KernelKind kernel = KernelKind::covariate;
  bool isotropic = true;
  bool brown_resnick_scaling = true;  // parametric kernel only
  std::vector<std::string> omega_x_covariates;
  std::vector<std::string> omega_y_covariates;
  std::vector<std::string> delta_covariates;
  MixtureKind mixture = MixtureKind::none;
  std::vector<std::string> a_covariates;
  bool estimate_df = false;
  double df = 5.0;

  [[nodiscard]] ParameterVector default_parameters() const {
    std::vector<Parameter> p;
    auto block = [&](const std::string& prefix, const std::vector<std::string>& covs, double intercept) {
      p.push_back({prefix + ":intercept", intercept, Transform::identity, false});
      for (const auto& c : covs) p.push_back({prefix + ":" + c, 0.0, Transform::identity, false});
    };
    if (kernel == KernelKind::parametric) {
      p.push_back({"beta1", 0.1, Transform::log, false});
      p.push_back({"beta2", 0.0, Transform::identity, false});
    } else {
      block("omega_x", omega_x_covariates, std::log(0.1));
      if (!isotropic) {
        block("omega_y", omega_y_covariates, std::log(0.1));
        block("delta", delta_covariates, 0.0);
      }
    }
    p.push_back({"alpha", mixture == MixtureKind::none ? 1.0 : 0.5, Transform::two_logit, false});
    if (mixture != MixtureKind::none) {
      p.push_back({"alpha2", 1.5, Transform::two_logit, false});
      block("a", a_covariates, 0.0);
    }
    p.push_back({"df", df, Transform::log, !estimate_df});
    return ParameterVector(std::move(p));
  }

  /// Number of free parameters in the default parameterization.
  [[nodiscard]] std::size_t parameter_count() const { return default_parameters().free_count(); }

  [[nodiscard]] extremal::DependenceModel build(const ParameterVector& psi, const covmodel::CovariateTable& cov) const {
    auto predictor = [&](const std::string& prefix, const std::vector<std::string>& covs) {
      covmodel::LinearPredictor lp{prefix, {0}, {psi[prefix + ":intercept"]}};
      for (const auto& c : covs) {
        lp.columns.push_back(cov.require(c));
        lp.beta.push_back(psi[prefix + ":" + c]);
      }
      return lp;
    };
    const double df_value = psi["df"];
    covmodel::KernelSpec k;
    if (kernel == KernelKind::parametric) {
      covmodel::ParametricKernel pk{psi["beta1"], psi["beta2"], 1.0};
      // scaling uses the first component's alpha
      if (brown_resnick_scaling) pk.axis_scale = covmodel::ParametricKernel::brown_resnick_scale(df_value, psi["alpha"]);
      k = pk;
    } else {
      covmodel::CovariateKernel ck;
      ck.isotropic = isotropic;
      ck.log_omega_x = predictor("omega_x", omega_x_covariates);
      if (!isotropic) {
        ck.log_omega_y = predictor("omega_y", omega_y_covariates);
        ck.logit_delta = predictor("delta", delta_covariates);
      }
      k = ck;
    }
    const covmodel::CorrelationComponent c1{k, covmodel::BaseCorrelation(psi["alpha"])};
    if (mixture == MixtureKind::none) return extremal::ExtremalT{df_value, c1};
    const covmodel::CorrelationComponent c2{k, covmodel::BaseCorrelation(psi["alpha2"])};
    const auto a = predictor("a", a_covariates);
    if (mixture == MixtureKind::sum) return extremal::ExtremalT{df_value, covmodel::SumMixtureSpec{c1, c2, a}};
    return extremal::MaxMixture{{df_value, c1}, {df_value, c2}, a};
  }
};

}  // namespace nsmaxstab::inference
