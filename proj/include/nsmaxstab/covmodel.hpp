#pragma once

// Spatially varying kernel matrices, the Paciorek-Schervish non-stationary
// correlation built on a powered-exponential base, covariate links and
// Gaussian sum-mixture correlations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nsmaxstab/mathkit/dense_matrix.hpp"

namespace nsmaxstab::covmodel {

using mathkit::DenseMatrix;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SiteCoordinate {
  double x = 0.0;
  double y = 0.0;
};

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct SymMat2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  [[nodiscard]] double det() const noexcept { return xx * yy - xy * xy; }
  [[nodiscard]] bool positive_definite() const noexcept { return xx > 0.0 && det() > 0.0; }
  friend SymMat2 operator+(const SymMat2& a, const SymMat2& b) noexcept {
    return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy};
  }
  friend SymMat2 operator*(double s, const SymMat2& a) noexcept { return {s * a.xx, s * a.xy, s * a.yy}; }
};

/// Covariates for a site set. Column 0 is always the intercept (== 1). Other
/// columns are standardized with the stored center and scale before they
/// enter any link function.
class CovariateTable {
 public:
  CovariateTable() = default;

  /// Intercept-only table for `sites` rows.
  explicit CovariateTable(std::size_t sites) : names_{"intercept"}, values_(sites, 1, 1.0), center_{0.0}, scale_{1.0} {}

  /// Builds from raw covariate columns (without intercept) and standardizes
  /// them to mean 0, standard deviation 1. Constant columns keep scale 1.
  CovariateTable(std::vector<std::string> names, const DenseMatrix& raw) {
    if (names.size() != raw.cols()) throw DimensionMismatch("covariate names and columns differ in count");
    std::vector<double> center(raw.cols(), 0.0), scale(raw.cols(), 1.0);
    const auto n = static_cast<double>(raw.rows());
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      double m = 0.0;
      for (std::size_t r = 0; r < raw.rows(); ++r) m += raw(r, c);
      m /= n;
      double v = 0.0;
      for (std::size_t r = 0; r < raw.rows(); ++r) v += (raw(r, c) - m) * (raw(r, c) - m);
      const double sd = raw.rows() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0;
      center[c] = m;
      scale[c] = sd > 0.0 ? sd : 1.0;
    }
    *this = with_standardization(std::move(names), raw, center, scale);
  }

  /// Builds with an explicit (stored) standardization.
  static CovariateTable with_standardization(std::vector<std::string> names, const DenseMatrix& raw,
                                             const std::vector<double>& center, const std::vector<double>& scale) {
    if (names.size() != raw.cols() || center.size() != raw.cols() || scale.size() != raw.cols())
      throw DimensionMismatch("covariate standardization does not match the covariate columns");
    CovariateTable t;
    t.names_.reserve(names.size() + 1);
    t.names_.push_back("intercept");
    for (auto& n : names) t.names_.push_back(std::move(n));
    t.values_ = DenseMatrix(raw.rows(), raw.cols() + 1);
    t.center_ = {0.0};
    t.scale_ = {1.0};
    t.center_.insert(t.center_.end(), center.begin(), center.end());
    t.scale_.insert(t.scale_.end(), scale.begin(), scale.end());
    for (std::size_t r = 0; r < raw.rows(); ++r) {
      t.values_(r, 0) = 1.0;
      for (std::size_t c = 0; c < raw.cols(); ++c) t.values_(r, c + 1) = (raw(r, c) - center[c]) / scale[c];
    }
    return t;
  }

  [[nodiscard]] std::size_t sites() const noexcept { return values_.rows(); }
  [[nodiscard]] std::size_t columns() const noexcept { return values_.cols(); }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] const std::vector<double>& center() const noexcept { return center_; }
  [[nodiscard]] const std::vector<double>& scale() const noexcept { return scale_; }
  [[nodiscard]] std::span<const double> row(std::size_t site) const { return values_.row(site); }
  [[nodiscard]] double raw(std::size_t site, std::size_t column) const {
    return values_(site, column) * scale_[column] + center_[column];
  }

  [[nodiscard]] std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  [[nodiscard]] std::size_t require(const std::string& name) const {
    if (auto i = index_of(name)) return *i;
    throw std::invalid_argument("unknown covariate '" + name + "'");
  }

  /// Rows selected by index, keeping this table's standardization.
  [[nodiscard]] CovariateTable subset(std::span<const std::size_t> rows) const {
    CovariateTable t;
    t.names_ = names_;
    t.center_ = center_;
    t.scale_ = scale_;
    t.values_ = DenseMatrix(rows.size(), columns());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < columns(); ++c) t.values_(i, c) = values_(rows[i], c);
    return t;
  }

 private:
  std::vector<std::string> names_;
  DenseMatrix values_;
  std::vector<double> center_;
  std::vector<double> scale_;
};

struct GridDescriptor {
  double x0 = 0.0;
  double y0 = 0.0;
  double spacing = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
};

/// Ordered stations or pixels with their covariates.
struct SiteSet {
  std::vector<std::string> ids;
  std::vector<SiteCoordinate> coords;
  CovariateTable covariates;
  std::optional<GridDescriptor> grid;

  [[nodiscard]] std::size_t size() const noexcept { return coords.size(); }

  static SiteSet from_coordinates(std::vector<SiteCoordinate> coords) {
    SiteSet s;
    s.coords = std::move(coords);
    s.covariates = CovariateTable(s.coords.size());
    s.ids.reserve(s.coords.size());
    for (std::size_t i = 0; i < s.coords.size(); ++i) s.ids.push_back("s" + std::to_string(i + 1));
    return s;
  }

  /// Regular grid, x varying fastest, both edges included.
  static SiteSet regular_grid(const GridDescriptor& g) {
    std::vector<SiteCoordinate> c;
    c.reserve(g.nx * g.ny);
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) c.push_back({g.x0 + g.spacing * i, g.y0 + g.spacing * j});
    SiteSet s = from_coordinates(std::move(c));
    s.grid = g;
    return s;
  }

  void validate() const {
    if (coords.empty()) throw std::invalid_argument("site set is empty");
    if (ids.size() != coords.size()) throw DimensionMismatch("site ids and coordinates differ in count");
    if (covariates.sites() != coords.size()) throw DimensionMismatch("covariate rows and sites differ in count");
    for (const auto& c : coords)
      if (!std::isfinite(c.x) || !std::isfinite(c.y)) throw std::invalid_argument("non-finite site coordinate");
    if (grid && grid->nx * grid->ny != coords.size())
      throw DimensionMismatch("grid descriptor inconsistent with the listed sites");
  }
};

/// Linear predictor X^T beta over a subset of covariate columns.
struct LinearPredictor {
  std::string block;                 // e.g. "omega_x"; used in error messages
  std::vector<std::size_t> columns;  // covariate column indices, 0 = intercept
  std::vector<double> beta;

  static LinearPredictor intercept(std::string block, double value) { return {std::move(block), {0}, {value}}; }

  [[nodiscard]] double eval(std::span<const double> row) const {
    if (columns.size() != beta.size())
      throw DimensionMismatch("parameter block '" + block + "': " + std::to_string(beta.size()) +
                              " coefficients for " + std::to_string(columns.size()) + " covariates");
    double s = 0.0;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] >= row.size())
        throw DimensionMismatch("parameter block '" + block + "': covariate column " + std::to_string(columns[k]) +
                                " outside a row of length " + std::to_string(row.size()));
      s += beta[k] * row[columns[k]];
    }
    return s;
  }
};

inline double logistic(double x) noexcept {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Simulation-study kernel: Omega_s = axis_scale * omega(s)^2 * I with
/// omega(s) = beta1 * 2^(-beta2 |s_x|).
struct ParametricKernel {
  double beta1 = 0.1;
  double beta2 = 0.0;
  double axis_scale = 1.0;

  /// Factor (2 df)^(2 / alpha) that makes parameters comparable with the
  /// Brown-Resnick limit as df grows.
  static double brown_resnick_scale(double df, double alpha) { return std::pow(2.0 * df, 2.0 / alpha); }

  [[nodiscard]] double omega(const SiteCoordinate& s) const { return beta1 * std::exp2(-beta2 * std::fabs(s.x)); }
};

/// Covariate-linked kernel: log omega_x, log omega_y and
/// logit((delta + 1) / 2) are linear in the covariates. With `isotropic`
/// set, omega_y = omega_x and delta = 0.
struct CovariateKernel {
  LinearPredictor log_omega_x{"omega_x", {0}, {0.0}};
  LinearPredictor log_omega_y{"omega_y", {0}, {0.0}};
  LinearPredictor logit_delta{"delta", {0}, {0.0}};
  bool isotropic = true;
};

using KernelSpec = std::variant<ParametricKernel, CovariateKernel>;

inline SymMat2 kernel_matrix_at(const KernelSpec& spec, const SiteCoordinate& s, std::span<const double> cov) {
  if (const auto* p = std::get_if<ParametricKernel>(&spec)) {
    if (!(p->beta1 > 0.0)) throw std::domain_error("parametric kernel: beta1 must be positive");
    const double w = p->omega(s);
    const double v = p->axis_scale * w * w;
    return {v, 0.0, v};
  }
  const auto& k = std::get<CovariateKernel>(spec);
  const double wx = std::exp(k.log_omega_x.eval(cov));
  if (k.isotropic) return {wx * wx, 0.0, wx * wx};
  const double wy = std::exp(k.log_omega_y.eval(cov));
  const double delta = 2.0 * logistic(k.logit_delta.eval(cov)) - 1.0;
  return {wx * wx, wx * wy * delta, wy * wy};
}

/// h^T {(O1 + O2) / 2}^{-1} h.
inline double quadratic_form(const SymMat2& o1, const SymMat2& o2, double hx, double hy) {
  const SymMat2 avg = 0.5 * (o1 + o2);
  const double det = avg.det();
  if (!(det > 0.0) || !(avg.xx > 0.0)) throw std::domain_error("quadratic_form: average kernel matrix is singular");
  // inverse of [[a, b], [b, c]] is [[c, -b], [-b, a]] / det
  const double q = (avg.yy * hx * hx - 2.0 * avg.xy * hx * hy + avg.xx * hy * hy) / det;
  return std::max(q, 0.0);
}

/// |O1|^{1/4} |O2|^{1/4} |(O1 + O2) / 2|^{-1/2}; at most 1.
inline double kernel_prefactor(const SymMat2& o1, const SymMat2& o2) {
  const SymMat2 avg = 0.5 * (o1 + o2);
  return std::pow(o1.det() * o2.det(), 0.25) / std::sqrt(avg.det());
}

/// Powered exponential R(r) = exp(-r^alpha), unit range, 0 < alpha <= 2.
class BaseCorrelation {
 public:
  explicit BaseCorrelation(double alpha = 1.0) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw std::domain_error("powered exponential: alpha must lie in (0, 2]");
  }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }

  [[nodiscard]] double operator()(double r) const {
    if (r < 0.0) throw std::domain_error("base correlation: negative distance");
    return std::exp(-std::pow(r, alpha_));
  }

  /// R(sqrt(q)) without the square root.
  [[nodiscard]] double from_squared(double q) const { return std::exp(-std::pow(q, 0.5 * alpha_)); }

 private:
  double alpha_;
};

inline double base_correlation(const BaseCorrelation& base, double r) { return base(r); }

/// Non-stationary correlation between two sites with known kernel matrices.
inline double ns_correlation(const SymMat2& o1, const SymMat2& o2, const BaseCorrelation& base, double hx, double hy) {
  if (hx == 0.0 && hy == 0.0) return kernel_prefactor(o1, o2);
  return kernel_prefactor(o1, o2) * base.from_squared(quadratic_form(o1, o2, hx, hy));
}

inline double ns_correlation(const KernelSpec& spec, const BaseCorrelation& base, const SiteCoordinate& s1,
                             const SiteCoordinate& s2, std::span<const double> cov1, std::span<const double> cov2) {
  const SymMat2 o1 = kernel_matrix_at(spec, s1, cov1);
  const SymMat2 o2 = kernel_matrix_at(spec, s2, cov2);
  return ns_correlation(o1, o2, base, s2.x - s1.x, s2.y - s1.y);
}

struct CorrelationComponent {
  KernelSpec kernel = ParametricKernel{};
  BaseCorrelation base{1.0};
};

/// Correlation of a(s) e1(s) + {1 - a(s)} e2(s) after standardization, with
/// logit a(s) linear in the covariates.
struct SumMixtureSpec {
  CorrelationComponent first;
  CorrelationComponent second;
  LinearPredictor logit_a{"a", {0}, {0.0}};
};

/// Mixture formula given the component correlations and weights at the two
/// sites.
inline double sum_mixture_formula(double rho1, double rho2, double a1, double a2) {
  const double b1 = 1.0 - a1;
  const double b2 = 1.0 - a2;
  const double num = a1 * a2 * rho1 + b1 * b2 * rho2;
  const double den = std::sqrt(a1 * a1 + b1 * b1) * std::sqrt(a2 * a2 + b2 * b2);
  return num / den;
}

inline double mixture_correlation(const SumMixtureSpec& spec, const SiteCoordinate& s1, const SiteCoordinate& s2,
                                  std::span<const double> cov1, std::span<const double> cov2) {
  const double rho1 = ns_correlation(spec.first.kernel, spec.first.base, s1, s2, cov1, cov2);
  const double rho2 = ns_correlation(spec.second.kernel, spec.second.base, s1, s2, cov1, cov2);
  return sum_mixture_formula(rho1, rho2, logistic(spec.logit_a.eval(cov1)), logistic(spec.logit_a.eval(cov2)));
}

using CorrelationModel = std::variant<CorrelationComponent, SumMixtureSpec>;

inline double correlation(const CorrelationModel& model, const SiteCoordinate& s1, const SiteCoordinate& s2,
                          std::span<const double> cov1, std::span<const double> cov2) {
  if (const auto* c = std::get_if<CorrelationComponent>(&model))
    return ns_correlation(c->kernel, c->base, s1, s2, cov1, cov2);
  return mixture_correlation(std::get<SumMixtureSpec>(model), s1, s2, cov1, cov2);
}

/// Per-site quantities of a correlation model resolved once for a site set,
/// so that pair correlations cost O(1) each.
class ResolvedCorrelation {
 public:
  ResolvedCorrelation(const CorrelationModel& model, const SiteSet& sites) : coords_(&sites.coords) {
    const std::size_t d = sites.size();
    if (sites.covariates.sites() != d) throw DimensionMismatch("covariate rows and sites differ in count");
    auto resolve = [&](const CorrelationComponent& c, std::vector<SymMat2>& out) {
      out.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        out[j] = kernel_matrix_at(c.kernel, sites.coords[j], sites.covariates.row(j));
        if (!out[j].positive_definite())
          throw std::domain_error("kernel matrix is not positive definite at site " + std::to_string(j));
      }
    };
    if (const auto* c = std::get_if<CorrelationComponent>(&model)) {
      resolve(*c, omega1_);
      base1_ = c->base;
    } else {
      const auto& m = std::get<SumMixtureSpec>(model);
      resolve(m.first, omega1_);
      resolve(m.second, omega2_);
      base1_ = m.first.base;
      base2_ = m.second.base;
      weights_.resize(d);
      for (std::size_t j = 0; j < d; ++j) weights_[j] = logistic(m.logit_a.eval(sites.covariates.row(j)));
      mixture_ = true;
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return omega1_.size(); }

  [[nodiscard]] double operator()(std::size_t j1, std::size_t j2) const {
    const auto& c = *coords_;
    const double hx = c[j2].x - c[j1].x;
    const double hy = c[j2].y - c[j1].y;
    const double rho1 = ns_correlation(omega1_[j1], omega1_[j2], base1_, hx, hy);
    if (!mixture_) return rho1;
    const double rho2 = ns_correlation(omega2_[j1], omega2_[j2], base2_, hx, hy);
    return sum_mixture_formula(rho1, rho2, weights_[j1], weights_[j2]);
  }

  [[nodiscard]] const SymMat2& kernel(std::size_t j) const { return omega1_[j]; }

 private:
  const std::vector<SiteCoordinate>* coords_;
  std::vector<SymMat2> omega1_, omega2_;
  BaseCorrelation base1_{1.0}, base2_{1.0};
  std::vector<double> weights_;
  bool mixture_ = false;
};

struct CorrelationMatrix {
  DenseMatrix matrix;  // unit diagonal
  DenseMatrix factor;  // lower Cholesky factor of matrix + jitter * I
  double jitter = 0.0;
};

/// D x D correlation matrix with a Cholesky factor. A failing factorization
/// is retried with jitter 1e-10 * I, growing by 10x up to 1e-6.
inline CorrelationMatrix correlation_matrix(const CorrelationModel& model, const SiteSet& sites) {
  const std::size_t d = sites.size();
  if (d == 0) throw std::invalid_argument("correlation_matrix: no sites");
  const ResolvedCorrelation rho(model, sites);
  CorrelationMatrix out;
  out.matrix = DenseMatrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    out.matrix(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) out.matrix(i, j) = out.matrix(j, i) = rho(j, i);
  }
  try {
    out.factor = mathkit::cholesky(out.matrix);
    return out;
  } catch (const mathkit::NotPositiveDefinite&) {
  }
  for (double jitter = 1e-10; jitter <= 1e-6 * (1.0 + 1e-9); jitter *= 10.0) {
    DenseMatrix a = out.matrix;
    for (std::size_t i = 0; i < d; ++i) a(i, i) += jitter;
    try {
      out.factor = mathkit::cholesky(a);
      out.jitter = jitter;
      return out;
    } catch (const mathkit::NotPositiveDefinite&) {
    }
  }
  throw mathkit::NotPositiveDefinite(d, 0.0);
}

}  // namespace nsmaxstab::covmodel
