#pragma once

// Random fields: Gaussian fields with non-stationary correlation, extremal-t
// max-stable fields and Smith-Stephenson storm fields.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nsmaxstab/covmodel.hpp"
#include "nsmaxstab/extremal.hpp"
#include "nsmaxstab/mathkit/dense_matrix.hpp"
#include "nsmaxstab/mathkit/parallel.hpp"
#include "nsmaxstab/mathkit/random.hpp"

namespace nsmaxstab::simulate {

using covmodel::SiteSet;
using mathkit::DenseMatrix;
using mathkit::RngStream;

enum class Method {
  exact,       // extremal functions; no truncation
  truncation,  // spectral series cut by the slack / cap rule
};

struct SimulationConfig {
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::size_t max_spectral = 10000;  // M_max
  double slack = 50.0;               // kappa
  Method method = Method::exact;
  std::size_t workers = mathkit::worker_count();
  std::size_t first_stream = 0;  // replicate r uses stream first_stream + r; lets callers run in batches

  void validate() const {
    if (replicates < 1) throw std::invalid_argument("simulation: replicates must be >= 1");
    if (max_spectral < 1) throw std::invalid_argument("simulation: max_spectral must be >= 1");
    if (!(slack > 0.0)) throw std::invalid_argument("simulation: slack must be positive");
  }
};

struct Provenance {
  std::string model_hash;
  std::uint64_t seed = 0;
  std::string method;
  std::size_t truncated = 0;  // replicates that hit the spectral cap
  double jitter = 0.0;
  std::vector<std::string> warnings;
};

/// m x D realizations on the unit Frechet scale.
struct FieldRealizations {
  DenseMatrix values;
  std::vector<std::string> site_ids;
  Provenance provenance;

  [[nodiscard]] std::size_t replicates() const noexcept { return values.rows(); }
  [[nodiscard]] std::size_t sites() const noexcept { return values.cols(); }
};

/// Draws zero-mean unit-variance Gaussian vectors with the correlation of a
/// covariance model. Sum-mixtures are built as the standardized combination
/// a e1 + (1 - a) e2 of two independent component fields.
class GaussianSampler {
 public:
  GaussianSampler(const covmodel::CorrelationModel& model, const SiteSet& sites) : d_(sites.size()) {
    if (const auto* c = std::get_if<covmodel::CorrelationComponent>(&model)) {
      auto cm = covmodel::correlation_matrix(*c, sites);
      l1_ = std::move(cm.factor);
      jitter_ = cm.jitter;
      corr_ = std::move(cm.matrix);
      return;
    }
    const auto& m = std::get<covmodel::SumMixtureSpec>(model);
    auto c1 = covmodel::correlation_matrix(m.first, sites);
    auto c2 = covmodel::correlation_matrix(m.second, sites);
    l1_ = std::move(c1.factor);
    l2_ = std::move(c2.factor);
    jitter_ = std::max(c1.jitter, c2.jitter);
    a_.resize(d_);
    b_.resize(d_);
    for (std::size_t j = 0; j < d_; ++j) {
      const double a = covmodel::logistic(m.logit_a.eval(sites.covariates.row(j)));
      const double norm = std::sqrt(a * a + (1.0 - a) * (1.0 - a));
      a_[j] = a / norm;
      b_[j] = (1.0 - a) / norm;
    }
    const covmodel::ResolvedCorrelation rho(model, sites);
    corr_ = DenseMatrix(d_, d_);
    for (std::size_t i = 0; i < d_; ++i) {
      corr_(i, i) = 1.0;
      for (std::size_t j = 0; j < i; ++j) corr_(i, j) = corr_(j, i) = rho(j, i);
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return d_; }
  [[nodiscard]] double jitter() const noexcept { return jitter_; }
  /// Correlation of the drawn vectors (before jitter).
  [[nodiscard]] const DenseMatrix& correlation() const noexcept { return corr_; }

  void draw(RngStream& rng, std::span<double> out) const {
    std::vector<double> n(d_);
    lower_times(l1_, rng, n, out);
    if (a_.empty()) return;
    std::vector<double> e2(d_);
    lower_times(l2_, rng, n, e2);
    for (std::size_t j = 0; j < d_; ++j) out[j] = a_[j] * out[j] + b_[j] * e2[j];
  }

 private:
  void lower_times(const DenseMatrix& l, RngStream& rng, std::vector<double>& n, std::span<double> out) const {
    for (auto& v : n) v = rng.normal();
    for (std::size_t i = 0; i < d_; ++i) {
      const auto row = l.row(i);
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += row[k] * n[k];
      out[i] = s;
    }
  }

  std::size_t d_;
  DenseMatrix l1_, l2_, corr_;
  std::vector<double> a_, b_;
  double jitter_ = 0.0;
};

/// m x D matrix of Gaussian vectors; replicate r uses stream r of `seed`.
inline DenseMatrix simulate_gaussian(const SiteSet& sites, const covmodel::CorrelationModel& correlation,
                                     std::size_t m, std::uint64_t seed, std::size_t workers = mathkit::worker_count()) {
  sites.validate();
  const GaussianSampler sampler(correlation, sites);
  DenseMatrix out(m, sites.size());
  mathkit::parallel_for(
      m,
      [&](std::size_t r) {
        RngStream rng(seed, r);
        sampler.draw(rng, out.row(r));
      },
      workers);
  return out;
}

inline const char* method_name(Method m) { return m == Method::exact ? "exact" : "truncation"; }

namespace detail {

/// Groups sites whose correlation rounds to one; they are simulated once and
/// copied so perfect dependence gives equal values.
struct SiteMerge {
  std::vector<std::size_t> representative_of;  // site -> index into reps
  std::vector<std::size_t> reps;               // representative site ids
};

inline constexpr double kMergeThreshold = 1.0 - 2.0 * extremal::kCorrelationClamp;

inline SiteMerge merge_sites(const DenseMatrix& corr) {
  const std::size_t d = corr.rows();
  std::vector<std::size_t> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (corr(i, j) >= kMergeThreshold) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  SiteMerge m;
  m.representative_of.assign(d, 0);
  std::vector<std::size_t> slot(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t root = find(i);
    if (slot[root] == d) {
      slot[root] = m.reps.size();
      m.reps.push_back(root);
    }
    m.representative_of[i] = slot[root];
  }
  return m;
}

inline SiteSet subset_sites(const SiteSet& sites, std::span<const std::size_t> rows) {
  SiteSet s;
  for (std::size_t r : rows) {
    s.ids.push_back(sites.ids[r]);
    s.coords.push_back(sites.coords[r]);
  }
  s.covariates = sites.covariates.subset(rows);
  return s;
}

/// One extremal-t component on a site set, ready for replicate draws.
class ExtremalTSimulator {
 public:
  ExtremalTSimulator(const extremal::ExtremalT& model, const SiteSet& sites, const SimulationConfig& config)
      : df_(model.df), config_(config), d_full_(sites.size()) {
    if (!(df_ > 0.0)) throw std::domain_error("extremal-t: df must be positive");
    // merge detection on the full site set, simulation on representatives
    const covmodel::ResolvedCorrelation rho(model.correlation, sites);
    DenseMatrix corr(d_full_, d_full_);
    for (std::size_t i = 0; i < d_full_; ++i) {
      corr(i, i) = 1.0;
      for (std::size_t j = 0; j < i; ++j) corr(i, j) = corr(j, i) = rho(j, i);
    }
    merge_ = merge_sites(corr);
    reduced_ = subset_sites(sites, merge_.reps);
    sampler_.emplace(model.correlation, reduced_);
    c_df_ = extremal::extremal_t_constant(df_);
  }

  [[nodiscard]] double jitter() const { return sampler_->jitter(); }

  /// Fills `out` (length D) with one replicate; returns false if the
  /// spectral cap was hit.
  bool draw(RngStream& rng, std::span<double> out) const {
    const std::size_t d = reduced_.size();
    std::vector<double> z(d, 0.0);
    const bool ok = config_.method == Method::exact ? draw_exact(rng, z) : draw_truncated(rng, z);
    for (std::size_t i = 0; i < d_full_; ++i) out[i] = z[merge_.representative_of[i]];
    return ok;
  }

 private:
  bool draw_truncated(RngStream& rng, std::vector<double>& z) const {
    const std::size_t d = z.size();
    std::vector<double> eps(d);
    double gamma = 0.0;
    for (std::size_t i = 0; i < config_.max_spectral; ++i) {
      gamma += rng.exponential();
      const double p = 1.0 / gamma;
      const double zmin = *std::min_element(z.begin(), z.end());
      if (p * config_.slack < zmin) return true;
      sampler_->draw(rng, eps);
      for (std::size_t k = 0; k < d; ++k)
        if (eps[k] > 0.0) z[k] = std::max(z[k], p * c_df_ * std::pow(eps[k], df_));
    }
    return false;
  }

  // Extremal functions: for site j the spectral profile normalized at j is
  // max(0, T)^df, T Student with df + 1 degrees of freedom, location
  // rho(., j) and scale (R - rho rho^T) / (df + 1).
  bool draw_exact(RngStream& rng, std::vector<double>& z) const {
    const std::size_t d = z.size();
    const DenseMatrix& r = sampler_->correlation();
    std::vector<double> eps(d), y(d);
    std::size_t draws = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double inv_zeta = rng.exponential();
      while (1.0 / inv_zeta > z[j]) {
        if (++draws > config_.max_spectral) return false;
        const double zeta = 1.0 / inv_zeta;
        sampler_->draw(rng, eps);
        const double scale = 1.0 / std::sqrt(rng.chi_squared(df_ + 1.0));
        bool accept = true;
        for (std::size_t k = 0; k < d; ++k) {
          if (k == j) {
            y[k] = 1.0;
          } else {
            const double t = r(k, j) + (eps[k] - r(k, j) * eps[j]) * scale;
            y[k] = t > 0.0 ? std::pow(t, df_) : 0.0;
          }
          if (k < j && zeta * y[k] >= z[k]) {
            accept = false;
            break;
          }
        }
        if (accept)
          for (std::size_t k = 0; k < d; ++k) z[k] = std::max(z[k], zeta * y[k]);
        inv_zeta += rng.exponential();
      }
    }
    return true;
  }

  double df_;
  double c_df_ = 1.0;
  SimulationConfig config_;
  std::size_t d_full_;
  SiteMerge merge_;
  SiteSet reduced_;
  std::optional<GaussianSampler> sampler_;
};

inline void finish_provenance(Provenance& p, const SimulationConfig& config, std::size_t truncated) {
  p.seed = config.seed;
  p.method = method_name(config.method);
  p.truncated += truncated;
  if (p.truncated * 100 > config.replicates)
    p.warnings.push_back("spectral cap reached on " + std::to_string(p.truncated) + " of " +
                         std::to_string(config.replicates) + " replicates");
}

}  // namespace detail

/// Extremal-t (plain, sum-mixture or max-mixture) realizations. Replicate r
/// uses stream r; max-mixture components use derived seeds.
inline FieldRealizations simulate_extremal_t(const SiteSet& sites, const extremal::DependenceModel& model,
                                             const SimulationConfig& config) {
  config.validate();
  sites.validate();
  const std::size_t m = config.replicates, d = sites.size();
  FieldRealizations out;
  out.values = DenseMatrix(m, d);
  out.site_ids = sites.ids;

  auto run = [&](const extremal::ExtremalT& e, std::uint64_t seed, DenseMatrix& target) {
    const detail::ExtremalTSimulator sim(e, sites, config);
    std::vector<unsigned char> capped(m, 0);
    mathkit::parallel_for(
        m,
        [&](std::size_t r) {
          RngStream rng(seed, config.first_stream + r);
          capped[r] = sim.draw(rng, target.row(r)) ? 0 : 1;
        },
        config.workers);
    out.provenance.jitter = std::max(out.provenance.jitter, sim.jitter());
    return static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1));
  };

  std::size_t truncated = 0;
  if (const auto* e = std::get_if<extremal::ExtremalT>(&model)) {
    truncated = run(*e, config.seed, out.values);
  } else {
    const auto& mm = std::get<extremal::MaxMixture>(model);
    DenseMatrix z2(m, d);
    truncated = run(mm.first, mathkit::derive_seed(config.seed, 1), out.values);
    truncated += run(mm.second, mathkit::derive_seed(config.seed, 2), z2);
    for (std::size_t j = 0; j < d; ++j) {
      const double a = covmodel::logistic(mm.logit_a.eval(sites.covariates.row(j)));
      for (std::size_t r = 0; r < m; ++r) out.values(r, j) = std::max(a * out.values(r, j), (1.0 - a) * z2(r, j));
    }
  }
  detail::finish_provenance(out.provenance, config, truncated);
  return out;
}

struct StormWindow {
  double padding = -1.0;  // < 0: 3 x the largest local standard deviation
  std::size_t quadrature = 240;  // points per axis for the margin normalization
};

/// Smith-Stephenson storm process Z(s) = max_i P_i phi(s - U_i; Omega_{U_i})
/// with storm centres uniform on the padded bounding box of the sites.
/// Each site is divided by c(s) = int phi(s - u; Omega_u) du over the window
/// so margins are exactly unit Frechet. Kernels at storm centres use the
/// covariates of the nearest site.
inline FieldRealizations simulate_smith_stephenson(const SiteSet& sites, const covmodel::KernelSpec& kernel,
                                                   const StormWindow& window, const SimulationConfig& config) {
  config.validate();
  sites.validate();
  const std::size_t d = sites.size(), m = config.replicates;
  FieldRealizations out;
  out.values = DenseMatrix(m, d);
  out.site_ids = sites.ids;

  auto nearest = [&](double x, double y) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      const double dd = std::hypot(sites.coords[j].x - x, sites.coords[j].y - y);
      if (dd < bd) {
        bd = dd;
        best = j;
      }
    }
    return best;
  };
  auto omega_at = [&](double x, double y) {
    return covmodel::kernel_matrix_at(kernel, {x, y}, sites.covariates.row(nearest(x, y)));
  };
  auto max_sd = [](const covmodel::SymMat2& o) {
    const double tr = 0.5 * (o.xx + o.yy);
    return std::sqrt(tr + std::sqrt(std::max(0.0, tr * tr - o.det())));
  };

  double xmin = sites.coords[0].x, xmax = xmin, ymin = sites.coords[0].y, ymax = ymin;
  double sd = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    xmin = std::min(xmin, sites.coords[j].x);
    xmax = std::max(xmax, sites.coords[j].x);
    ymin = std::min(ymin, sites.coords[j].y);
    ymax = std::max(ymax, sites.coords[j].y);
    sd = std::max(sd, max_sd(covmodel::kernel_matrix_at(kernel, sites.coords[j], sites.covariates.row(j))));
  }
  const double pad = window.padding < 0.0 ? 3.0 * sd : window.padding;
  xmin -= pad;
  xmax += pad;
  ymin -= pad;
  ymax += pad;
  const double area = (xmax - xmin) * (ymax - ymin);

  // kernel on a quadrature grid over the window: used for c(s), the sup
  // bound, and the padding check
  const std::size_t nq = window.quadrature;
  const double hx = (xmax - xmin) / nq, hy = (ymax - ymin) / nq;
  std::vector<covmodel::SymMat2> grid(nq * nq);
  double sup_w = 0.0, sd_window = 0.0;
  for (std::size_t iy = 0; iy < nq; ++iy)
    for (std::size_t ix = 0; ix < nq; ++ix) {
      const auto o = omega_at(xmin + (ix + 0.5) * hx, ymin + (iy + 0.5) * hy);
      grid[iy * nq + ix] = o;
      sup_w = std::max(sup_w, 1.0 / (2.0 * std::numbers::pi * std::sqrt(o.det())));
      sd_window = std::max(sd_window, max_sd(o));
    }
  if (pad < 3.0 * sd_window)
    out.provenance.warnings.push_back("storm window padding " + std::to_string(pad) +
                                      " is below 3 local standard deviations (" + std::to_string(3.0 * sd_window) +
                                      ")");

  auto phi = [](double dx, double dy, const covmodel::SymMat2& o) {
    const double det = o.det();
    const double q = (o.yy * dx * dx - 2.0 * o.xy * dx * dy + o.xx * dy * dy) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  };
  std::vector<double> norm(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t iy = 0; iy < nq; ++iy)
      for (std::size_t ix = 0; ix < nq; ++ix)
        s += phi(sites.coords[j].x - (xmin + (ix + 0.5) * hx), sites.coords[j].y - (ymin + (iy + 0.5) * hy),
                 grid[iy * nq + ix]);
    norm[j] = s * hx * hy;
  }

  std::vector<unsigned char> capped(m, 0);
  mathkit::parallel_for(
      m,
      [&](std::size_t r) {
        RngStream rng(config.seed, config.first_stream + r);
        std::vector<double> z(d, 0.0);
        double gamma = 0.0;
        bool done = false;
        for (std::size_t i = 0; i < config.max_spectral && !done; ++i) {
          gamma += rng.exponential();
          const double p = area / gamma;
          double zmin = std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < d; ++j) zmin = std::min(zmin, z[j]);
          if (p * sup_w < zmin) {
            done = true;
            break;
          }
          const double ux = xmin + (xmax - xmin) * rng.uniform();
          const double uy = ymin + (ymax - ymin) * rng.uniform();
          const auto o = omega_at(ux, uy);
          for (std::size_t j = 0; j < d; ++j)
            z[j] = std::max(z[j], p * phi(sites.coords[j].x - ux, sites.coords[j].y - uy, o));
        }
        if (!done) capped[r] = 1;
        for (std::size_t j = 0; j < d; ++j) out.values(r, j) = z[j] / norm[j];
      },
      config.workers);
  detail::finish_provenance(out.provenance, config,
                            static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1)));
  return out;
}

/// exp(-1 / z) elementwise: unit Frechet values to quantile probabilities.
inline DenseMatrix quantile_scale(const DenseMatrix& z) {
  DenseMatrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) {
      if (!(z(i, j) > 0.0)) throw std::domain_error("quantile_scale: entries must be positive");
      out(i, j) = std::exp(-1.0 / z(i, j));
    }
  return out;
}

}  // namespace nsmaxstab::simulate
