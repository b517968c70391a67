#pragma once

// Maximum pairwise likelihood fitting, sandwich variance, CLIC / CBIC and
// replicate bootstrap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmaxstab/inference/likelihood.hpp"
#include "nsmaxstab/inference/parameters.hpp"
#include "nsmaxstab/mathkit/dense_matrix.hpp"
#include "nsmaxstab/mathkit/optimize.hpp"
#include "nsmaxstab/mathkit/parallel.hpp"
#include "nsmaxstab/mathkit/random.hpp"
#include "nsmaxstab/mathkit/statistics.hpp"

namespace nsmaxstab::inference {

class IdentifiabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sandwich {
  DenseMatrix J;  // per-replicate sensitivity, -(1/m) Hessian of l
  DenseMatrix K;  // per-replicate variability, covariance of the replicate scores
  DenseMatrix covariance_working;
  DenseMatrix covariance;  // natural scale
  std::vector<double> se;  // natural scale
  double penalty = 0.0;    // tr(J^-1 K)
};

/// Sandwich matrices from per-replicate log-likelihood contributions as a
/// function of the working parameters. `natural_jacobian` is the diagonal of
/// d natural / d working at w_hat (empty = identity).
inline Sandwich sandwich_variance(const mathkit::VectorObjective& per_replicate, const std::vector<double>& w_hat,
                                  const std::vector<double>& natural_jacobian = {}, double step = 1e-4) {
  const std::size_t p = w_hat.size();
  const auto l0 = per_replicate(w_hat);
  const std::size_t m = l0.size();
  if (m == 0) throw std::invalid_argument("sandwich: no replicates");
  const auto md = static_cast<double>(m);
  const mathkit::Objective total = [&](const std::vector<double>& w) {
    const auto v = per_replicate(w);
    mathkit::ExactSum s;
    for (double x : v) s += x;
    return s.value();
  };

  Sandwich out;
  out.J = (-1.0 / md) * mathkit::finite_diff_hessian(total, w_hat, step);
  const DenseMatrix scores = mathkit::finite_diff_jacobian(per_replicate, w_hat, std::vector<double>(p, step));
  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < p; ++a) mean[a] += scores(i, a) / md;
  out.K = DenseMatrix(p, p);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b) out.K(a, b) += (scores(i, a) - mean[a]) * (scores(i, b) - mean[b]) / md;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < a; ++b) out.K(b, a) = out.K(a, b);

  DenseMatrix jinv;
  try {
    jinv = mathkit::inverse(out.J);
  } catch (const mathkit::SingularMatrix&) {
    throw IdentifiabilityError(
        "sensitivity matrix J is singular; some parameters may not be identifiable from these data and pairs");
  }
  const DenseMatrix jk = jinv * out.K;
  out.penalty = jk.trace();
  out.covariance_working = mathkit::symmetrize((1.0 / md) * (jk * jinv));
  out.covariance = out.covariance_working;
  if (!natural_jacobian.empty()) {
    if (natural_jacobian.size() != p) throw covmodel::DimensionMismatch("natural jacobian length differs from p");
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) out.covariance(a, b) *= natural_jacobian[a] * natural_jacobian[b];
  }
  out.se.resize(p);
  for (std::size_t a = 0; a < p; ++a) out.se[a] = std::sqrt(std::max(0.0, out.covariance(a, a)));
  return out;
}

/// -2 l + 2 tr(J^-1 K).
inline double clic(double loglik, const DenseMatrix& J, const DenseMatrix& K) {
  return -2.0 * loglik + 2.0 * (mathkit::inverse(J) * K).trace();
}

/// -2 l + log(m) tr(J^-1 K).
inline double cbic(double loglik, const DenseMatrix& J, const DenseMatrix& K, double m) {
  return -2.0 * loglik + std::log(m) * (mathkit::inverse(J) * K).trace();
}

struct FitOptions {
  std::size_t restarts = 3;     // perturbed starts in addition to the given one
  double restart_spread = 0.5;  // sd of the working-scale perturbation
  std::uint64_t seed = 1;
  mathkit::NelderMeadOptions optimizer{0.3, 1e-6, 1e-10, 4000};
  double fd_step = 1e-4;
  bool sandwich = true;
  std::size_t workers = 0;
};

struct FitResult {
  ParameterVector estimate;
  std::vector<std::string> names;  // free parameters, in covariance order
  double loglik = -std::numeric_limits<double>::infinity();
  std::size_t replicates = 0;
  std::vector<PairIndex> pairs;
  bool has_sandwich = false;
  Sandwich sandwich;
  double clic = std::numeric_limits<double>::quiet_NaN();
  double cbic = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::size_t runs = 0;
  std::size_t runs_converged = 0;
  bool converged = false;
  std::size_t nonpositive_terms = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double bounding_extent(const covmodel::SiteSet& sites) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : sites.coords) {
    x0 = std::min(x0, c.x);
    x1 = std::max(x1, c.x);
    y0 = std::min(y0, c.y);
    y1 = std::max(y1, c.y);
  }
  const double e = std::max(x1 - x0, y1 - y0);
  return e > 0.0 ? e : 1.0;
}

/// l at working point w, or -inf when the parameters give an invalid model.
inline double safe_loglik(const PairwiseLikelihood& lik, const ModelTemplate& tmpl, const ParameterVector& base,
                          const std::vector<double>& w, LoglikDiagnostics* diag = nullptr) {
  try {
    return lik(tmpl.build(base.with_working(w), lik.data().sites.covariates), diag);
  } catch (const std::domain_error&) {
  } catch (const LikelihoodError&) {
  }
  return -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Stationary isotropic start: range intercept chosen on a grid of
/// {0.05, ..., 0.5} times the domain extent, everything else at the
/// template defaults.
/// Range parameters from a coarse grid over the domain extent; everything
/// else from `base` (template defaults when empty). Fixed values are kept.
inline ParameterVector default_start(const ModelTemplate& tmpl, const Dataset& data,
                                     const std::vector<PairIndex>& pairs, std::size_t workers = 0,
                                     const std::optional<ParameterVector>& base = std::nullopt) {
  ParameterVector psi = base ? *base : tmpl.default_parameters();
  auto set_free = [](ParameterVector& p, const char* name, double v) {
    if (!p.at(name).fixed) p.set(name, v);
  };
  const PairwiseLikelihood lik(data, pairs, workers);
  const double extent = detail::bounding_extent(data.sites);
  double best = -std::numeric_limits<double>::infinity();
  double best_range = 0.1 * extent;
  for (int k = 1; k <= 10; ++k) {
    double r = 0.05 * k * extent;
    ParameterVector trial = psi;
    if (tmpl.kernel == KernelKind::parametric) {
      // the grid is over the effective range, so undo the axis scaling
      if (tmpl.brown_resnick_scaling)
        r /= std::sqrt(covmodel::ParametricKernel::brown_resnick_scale(psi["df"], psi["alpha"]));
      set_free(trial, "beta1", r);
    } else {
      set_free(trial, "omega_x:intercept", std::log(r));
      if (!tmpl.isotropic) set_free(trial, "omega_y:intercept", std::log(r));
    }
    double v = -std::numeric_limits<double>::infinity();
    try {
      v = lik(tmpl.build(trial, data.sites.covariates));
    } catch (const std::domain_error&) {
    } catch (const LikelihoodError&) {
    }
    if (v > best) {
      best = v;
      best_range = r;
    }
  }
  if (tmpl.kernel == KernelKind::parametric) {
    set_free(psi, "beta1", best_range);
  } else {
    set_free(psi, "omega_x:intercept", std::log(best_range));
    if (!tmpl.isotropic) set_free(psi, "omega_y:intercept", std::log(best_range));
  }
  return psi;
}

/// Nelder-Mead on the working scale from `start` and perturbed copies of it,
/// keeping the best optimum.
inline FitResult fit(const Dataset& data, const ModelTemplate& tmpl, const ParameterVector& start,
                     const PairSelection& policy, const FitOptions& options = {}) {
  FitResult res;
  res.pairs = select_pairs(policy, data.sites);
  res.replicates = data.replicates();
  const PairwiseLikelihood lik(data, res.pairs, options.workers);
  res.names = start.free_names();

  LoglikDiagnostics d0;
  const auto w0 = start.working();
  const double l0 = detail::safe_loglik(lik, tmpl, start, w0, &d0);
  const double scale = static_cast<double>(std::max<std::size_t>(1, d0.terms));
  const mathkit::Objective objective = [&](const std::vector<double>& w) {
    return -detail::safe_loglik(lik, tmpl, start, w) / scale;
  };
  if (!std::isfinite(l0)) res.warnings.push_back("pairwise likelihood is not finite at the starting values");

  std::vector<std::vector<double>> starts{w0};
  mathkit::RngStream rng(options.seed, 0);
  for (std::size_t r = 0; r < options.restarts; ++r) {
    auto w = w0;
    for (double& x : w) x += options.restart_spread * rng.normal();
    starts.push_back(std::move(w));
  }

  mathkit::OptimResult best;
  best.fmin = std::numeric_limits<double>::infinity();
  best.argmin = w0;
  for (const auto& s : starts) {
    auto r = mathkit::nelder_mead(objective, s, options.optimizer);
    ++res.runs;
    res.iterations += r.iterations;
    res.evaluations += r.evaluations;
    if (std::isfinite(r.fmin)) {
      // a second pass from the optimum guards against early simplex collapse
      auto again = mathkit::nelder_mead(objective, r.argmin, options.optimizer);
      res.iterations += again.iterations;
      res.evaluations += again.evaluations;
      if (again.fmin <= r.fmin) {
        again.converged = again.converged || r.converged;
        r = std::move(again);
      }
    }
    if (r.converged) ++res.runs_converged;
    if (r.fmin < best.fmin) best = std::move(r);
  }

  res.converged = best.converged && std::isfinite(best.fmin);
  if (res.runs_converged == 0) res.warnings.push_back("no optimizer run converged; the returned estimate is the best point found");
  res.estimate = start.with_working(best.argmin);
  LoglikDiagnostics diag;
  res.loglik = detail::safe_loglik(lik, tmpl, start, best.argmin, &diag);
  res.nonpositive_terms = diag.nonpositive;
  if (!std::isfinite(res.loglik)) {
    res.warnings.push_back("pairwise likelihood is not finite at the estimate");
    return res;
  }

  if (options.sandwich && !best.argmin.empty()) {
    const mathkit::VectorObjective per = [&](const std::vector<double>& w) {
      return lik.per_replicate(tmpl.build(start.with_working(w), data.sites.covariates));
    };
    try {
      res.sandwich = sandwich_variance(per, best.argmin, res.estimate.natural_jacobian(), options.fd_step);
      res.has_sandwich = true;
      const double pen = res.sandwich.penalty;
      res.clic = -2.0 * res.loglik + 2.0 * pen;
      res.cbic = -2.0 * res.loglik + std::log(static_cast<double>(res.replicates)) * pen;
    } catch (const IdentifiabilityError& e) {
      res.warnings.push_back(e.what());
    } catch (const mathkit::NonFiniteObjective& e) {
      res.warnings.push_back(std::string("sandwich skipped: ") + e.what());
    } catch (const std::domain_error& e) {
      res.warnings.push_back(std::string("sandwich skipped: ") + e.what());
    }
  }
  return res;
}

struct BootstrapOptions {
  std::size_t resamples = 200;
  std::uint64_t seed = 1;
  std::size_t block_length = 1;  // > 1 resamples runs of consecutive replicates
  double level = 0.95;
  double max_failure_fraction = 0.2;
  FitOptions fit{.restarts = 0, .sandwich = false, .workers = 1};
  std::size_t workers = 0;
};

struct BootstrapResult {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;
  DenseMatrix estimates;  // successful resamples x free parameters, natural scale
  std::size_t failures = 0;
};

class BootstrapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row indices of one (block) bootstrap resample of m replicates.
inline std::vector<std::size_t> bootstrap_rows(std::size_t m, std::size_t block, mathkit::RngStream& rng) {
  block = std::clamp<std::size_t>(block, 1, m);
  std::vector<std::size_t> rows;
  rows.reserve(m + block);
  const std::size_t starts = m - block + 1;
  while (rows.size() < m) {
    const auto s = std::min(starts - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(starts)));
    for (std::size_t k = 0; k < block && rows.size() < m; ++k) rows.push_back(s + k);
  }
  return rows;
}

/// Percentile intervals from refits on resampled replicates. Resample b uses
/// stream (seed, b), so results do not depend on the worker count.
inline BootstrapResult bootstrap_ci(const Dataset& data, const ModelTemplate& tmpl, const ParameterVector& start,
                                    const PairSelection& policy, const BootstrapOptions& options = {}) {
  if (options.resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  const std::size_t p = start.free_count();
  std::vector<std::vector<double>> est(options.resamples);
  std::vector<unsigned char> ok(options.resamples, 0);
  mathkit::parallel_for(
      options.resamples,
      [&](std::size_t b) {
        mathkit::RngStream rng(options.seed, b);
        const auto rows = bootstrap_rows(data.replicates(), options.block_length, rng);
        try {
          const Dataset resampled = data.subset_replicates(rows);
          const auto f = fit(resampled, tmpl, start, policy, options.fit);
          if (!std::isfinite(f.loglik)) return;
          std::vector<double> v;
          for (const auto& n : f.names) v.push_back(f.estimate[n]);
          est[b] = std::move(v);
          ok[b] = 1;
        } catch (const std::exception&) {
        }
      },
      options.workers == 0 ? mathkit::worker_count() : options.workers);

  BootstrapResult out;
  out.names = start.free_names();
  std::vector<std::size_t> good;
  for (std::size_t b = 0; b < options.resamples; ++b) {
    if (ok[b])
      good.push_back(b);
    else
      ++out.failures;
  }
  if (static_cast<double>(out.failures) > options.max_failure_fraction * static_cast<double>(options.resamples))
    throw BootstrapError("bootstrap: " + std::to_string(out.failures) + " of " + std::to_string(options.resamples) +
                         " refits failed");
  out.estimates = DenseMatrix(good.size(), p);
  for (std::size_t r = 0; r < good.size(); ++r)
    for (std::size_t a = 0; a < p; ++a) out.estimates(r, a) = est[good[r]][a];
  const double tail = 0.5 * (1.0 - options.level);
  for (std::size_t a = 0; a < p; ++a) {
    std::vector<double> col(good.size());
    for (std::size_t r = 0; r < good.size(); ++r) col[r] = out.estimates(r, a);
    out.lower.push_back(mathkit::quantile(col, tail));
    out.upper.push_back(mathkit::quantile(std::move(col), 1.0 - tail));
  }
  return out;
}

}  // namespace nsmaxstab::inference
