#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nsmaxstab/mathkit/dense_matrix.hpp"

namespace nsmaxstab::mathkit {

using Objective = std::function<double(const std::vector<double>&)>;
using VectorObjective = std::function<std::vector<double>(const std::vector<double>&)>;

struct NelderMeadOptions {
  double initial_step = 0.1;  // absolute, per coordinate, plus 5% of |x0_i|
  double xtol = 1e-6;         // simplex diameter (max norm)
  double ftol = 1e-8;         // spread of f over the simplex
  std::size_t max_iterations = 5000;
};

struct OptimResult {
  std::vector<double> argmin;
  double fmin = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

class NonFiniteObjective : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_point(const std::vector<double>& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace detail

/// Derivative-free minimization with the standard reflection / expansion /
/// contraction / shrink coefficients (1, 2, 1/2, 1/2). Non-finite objective
/// values away from x0 are treated as +inf so the simplex moves off them.
inline OptimResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                               const NelderMeadOptions& options = {}) {
  const std::size_t n = x0.size();
  OptimResult result;
  const double f0 = objective(x0);
  result.evaluations = 1;
  if (std::isnan(f0)) throw NonFiniteObjective("nelder_mead: objective is NaN at the starting point " +
                                               detail::format_point(x0));
  if (n == 0) {
    result.argmin = x0;
    result.fmin = f0;
    result.converged = true;
    return result;
  }

  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = std::isfinite(f0) ? f0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += options.initial_step + 0.05 * std::fabs(x0[i]);
    fv[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  auto converged = [&]() {
    double fspread = fv[order[n]] - fv[order[0]];
    if (!std::isfinite(fspread)) return false;
    double diam = 0.0;
    const auto& best = simplex[order[0]];
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) diam = std::max(diam, std::fabs(simplex[order[i]][j] - best[j]));
    return fspread <= options.ftol && diam <= options.xtol;
  };

  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    if (converged()) {
      result.converged = true;
      break;
    }
    const std::size_t worst = order[n];
    const std::size_t second = order[n - 1];
    const std::size_t best = order[0];

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[order[i]][j];
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    const double fr = eval(xr);

    if (fr < fv[best]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    bool outside = fr < fv[worst];
    for (std::size_t j = 0; j < n; ++j) {
      const double target = outside ? xr[j] : simplex[worst][j];
      xc[j] = centroid[j] + 0.5 * (target - centroid[j]);
    }
    const double fc = eval(xc);
    if (outside ? fc <= fr : fc < fv[worst]) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 1; i <= n; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t j = 0; j < n; ++j) v[j] = simplex[best][j] + 0.5 * (v[j] - simplex[best][j]);
      fv[order[i]] = eval(v);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  result.argmin = simplex[best];
  result.fmin = fv[best];
  return result;
}

/// Default central-difference step: 1e-5 * max(1, |x_i|).
inline std::vector<double> default_steps(const std::vector<double>& x, double relative = 1e-5) {
  std::vector<double> h(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) h[i] = relative * std::max(1.0, std::fabs(x[i]));
  return h;
}

namespace detail {

inline double checked_eval(const Objective& f, const std::vector<double>& x) {
  const double v = f(x);
  if (!std::isfinite(v))
    throw NonFiniteObjective("finite difference: objective is not finite at " + format_point(x));
  return v;
}

inline std::vector<double> checked_eval(const VectorObjective& f, const std::vector<double>& x) {
  auto v = f(x);
  for (double e : v)
    if (!std::isfinite(e))
      throw NonFiniteObjective("finite difference: objective is not finite at " + format_point(x));
  return v;
}

}  // namespace detail

inline std::vector<double> finite_diff_gradient(const Objective& f, const std::vector<double>& x,
                                                const std::vector<double>& steps) {
  std::vector<double> g(x.size());
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + steps[i];
    const double fp = detail::checked_eval(f, xp);
    xp[i] = x[i] - steps[i];
    const double fm = detail::checked_eval(f, xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * steps[i]);
  }
  return g;
}

inline std::vector<double> finite_diff_gradient(const Objective& f, const std::vector<double>& x) {
  return finite_diff_gradient(f, x, default_steps(x));
}

inline std::vector<double> finite_diff_gradient(const Objective& f, const std::vector<double>& x, double step) {
  return finite_diff_gradient(f, x, std::vector<double>(x.size(), step));
}

/// Jacobian of a vector-valued function: rows are outputs, columns are
/// coordinates of x.
inline DenseMatrix finite_diff_jacobian(const VectorObjective& f, const std::vector<double>& x,
                                        const std::vector<double>& steps) {
  std::vector<double> xp = x;
  DenseMatrix jac;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + steps[i];
    const auto fp = detail::checked_eval(f, xp);
    xp[i] = x[i] - steps[i];
    const auto fm = detail::checked_eval(f, xp);
    xp[i] = x[i];
    if (i == 0) jac = DenseMatrix(fp.size(), x.size());
    for (std::size_t r = 0; r < fp.size(); ++r) jac(r, i) = (fp[r] - fm[r]) / (2.0 * steps[i]);
  }
  return jac;
}

/// Central-difference Hessian, symmetrized as (H + H^T) / 2.
inline DenseMatrix finite_diff_hessian(const Objective& f, const std::vector<double>& x,
                                       const std::vector<double>& steps) {
  const std::size_t n = x.size();
  DenseMatrix h(n, n);
  const double f0 = detail::checked_eval(f, x);
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < n; ++i) {
    xp[i] = x[i] + steps[i];
    const double fp = detail::checked_eval(f, xp);
    xp[i] = x[i] - steps[i];
    const double fm = detail::checked_eval(f, xp);
    xp[i] = x[i];
    h(i, i) = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      auto at = [&](double si, double sj) {
        xp[i] = x[i] + si * steps[i];
        xp[j] = x[j] + sj * steps[j];
        const double v = detail::checked_eval(f, xp);
        xp[i] = x[i];
        xp[j] = x[j];
        return v;
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * steps[i] * steps[j]);
      h(i, j) = v;
      h(j, i) = v;
    }
  return symmetrize(h);
}

inline DenseMatrix finite_diff_hessian(const Objective& f, const std::vector<double>& x) {
  return finite_diff_hessian(f, x, default_steps(x));
}

inline DenseMatrix finite_diff_hessian(const Objective& f, const std::vector<double>& x, double step) {
  return finite_diff_hessian(f, x, std::vector<double>(x.size(), step));
}

}  // namespace nsmaxstab::mathkit
