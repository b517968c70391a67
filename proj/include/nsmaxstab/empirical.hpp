#pragma once

// Rank-based pairwise extremal coefficients and fitted-vs-empirical
// summaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmaxstab/extremal.hpp"
#include "nsmaxstab/inference/likelihood.hpp"
#include "nsmaxstab/mathkit/parallel.hpp"

namespace nsmaxstab::empirical {

using inference::Dataset;
using inference::PairIndex;

enum class Estimator { madogram, cfg };

inline const char* estimator_name(Estimator e) { return e == Estimator::madogram ? "madogram" : "cfg"; }

inline constexpr std::size_t kMinJointObservations = 10;

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ranks scaled to (0, 1) as rank / (n + 1), ties averaged.
inline std::vector<double> pseudo_observations(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) u[idx[k]] = rank / static_cast<double>(n + 1);
    i = j + 1;
  }
  return u;
}

inline double clamp_theta(double t) { return std::clamp(t, 1.0, 2.0); }

/// F-madogram: nu = (1 / 2n) sum |F1 - F2|, theta = (1 + 2 nu) / (1 - 2 nu).
inline double theta_madogram(const std::vector<double>& x1, const std::vector<double>& x2) {
  if (x1.size() != x2.size()) throw covmodel::DimensionMismatch("madogram: columns differ in length");
  if (x1.size() < kMinJointObservations) throw InsufficientData("madogram: fewer than 10 joint observations");
  const auto u = pseudo_observations(x1), v = pseudo_observations(x2);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::fabs(u[i] - v[i]);
  const double nu = s / (2.0 * static_cast<double>(u.size()));
  return clamp_theta((1.0 + 2.0 * nu) / (1.0 - 2.0 * nu));
}

/// Endpoint-corrected Caperaa-Fougeres-Genest estimate of the Pickands
/// function at w, from rank-based exponential margins.
inline double pickands_cfg(const std::vector<double>& x1, const std::vector<double>& x2, double w) {
  if (x1.size() != x2.size()) throw covmodel::DimensionMismatch("cfg: columns differ in length");
  if (x1.size() < kMinJointObservations) throw InsufficientData("cfg: fewer than 10 joint observations");
  if (!(w > 0.0 && w < 1.0)) return 1.0;
  const auto u = pseudo_observations(x1), v = pseudo_observations(x2);
  const auto n = static_cast<double>(u.size());
  double sum_xi = 0.0, sum_s = 0.0, sum_t = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = -std::log(u[i]);
    const double t = -std::log(v[i]);
    sum_xi += std::log(std::min(s / (1.0 - w), t / w));
    sum_s += std::log(s);
    sum_t += std::log(t);
  }
  return std::exp(-sum_xi / n + (1.0 - w) * sum_s / n + w * sum_t / n);
}

inline double theta_cfg(const std::vector<double>& x1, const std::vector<double>& x2) {
  return clamp_theta(2.0 * pickands_cfg(x1, x2, 0.5));
}

/// Jointly observed values of a station pair.
inline std::pair<std::vector<double>, std::vector<double>> joint_columns(const Dataset& data, PairIndex p) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < data.replicates(); ++i)
    if (data.is_observed(i, p.first) && data.is_observed(i, p.second)) {
      out.first.push_back(data.z(i, p.first));
      out.second.push_back(data.z(i, p.second));
    }
  return out;
}

inline double pairwise_theta(const Dataset& data, PairIndex p, Estimator e = Estimator::madogram) {
  const auto [a, b] = joint_columns(data, p);
  if (a.size() < kMinJointObservations)
    throw InsufficientData("pair (" + data.sites.ids.at(p.first) + ", " + data.sites.ids.at(p.second) + ") has " +
                           std::to_string(a.size()) + " joint observations; at least 10 are needed");
  return e == Estimator::madogram ? theta_madogram(a, b) : theta_cfg(a, b);
}

inline double pairwise_theta_madogram(const Dataset& data, PairIndex p) {
  return pairwise_theta(data, p, Estimator::madogram);
}
inline double pairwise_theta_cfg(const Dataset& data, PairIndex p) { return pairwise_theta(data, p, Estimator::cfg); }

struct ThetaPairRecord {
  PairIndex pair;
  double empirical = 0.0;
  double fitted = 0.0;
  std::size_t count = 0;
  double distance = 0.0;
};

struct ThetaPairTable {
  Estimator estimator = Estimator::madogram;
  std::vector<ThetaPairRecord> records;

  /// Fraction of pairs whose empirical value sits on the [1, 2] bounds.
  [[nodiscard]] double truncated_fraction() const {
    if (records.empty()) return 0.0;
    std::size_t k = 0;
    for (const auto& r : records) k += (r.empirical <= 1.0 || r.empirical >= 2.0);
    return static_cast<double>(k) / static_cast<double>(records.size());
  }

  [[nodiscard]] double sse() const {
    double s = 0.0;
    for (const auto& r : records) s += (r.empirical - r.fitted) * (r.empirical - r.fitted);
    return s;
  }
};

/// Empirical and fitted pairwise extremal coefficients over `pairs` (all
/// pairs with at least 10 joint observations when empty).
inline ThetaPairTable theta_pair_table(const extremal::DependenceModel& fitted, const Dataset& data,
                                       Estimator e = Estimator::madogram, std::vector<PairIndex> pairs = {}) {
  if (pairs.empty()) {
    for (std::size_t a = 0; a < data.stations(); ++a)
      for (std::size_t b = a + 1; b < data.stations(); ++b)
        if (joint_columns(data, {a, b}).first.size() >= kMinJointObservations) pairs.push_back({a, b});
    if (pairs.empty()) throw InsufficientData("no station pair has 10 joint observations");
  }
  const extremal::ResolvedModel rm(fitted, data.sites);
  ThetaPairTable t;
  t.estimator = e;
  t.records.resize(pairs.size());
  mathkit::parallel_for(pairs.size(), [&](std::size_t k) {
    const auto p = pairs[k];
    auto& r = t.records[k];
    r.pair = p;
    r.count = joint_columns(data, p).first.size();
    r.empirical = pairwise_theta(data, p, e);
    r.fitted = rm.theta(p.first, p.second);
    const auto& c = data.sites.coords;
    r.distance = std::hypot(c[p.second].x - c[p.first].x, c[p.second].y - c[p.first].y);
  });
  return t;
}

struct SseResult {
  ThetaPairTable table;
  double sse = 0.0;
};

inline SseResult fit_vs_empirical_sse(const extremal::DependenceModel& fitted, const Dataset& data,
                                      Estimator e = Estimator::madogram, std::vector<PairIndex> pairs = {}) {
  SseResult r;
  r.table = theta_pair_table(fitted, data, e, std::move(pairs));
  r.sse = r.table.sse();
  return r;
}

}  // namespace nsmaxstab::empirical
