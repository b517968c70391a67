#pragma once

// Datasets of unit-Frechet block maxima, pair selection and the pairwise
// log-likelihood.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nsmaxstab/covmodel.hpp"
#include "nsmaxstab/extremal.hpp"
#include "nsmaxstab/inference/parameters.hpp"
#include "nsmaxstab/mathkit/dense_matrix.hpp"
#include "nsmaxstab/mathkit/parallel.hpp"
#include "nsmaxstab/mathkit/summation.hpp"

namespace nsmaxstab::inference {

using mathkit::DenseMatrix;

/// m x D unit-Frechet maxima with an observation mask (1 = observed).
struct Dataset {
  covmodel::SiteSet sites;
  DenseMatrix z;
  std::vector<unsigned char> observed;  // row-major m x D; empty means all observed

  [[nodiscard]] std::size_t replicates() const noexcept { return z.rows(); }
  [[nodiscard]] std::size_t stations() const noexcept { return z.cols(); }
  [[nodiscard]] bool is_observed(std::size_t i, std::size_t j) const {
    return observed.empty() || observed[i * z.cols() + j] != 0;
  }
  void set_missing(std::size_t i, std::size_t j) {
    if (observed.empty()) observed.assign(z.rows() * z.cols(), 1);
    observed[i * z.cols() + j] = 0;
  }

  void validate() const {
    sites.validate();
    if (z.cols() != sites.size()) throw covmodel::DimensionMismatch("maxima columns and sites differ in count");
    if (z.rows() == 0) throw std::invalid_argument("dataset has no replicates");
    if (!observed.empty() && observed.size() != z.rows() * z.cols())
      throw covmodel::DimensionMismatch("observation mask has the wrong size");
    for (std::size_t j = 0; j < stations(); ++j) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < replicates(); ++i) {
        if (!is_observed(i, j)) continue;
        const double v = z(i, j);
        if (!(v > 0.0) || !std::isfinite(v))
          throw std::domain_error("observation at replicate " + std::to_string(i) + ", station '" + sites.ids[j] +
                                  "' is not a positive finite unit-Frechet value");
        ++n;
      }
      if (n == 0) throw std::invalid_argument("station '" + sites.ids[j] + "' has no observations");
    }
  }

  /// Dataset made of the listed replicate rows (repeats allowed).
  [[nodiscard]] Dataset subset_replicates(const std::vector<std::size_t>& rows) const {
    Dataset d;
    d.sites = sites;
    d.z = DenseMatrix(rows.size(), stations());
    if (!observed.empty()) d.observed.assign(rows.size() * stations(), 1);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < stations(); ++j) {
        d.z(r, j) = z(rows[r], j);
        if (!observed.empty()) d.observed[r * stations() + j] = observed[rows[r] * stations() + j];
      }
    return d;
  }
};

/// Zero-based station pair with first < second.
struct PairIndex {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const PairIndex&, const PairIndex&) = default;
  friend auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

struct PairSelection {
  enum class Policy { all, closest_fraction, explicit_list };
  Policy policy = Policy::all;
  double fraction = 1.0;
  std::vector<PairIndex> pairs;

  static PairSelection all_pairs() { return {}; }
  static PairSelection closest(double q) { return {Policy::closest_fraction, q, {}}; }
  static PairSelection listed(std::vector<PairIndex> p) { return {Policy::explicit_list, 1.0, std::move(p)}; }
};

inline std::vector<PairIndex> select_pairs(const PairSelection& sel, const covmodel::SiteSet& sites) {
  const std::size_t d = sites.size();
  if (d < 2) throw std::invalid_argument("pair selection needs at least two sites");
  std::vector<PairIndex> out;
  switch (sel.policy) {
    case PairSelection::Policy::all:
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b) out.push_back({a, b});
      break;
    case PairSelection::Policy::closest_fraction: {
      const double q = sel.fraction;
      if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("closest-pair fraction must lie in (0, 1]");
      struct Ranked {
        double dist2;
        PairIndex p;
      };
      std::vector<Ranked> all;
      all.reserve(d * (d - 1) / 2);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b) {
          const double dx = sites.coords[b].x - sites.coords[a].x;
          const double dy = sites.coords[b].y - sites.coords[a].y;
          all.push_back({dx * dx + dy * dy, {a, b}});
        }
      const auto total = static_cast<double>(all.size());
      // small guard so that q * total landing on an integer is not pushed up by rounding
      const auto keep = static_cast<std::size_t>(std::ceil(q * total - 1e-9));
      std::stable_sort(all.begin(), all.end(), [](const Ranked& x, const Ranked& y) { return x.dist2 < y.dist2; });
      for (std::size_t k = 0; k < std::min(keep, all.size()); ++k) out.push_back(all[k].p);
      std::sort(out.begin(), out.end());
      break;
    }
    case PairSelection::Policy::explicit_list:
      for (auto p : sel.pairs) {
        if (p.first > p.second) std::swap(p.first, p.second);
        if (p.first == p.second || p.second >= d)
          throw std::invalid_argument("explicit pair (" + std::to_string(p.first) + ", " + std::to_string(p.second) +
                                      ") is not a valid pair of distinct sites");
        out.push_back(p);
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      break;
  }
  if (out.empty()) throw std::invalid_argument("pair selection is empty");
  return out;
}

class LikelihoodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoglikDiagnostics {
  std::size_t terms = 0;
  std::size_t nonpositive = 0;  // terms with a non-positive density numerator
};

/// Pairwise log-likelihood of a fixed dataset and pair list as a function of
/// the dependence model.
class PairwiseLikelihood {
 public:
  /// workers = 0 uses every hardware thread.
  PairwiseLikelihood(const Dataset& data, std::vector<PairIndex> pairs, std::size_t workers = 0)
      : data_(&data), pairs_(std::move(pairs)), workers_(workers) {
    data.validate();
    rows_.resize(pairs_.size());
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const auto [a, b] = pairs_[k];
      if (b >= data.stations()) throw covmodel::DimensionMismatch("pair index beyond the station count");
      for (std::size_t i = 0; i < data.replicates(); ++i)
        if (data.is_observed(i, a) && data.is_observed(i, b)) rows_[k].push_back(i);
    }
  }

  [[nodiscard]] const std::vector<PairIndex>& pairs() const noexcept { return pairs_; }
  [[nodiscard]] const Dataset& data() const noexcept { return *data_; }

  /// Sum over pairs and replicates. -inf when some term is -inf (counted in
  /// diag); throws when every term is -inf.
  [[nodiscard]] double operator()(const extremal::DependenceModel& model, LoglikDiagnostics* diag = nullptr) const {
    const auto per = pair_sums(model);
    mathkit::ExactSum total;
    LoglikDiagnostics d;
    for (const auto& p : per) {
      total.merge(p.sum);
      d.terms += p.terms;
      d.nonpositive += p.nonpositive;
    }
    if (diag) *diag = d;
    if (d.terms > 0 && d.nonpositive == d.terms) throw LikelihoodError("pairwise likelihood: every term is -inf");
    if (d.nonpositive > 0) return -std::numeric_limits<double>::infinity();
    return total.value();
  }

  /// Per-replicate contributions l_i (sum over pairs for replicate i).
  [[nodiscard]] std::vector<double> per_replicate(const extremal::DependenceModel& model,
                                                  LoglikDiagnostics* diag = nullptr) const {
    const extremal::ResolvedModel rm(model, data_->sites);
    const std::size_t m = data_->replicates();
    std::vector<mathkit::ExactSum> acc(m);
    LoglikDiagnostics d;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const auto [a, b] = pairs_[k];
      extremal::DensityDiagnostics dd;
      for (auto i : rows_[k]) acc[i] += rm.log_density(a, b, data_->z(i, a), data_->z(i, b), &dd);
      d.terms += rows_[k].size();
      d.nonpositive += dd.nonpositive;
    }
    if (diag) *diag = d;
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = acc[i].value();
    return out;
  }

  /// Contribution of a single pair, summed over its observed replicates.
  [[nodiscard]] double pair_term(const extremal::DependenceModel& model, std::size_t k) const {
    const extremal::ResolvedModel rm(model, data_->sites);
    mathkit::ExactSum s;
    const auto [a, b] = pairs_.at(k);
    for (auto i : rows_[k]) s += rm.log_density(a, b, data_->z(i, a), data_->z(i, b));
    return s.value();
  }

 private:
  struct PairSum {
    mathkit::ExactSum sum;
    std::size_t terms = 0;
    std::size_t nonpositive = 0;
  };

  std::vector<PairSum> pair_sums(const extremal::DependenceModel& model) const {
    const extremal::ResolvedModel rm(model, data_->sites);
    std::vector<PairSum> per(pairs_.size());
    mathkit::parallel_for(
        pairs_.size(),
        [&](std::size_t k) {
          const auto [a, b] = pairs_[k];
          extremal::DensityDiagnostics dd;
          auto& out = per[k];
          for (auto i : rows_[k]) {
            const double v = rm.log_density(a, b, data_->z(i, a), data_->z(i, b), &dd);
            if (std::isfinite(v)) out.sum += v;
          }
          out.terms = rows_[k].size();
          out.nonpositive = dd.nonpositive;
        },
        workers_ == 0 ? mathkit::worker_count() : workers_);
    return per;
  }

  const Dataset* data_;
  std::vector<PairIndex> pairs_;
  std::vector<std::vector<std::size_t>> rows_;
  std::size_t workers_;
};

/// Convenience: l(psi) for a template, dataset and pair list.
inline double pairwise_loglik(const ModelTemplate& tmpl, const ParameterVector& psi, const Dataset& data,
                              const std::vector<PairIndex>& pairs, LoglikDiagnostics* diag = nullptr) {
  const PairwiseLikelihood lik(data, pairs);
  return lik(tmpl.build(psi, data.sites.covariates), diag);
}

}  // namespace nsmaxstab::inference
