#pragma once

// Artifact writers: provenance block, FitResult JSON, theta tables, return
// level curves and the error document.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsmaxstab/empirical.hpp"
#include "nsmaxstab/inference/fit.hpp"
#include "nsmaxstab/io/csv.hpp"
#include "nsmaxstab/io/data.hpp"
#include "nsmaxstab/returnlevel.hpp"
#include "nsmaxstab/simulate.hpp"

#ifndef NSMAXSTAB_VERSION
#define NSMAXSTAB_VERSION "0.0.0"
#endif

namespace nsmaxstab::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = NSMAXSTAB_VERSION;

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON dump.
inline std::string config_hash(const json& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// No timestamps or host details, so reruns are byte identical.
inline json provenance(const std::string& command, const json& config, std::uint64_t seed) {
  return {{"command", command},
          {"config_hash", config_hash(config)},
          {"seed", seed},
          {"version", kVersion},
          {"dependencies", {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

/// NaN and infinities become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json matrix_json(const mathkit::DenseMatrix& m) {
  json a = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    a.push_back(row);
  }
  return a;
}

inline json parameters_json(const inference::ParameterVector& p) {
  json a = json::array();
  for (const auto& q : p.all()) {
    a.push_back({{"name", q.name}, {"value", number(q.value)}, {"transform", inference::transform_name(q.transform)},
                 {"fixed", q.fixed}});
  }
  return a;
}

inline json fit_json(const inference::FitResult& r, const std::string& model_name,
                     const inference::BootstrapResult* boot = nullptr) {
  json j;
  j["model"] = model_name;
  j["parameters"] = parameters_json(r.estimate);
  j["free_parameters"] = r.names;
  j["loglik"] = number(r.loglik);
  j["replicates"] = r.replicates;
  j["pairs"] = r.pairs.size();
  j["clic"] = number(r.clic);
  j["cbic"] = number(r.cbic);
  j["converged"] = r.converged;
  j["optimizer"] = {{"runs", r.runs},
                    {"runs_converged", r.runs_converged},
                    {"iterations", r.iterations},
                    {"evaluations", r.evaluations}};
  j["nonpositive_terms"] = r.nonpositive_terms;
  if (r.has_sandwich) {
    json se = json::object();
    for (std::size_t k = 0; k < r.names.size(); ++k) se[r.names[k]] = number(r.sandwich.se[k]);
    j["sandwich"] = {{"se", se},
                     {"penalty", number(r.sandwich.penalty)},
                     {"covariance", matrix_json(r.sandwich.covariance)},
                     {"J", matrix_json(r.sandwich.J)},
                     {"K", matrix_json(r.sandwich.K)}};
  } else {
    j["sandwich"] = nullptr;
  }
  if (boot) {
    json ci = json::object();
    for (std::size_t k = 0; k < boot->names.size(); ++k)
      ci[boot->names[k]] = {number(boot->lower[k]), number(boot->upper[k])};
    j["bootstrap"] = {{"intervals", ci}, {"resamples", boot->estimates.rows()}, {"failures", boot->failures}};
  }
  j["warnings"] = r.warnings;
  return j;
}

/// Fields CSV: header of site ids, one row per replicate.
inline std::string fields_csv(const simulate::FieldRealizations& f) {
  std::ostringstream os;
  for (std::size_t j = 0; j < f.site_ids.size(); ++j) os << (j ? "," : "") << csv_field(f.site_ids[j]);
  os << '\n';
  for (std::size_t i = 0; i < f.replicates(); ++i) {
    for (std::size_t j = 0; j < f.sites(); ++j) os << (j ? "," : "") << format_double(f.values(i, j));
    os << '\n';
  }
  return os.str();
}

inline json simulation_provenance(const simulate::Provenance& p) {
  return {{"model_hash", p.model_hash}, {"method", p.method},  {"truncated", p.truncated},
          {"jitter", number(p.jitter)}, {"warnings", p.warnings}};
}

inline std::string theta_table_csv(const empirical::ThetaPairTable& t, const covmodel::SiteSet& sites) {
  std::ostringstream os;
  os << "site1,site2,distance,count,empirical,fitted\n";
  for (const auto& r : t.records)
    os << csv_field(sites.ids[r.pair.first]) << ',' << csv_field(sites.ids[r.pair.second]) << ','
       << format_double(r.distance) << ',' << r.count << ',' << format_double(r.empirical) << ','
       << format_double(r.fitted) << '\n';
  return os.str();
}

inline std::string curves_csv(const std::vector<returnlevel::ReturnLevelCurve>& curves) {
  std::ostringstream os;
  os << "region,functional,scale,replicates,N,level,se\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      os << csv_field(c.region_id) << ',' << returnlevel::functional_name(c.functional) << ','
         << returnlevel::scale_name(c.scale) << ',' << c.replicates << ',' << format_double(p.N) << ','
         << format_double(p.level) << ',' << format_double(p.se) << '\n';
  return os.str();
}

inline std::string margins_csv(const std::vector<StationMargin>& m) {
  std::ostringstream os;
  os << "station_id,count,mu,sigma,xi,fitted,dropped\n";
  for (const auto& s : m)
    os << csv_field(s.id) << ',' << s.count << ',' << format_double(s.params.mu) << ','
       << format_double(s.params.sigma) << ',' << format_double(s.params.xi) << ',' << int(s.fitted) << ','
       << int(s.dropped) << '\n';
  return os.str();
}

inline json error_json(const std::string& command, const std::string& kind, const std::string& message,
                       const std::string& field = {}) {
  json j{{"status", "error"}, {"command", command}, {"error", {{"kind", kind}, {"message", message}}}};
  if (!field.empty()) j["error"]["field"] = field;
  return j;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace nsmaxstab::io
