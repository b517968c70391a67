#pragma once

// Stations and long-format maxima files, coordinate projection and the
// per-station GEV marginal transform.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nsmaxstab/covmodel.hpp"
#include "nsmaxstab/gev.hpp"
#include "nsmaxstab/inference/likelihood.hpp"
#include "nsmaxstab/io/csv.hpp"

namespace nsmaxstab::io {

using covmodel::SiteSet;
using mathkit::DenseMatrix;

/// Equirectangular projection of (longitude, latitude) in degrees to planar
/// coordinates: x = R (lon - lon0) cos(lat0), y = R (lat - lat0), in km,
/// divided by `unit_km`.
struct Projection {
  double reference_longitude = 0.0;
  double reference_latitude = 0.0;
  double unit_km = 1.0;
  static constexpr double kEarthRadiusKm = 6371.0;

  [[nodiscard]] covmodel::SiteCoordinate apply(double lon, double lat) const {
    const double k = kEarthRadiusKm * std::numbers::pi / 180.0 / unit_km;
    return {k * (lon - reference_longitude) * std::cos(reference_latitude * std::numbers::pi / 180.0),
            k * (lat - reference_latitude)};
  }
};

/// stations.csv: id,x,y,<covariates...>. Covariates are standardized; with a
/// projection, x and y are longitude and latitude in degrees.
inline SiteSet read_stations(const std::filesystem::path& path, const std::optional<Projection>& proj = {}) {
  const auto t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "id" || t.header[1] != "x" || t.header[2] != "y")
    throw InputError(t.source, 1, "header must start with id,x,y");
  if (t.rows.empty()) throw InputError(t.source, 0, "no stations");
  std::vector<std::string> cov_names(t.header.begin() + 3, t.header.end());
  std::vector<covmodel::SiteCoordinate> coords;
  std::vector<std::string> ids;
  DenseMatrix raw(t.rows.size(), cov_names.size());
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto line = t.line_numbers[r];
    if (row[0].empty()) throw InputError(t.source, line, "empty station id");
    if (!seen.insert(row[0]).second) throw InputError(t.source, line, "duplicate station id '" + row[0] + "'");
    ids.push_back(row[0]);
    const double x = parse_number(row[1], t.source, line, "x");
    const double y = parse_number(row[2], t.source, line, "y");
    coords.push_back(proj ? proj->apply(x, y) : covmodel::SiteCoordinate{x, y});
    for (std::size_t c = 0; c < cov_names.size(); ++c)
      raw(r, c) = parse_number(row[3 + c], t.source, line, "covariate '" + cov_names[c] + "'");
  }
  SiteSet s = SiteSet::from_coordinates(std::move(coords));
  s.ids = std::move(ids);
  if (!cov_names.empty()) s.covariates = covmodel::CovariateTable(cov_names, raw);
  s.validate();
  return s;
}

/// Writes id,x,y and the covariates on their original (unstandardized) scale.
inline std::string stations_csv(const SiteSet& s) {
  std::ostringstream os;
  os << "id,x,y";
  const auto& names = s.covariates.names();
  for (std::size_t c = 1; c < names.size(); ++c) os << ',' << csv_field(names[c]);
  os << '\n';
  for (std::size_t j = 0; j < s.size(); ++j) {
    os << csv_field(s.ids[j]) << ',' << format_double(s.coords[j].x) << ',' << format_double(s.coords[j].y);
    for (std::size_t c = 1; c < names.size(); ++c) os << ',' << format_double(s.covariates.raw(j, c));
    os << '\n';
  }
  return os.str();
}

/// Block maxima on their original scale with an observation mask; rows are
/// years in increasing order.
struct RawMaxima {
  std::vector<long> years;
  DenseMatrix values;
  std::vector<unsigned char> observed;  // row-major, years x stations

  [[nodiscard]] bool is_observed(std::size_t i, std::size_t j) const { return observed[i * values.cols() + j] != 0; }
  [[nodiscard]] std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c(values.cols(), 0);
    for (std::size_t i = 0; i < values.rows(); ++i)
      for (std::size_t j = 0; j < values.cols(); ++j) c[j] += is_observed(i, j);
    return c;
  }
  /// Observed values of one station.
  [[nodiscard]] std::vector<double> series(std::size_t j) const {
    std::vector<double> v;
    for (std::size_t i = 0; i < values.rows(); ++i)
      if (is_observed(i, j)) v.push_back(values(i, j));
    return v;
  }
};

/// maxima.csv: year,station_id,value. Absent rows are missing values.
inline RawMaxima read_maxima(const std::filesystem::path& path, const SiteSet& sites) {
  const auto t = read_csv(path);
  const auto cy = t.column("year"), cs = t.column("station_id"), cv = t.column("value");
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < sites.size(); ++j) index[sites.ids[j]] = j;
  std::map<long, std::size_t> year_row;
  struct Entry {
    long year;
    std::size_t station;
    double value;
  };
  std::vector<Entry> entries;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto line = t.line_numbers[r];
    const double yv = parse_number(row[cy], t.source, line, "year");
    if (yv != std::floor(yv)) throw InputError(t.source, line, "year '" + row[cy] + "' is not an integer");
    const auto it = index.find(row[cs]);
    if (it == index.end()) throw InputError(t.source, line, "unknown station id '" + row[cs] + "'");
    entries.push_back({static_cast<long>(yv), it->second, parse_number(row[cv], t.source, line, "value")});
    year_row[static_cast<long>(yv)] = 0;
  }
  if (entries.empty()) throw InputError(t.source, 0, "no maxima");
  RawMaxima m;
  for (auto& [y, row] : year_row) {
    row = m.years.size();
    m.years.push_back(y);
  }
  m.values = DenseMatrix(m.years.size(), sites.size());
  m.observed.assign(m.years.size() * sites.size(), 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    const std::size_t i = year_row[e.year];
    auto& flag = m.observed[i * sites.size() + e.station];
    if (flag)
      throw InputError(t.source, t.line_numbers[k],
                       "duplicate row for year " + std::to_string(e.year) + ", station '" + sites.ids[e.station] + "'");
    flag = 1;
    m.values(i, e.station) = e.value;
  }
  return m;
}

inline std::string maxima_csv(const RawMaxima& m, const SiteSet& sites) {
  std::ostringstream os;
  os << "year,station_id,value\n";
  for (std::size_t i = 0; i < m.years.size(); ++i)
    for (std::size_t j = 0; j < sites.size(); ++j)
      if (m.is_observed(i, j)) os << m.years[i] << ',' << csv_field(sites.ids[j]) << ',' << format_double(m.values(i, j)) << '\n';
  return os.str();
}

/// Wraps a unit-Frechet dataset as raw maxima with years 1..m.
inline RawMaxima as_raw(const inference::Dataset& d) {
  RawMaxima m;
  for (std::size_t i = 0; i < d.replicates(); ++i) m.years.push_back(static_cast<long>(i + 1));
  m.values = d.z;
  m.observed.resize(d.replicates() * d.stations());
  for (std::size_t i = 0; i < d.replicates(); ++i)
    for (std::size_t j = 0; j < d.stations(); ++j) m.observed[i * d.stations() + j] = d.is_observed(i, j);
  return m;
}

struct StationMargin {
  std::string id;
  gev::GevParams params;
  std::size_t count = 0;
  bool fitted = false;
  bool dropped = false;
};

struct TransformResult {
  inference::Dataset data;  // unit Frechet, dropped stations removed
  std::vector<StationMargin> margins;
  std::vector<long> years;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinSeriesForGevFit = 20;

/// Unit-Frechet transform. With `given` (by station id) those parameters are
/// used; other stations get a per-station GEV maximum likelihood fit.
/// Stations whose fit fails or whose series is too short are dropped.
inline TransformResult marginal_transform(const RawMaxima& raw, const SiteSet& sites,
                                          const std::map<std::string, gev::GevParams>& given = {}) {
  TransformResult out;
  out.years = raw.years;
  std::vector<std::size_t> keep;
  const auto counts = raw.counts();
  for (std::size_t j = 0; j < sites.size(); ++j) {
    StationMargin sm;
    sm.id = sites.ids[j];
    sm.count = counts[j];
    if (auto it = given.find(sm.id); it != given.end()) {
      sm.params = it->second;
    } else if (sm.count < kMinSeriesForGevFit) {
      sm.dropped = true;
      out.warnings.push_back("station '" + sm.id + "' dropped: " + std::to_string(sm.count) +
                             " maxima, a GEV fit needs " + std::to_string(kMinSeriesForGevFit));
    } else {
      try {
        const auto s = raw.series(j);
        const auto f = gev::fit_gev_mle(s);
        sm.params = f.params;
        sm.fitted = true;
        if (!f.converged) {
          sm.dropped = true;
          out.warnings.push_back("station '" + sm.id + "' dropped: GEV fit did not converge");
        }
      } catch (const std::exception& e) {
        sm.dropped = true;
        out.warnings.push_back("station '" + sm.id + "' dropped: " + e.what());
      }
    }
    if (!sm.dropped) {
      for (std::size_t i = 0; i < raw.years.size() && !sm.dropped; ++i) {
        if (!raw.is_observed(i, j)) continue;
        try {
          static_cast<void>(gev::gev_to_frechet(raw.values(i, j), sm.params));
        } catch (const std::domain_error& e) {
          sm.dropped = true;
          out.warnings.push_back("station '" + sm.id + "' dropped: year " + std::to_string(raw.years[i]) + " " +
                                 e.what());
        }
      }
    }
    if (!sm.dropped && sm.count == 0) {
      sm.dropped = true;
      out.warnings.push_back("station '" + sm.id + "' dropped: no maxima");
    }
    if (!sm.dropped) keep.push_back(j);
    out.margins.push_back(sm);
  }
  if (keep.size() < 2) throw std::invalid_argument("fewer than two stations remain after the marginal transform");

  auto& d = out.data;
  d.sites.coords.clear();
  for (auto j : keep) {
    d.sites.ids.push_back(sites.ids[j]);
    d.sites.coords.push_back(sites.coords[j]);
  }
  d.sites.covariates = sites.covariates.subset(keep);
  d.z = DenseMatrix(raw.years.size(), keep.size(), 1.0);
  d.observed.assign(raw.years.size() * keep.size(), 0);
  for (std::size_t i = 0; i < raw.years.size(); ++i)
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const std::size_t j = keep[k];
      if (!raw.is_observed(i, j)) continue;
      d.z(i, k) = gev::gev_to_frechet(raw.values(i, j), out.margins[j].params);
      d.observed[i * keep.size() + k] = 1;
    }
  d.validate();
  return out;
}

/// Dataset from maxima already on the unit Frechet scale.
inline inference::Dataset frechet_dataset(const RawMaxima& raw, const SiteSet& sites) {
  inference::Dataset d;
  d.sites = sites;
  d.z = raw.values;
  d.observed = raw.observed;
  for (std::size_t i = 0; i < d.replicates(); ++i)
    for (std::size_t j = 0; j < d.stations(); ++j)
      if (!d.is_observed(i, j)) d.z(i, j) = 1.0;
  d.validate();
  return d;
}

}  // namespace nsmaxstab::io
