#pragma once

// JSON run configuration: model templates, data sources, pair policy and
// per-command settings.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsmaxstab/empirical.hpp"
#include "nsmaxstab/gev.hpp"
#include "nsmaxstab/inference/fit.hpp"
#include "nsmaxstab/io/data.hpp"
#include "nsmaxstab/returnlevel.hpp"
#include "nsmaxstab/simulate.hpp"

namespace nsmaxstab::io {

using json = nlohmann::json;

/// Configuration problem tied to a field path such as "model.covariates.a[0]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where, "must be an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where.empty() ? k : where + "." + k, "unknown key");
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where.empty() ? key : where + "." + key, "has the wrong type");
  }
}

inline std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

}  // namespace detail

struct ModelSpec {
  std::string name;
  inference::ModelTemplate tmpl;
  inference::ParameterVector params;  // template defaults with configured values and fixed flags
  json source;
};

inline ModelSpec parse_model(const json& j, const std::string& where = "model") {
  using namespace inference;
  detail::allow_keys(j, where,
                     {"name", "kernel", "isotropic", "brown_resnick_scaling", "mixture", "covariates", "df",
                      "estimate_df", "parameters", "fixed", "description"});
  ModelSpec m;
  m.source = j;
  m.name = detail::get<std::string>(j, "name", where, "model");
  auto& t = m.tmpl;
  const auto kernel = detail::get<std::string>(j, "kernel", where, "covariate");
  if (kernel == "parametric")
    t.kernel = KernelKind::parametric;
  else if (kernel == "covariate")
    t.kernel = KernelKind::covariate;
  else
    throw ConfigError(where + ".kernel", "must be 'parametric' or 'covariate', got '" + kernel + "'");
  t.isotropic = detail::get<bool>(j, "isotropic", where, true);
  t.brown_resnick_scaling = detail::get<bool>(j, "brown_resnick_scaling", where, t.kernel == KernelKind::parametric);
  const auto mix = detail::get<std::string>(j, "mixture", where, "none");
  if (mix == "none")
    t.mixture = MixtureKind::none;
  else if (mix == "sum")
    t.mixture = MixtureKind::sum;
  else if (mix == "max")
    t.mixture = MixtureKind::max;
  else
    throw ConfigError(where + ".mixture", "must be 'none', 'sum' or 'max', got '" + mix + "'");
  if (t.kernel == KernelKind::parametric && !t.isotropic)
    throw ConfigError(where + ".isotropic", "the parametric kernel is isotropic");
  if (j.contains("covariates")) {
    const auto& c = j.at("covariates");
    const auto cw = where + ".covariates";
    detail::allow_keys(c, cw, {"omega_x", "omega_y", "delta", "a"});
    auto list = [&](const char* key) { return detail::get<std::vector<std::string>>(c, key, cw, {}); };
    t.omega_x_covariates = list("omega_x");
    t.omega_y_covariates = list("omega_y");
    t.delta_covariates = list("delta");
    t.a_covariates = list("a");
    if (t.kernel == KernelKind::parametric && (!t.omega_x_covariates.empty() || !t.omega_y_covariates.empty() ||
                                               !t.delta_covariates.empty()))
      throw ConfigError(cw, "the parametric kernel takes no kernel covariates");
    if (t.isotropic && (!t.omega_y_covariates.empty() || !t.delta_covariates.empty()))
      throw ConfigError(cw, "isotropic models take no omega_y or delta covariates");
    if (t.mixture == MixtureKind::none && !t.a_covariates.empty())
      throw ConfigError(cw + ".a", "only mixture models have a mixture coefficient");
  }
  t.df = detail::get<double>(j, "df", where, 5.0);
  if (!(t.df > 0.0)) throw ConfigError(where + ".df", "must be positive");
  t.estimate_df = detail::get<bool>(j, "estimate_df", where, false);
  m.params = t.default_parameters();
  if (j.contains("parameters")) {
    const auto& p = j.at("parameters");
    if (!p.is_object()) throw ConfigError(where + ".parameters", "must be an object");
    for (const auto& [k, v] : p.items()) {
      const auto field = where + ".parameters." + k;
      if (!m.params.has(k)) throw ConfigError(field, "is not a parameter of this model");
      if (!v.is_number()) throw ConfigError(field, "must be a number");
      try {
        static_cast<void>(to_working(m.params.at(k).transform, v.get<double>()));
      } catch (const std::domain_error& e) {
        throw ConfigError(field, e.what());
      }
      m.params.set(k, v.get<double>());
    }
  }
  for (const auto& f : detail::get<std::vector<std::string>>(j, "fixed", where, {})) {
    if (!m.params.has(f)) throw ConfigError(where + ".fixed", "'" + f + "' is not a parameter of this model");
    m.params.fix(f, m.params[f]);
  }
  return m;
}

/// Throws a ConfigError naming the field when a model refers to a covariate
/// the site set does not have.
inline void check_covariates(const ModelSpec& m, const covmodel::CovariateTable& cov, const std::string& where) {
  auto check = [&](const std::vector<std::string>& names, const char* block) {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (!cov.index_of(names[k])) {
        std::string have;
        for (std::size_t c = 1; c < cov.names().size(); ++c) have += (have.empty() ? "" : ", ") + cov.names()[c];
        throw ConfigError(where + ".covariates." + block + "[" + std::to_string(k) + "]",
                          "unknown covariate '" + names[k] + "' (stations provide: " +
                              (have.empty() ? std::string("none") : have) + ")");
      }
  };
  check(m.tmpl.omega_x_covariates, "omega_x");
  check(m.tmpl.omega_y_covariates, "omega_y");
  check(m.tmpl.delta_covariates, "delta");
  check(m.tmpl.a_covariates, "a");
}

struct DataSpec {
  std::optional<std::filesystem::path> stations;
  std::optional<std::filesystem::path> maxima;
  std::string margins = "frechet";  // frechet | fit | given
  std::map<std::string, gev::GevParams> gev;
  std::optional<Projection> projection;
};

/// Sites for simulation: a stations file, a regular grid, or uniform random
/// points on a box.
struct SitesSpec {
  std::optional<std::filesystem::path> stations;
  std::optional<covmodel::GridDescriptor> grid;
  std::size_t random_count = 0;
  std::uint64_t random_seed = 1;
  std::array<double, 4> box{0.0, 1.0, 0.0, 1.0};  // x0, x1, y0, y1
};

struct PairSpec {
  std::string policy = "all";  // all | closest | list
  double fraction = 1.0;
  std::vector<std::pair<std::string, std::string>> list;  // station ids
};

struct SimulateSpec {
  std::size_t replicates = 100;
  std::string process = "extremal_t";  // extremal_t | smith_stephenson
  simulate::Method method = simulate::Method::exact;
  std::size_t max_spectral = 10000;
  double slack = 50.0;
  double padding = -1.0;
  long first_year = 1;
};

struct FitSpec {
  inference::FitOptions options;
  bool default_start = true;
  std::size_t bootstrap = 0;
  std::size_t block_length = 1;
  double level = 0.95;
};

struct ExtcoefSpec {
  empirical::Estimator estimator = empirical::Estimator::madogram;
  bool refit = false;
};

struct RlevelSpec {
  std::vector<returnlevel::Region> regions;
  std::vector<double> periods{2, 5, 10, 20, 50, 100, 200, 500, 1000};
  returnlevel::Scale scale = returnlevel::Scale::gumbel;
  std::size_t replicates = 100000;
  std::size_t batch = 10000;
};

struct RunConfig {
  json raw;
  std::filesystem::path base_dir;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  DataSpec data;
  SitesSpec sites;
  std::optional<ModelSpec> model;
  std::vector<ModelSpec> models;
  PairSpec pairs;
  FitSpec fit;
  SimulateSpec simulate;
  ExtcoefSpec extcoef;
  RlevelSpec rlevel;

  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
  [[nodiscard]] const ModelSpec& require_model() const {
    if (!model) throw ConfigError("model", "this command needs a model");
    return *model;
  }
};

inline json read_json_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

inline std::filesystem::path path_field(const json& j, const std::string& key, const std::string& where) {
  const auto s = get<std::string>(j, key, where, "");
  if (s.empty()) throw ConfigError(join(where, key), "must be a non-empty path");
  return s;
}

inline void parse_data(RunConfig& c, const json& j) {
  const std::string w = "data";
  allow_keys(j, w, {"stations", "maxima", "margins", "gev", "projection"});
  if (j.contains("stations")) c.data.stations = c.resolve(path_field(j, "stations", w));
  if (j.contains("maxima")) c.data.maxima = c.resolve(path_field(j, "maxima", w));
  c.data.margins = get<std::string>(j, "margins", w, "frechet");
  if (c.data.margins != "frechet" && c.data.margins != "fit" && c.data.margins != "given")
    throw ConfigError("data.margins", "must be 'frechet', 'fit' or 'given'");
  if (j.contains("gev")) {
    const auto& g = j.at("gev");
    if (!g.is_object()) throw ConfigError("data.gev", "must map station ids to {mu, sigma, xi}");
    for (const auto& [id, v] : g.items()) {
      const auto f = "data.gev." + id;
      allow_keys(v, f, {"mu", "sigma", "xi"});
      if (!v.contains("mu") || !v.contains("sigma") || !v.contains("xi"))
        throw ConfigError(f, "needs mu, sigma and xi");
      gev::GevParams p{get<double>(v, "mu", f, 0.0), get<double>(v, "sigma", f, 1.0), get<double>(v, "xi", f, 0.0)};
      if (!(p.sigma > 0.0)) throw ConfigError(f + ".sigma", "must be positive");
      c.data.gev[id] = p;
    }
  }
  if (c.data.margins == "given" && c.data.gev.empty()) throw ConfigError("data.gev", "required when margins is 'given'");
  if (j.contains("projection")) {
    const auto& p = j.at("projection");
    const std::string f = "data.projection";
    allow_keys(p, f, {"reference_longitude", "reference_latitude", "unit_km"});
    if (!p.contains("reference_latitude")) throw ConfigError(f + ".reference_latitude", "is required");
    Projection pr;
    pr.reference_longitude = get<double>(p, "reference_longitude", f, 0.0);
    pr.reference_latitude = get<double>(p, "reference_latitude", f, 0.0);
    pr.unit_km = get<double>(p, "unit_km", f, 1.0);
    if (!(pr.unit_km > 0.0)) throw ConfigError(f + ".unit_km", "must be positive");
    if (std::abs(pr.reference_latitude) >= 90.0) throw ConfigError(f + ".reference_latitude", "must lie in (-90, 90)");
    c.data.projection = pr;
  }
}

inline void parse_sites(RunConfig& c, const json& j) {
  const std::string w = "sites";
  allow_keys(j, w, {"stations", "grid", "random"});
  const int n = int(j.contains("stations")) + int(j.contains("grid")) + int(j.contains("random"));
  if (n != 1) throw ConfigError(w, "give exactly one of stations, grid or random");
  if (j.contains("stations")) c.sites.stations = c.resolve(path_field(j, "stations", w));
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    const std::string f = "sites.grid";
    allow_keys(g, f, {"x0", "y0", "spacing", "nx", "ny"});
    covmodel::GridDescriptor d;
    d.x0 = get<double>(g, "x0", f, 0.0);
    d.y0 = get<double>(g, "y0", f, 0.0);
    d.spacing = get<double>(g, "spacing", f, 0.05);
    d.nx = get<std::size_t>(g, "nx", f, 0);
    d.ny = get<std::size_t>(g, "ny", f, 0);
    if (!(d.spacing > 0.0)) throw ConfigError(f + ".spacing", "must be positive");
    if (d.nx == 0 || d.ny == 0) throw ConfigError(f, "nx and ny must be positive");
    c.sites.grid = d;
  }
  if (j.contains("random")) {
    const auto& r = j.at("random");
    const std::string f = "sites.random";
    allow_keys(r, f, {"count", "seed", "box"});
    c.sites.random_count = get<std::size_t>(r, "count", f, 0);
    if (c.sites.random_count < 2) throw ConfigError(f + ".count", "must be at least 2");
    c.sites.random_seed = get<std::uint64_t>(r, "seed", f, 1);
    const auto box = get<std::vector<double>>(r, "box", f, {0.0, 1.0, 0.0, 1.0});
    if (box.size() != 4 || !(box[1] > box[0]) || !(box[3] > box[2]))
      throw ConfigError(f + ".box", "must be [x0, x1, y0, y1] with x0 < x1 and y0 < y1");
    std::copy(box.begin(), box.end(), c.sites.box.begin());
  }
}

inline void parse_pairs(RunConfig& c, const json& j) {
  const std::string w = "pairs";
  allow_keys(j, w, {"policy", "fraction", "list"});
  c.pairs.policy = get<std::string>(j, "policy", w, "all");
  if (c.pairs.policy == "closest") {
    c.pairs.fraction = get<double>(j, "fraction", w, 1.0);
    if (!(c.pairs.fraction > 0.0 && c.pairs.fraction <= 1.0)) throw ConfigError("pairs.fraction", "must lie in (0, 1]");
  } else if (c.pairs.policy == "list") {
    const auto l = get<std::vector<std::vector<std::string>>>(j, "list", w, {});
    if (l.empty()) throw ConfigError("pairs.list", "must list at least one pair");
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (l[k].size() != 2) throw ConfigError("pairs.list[" + std::to_string(k) + "]", "must be two station ids");
      c.pairs.list.emplace_back(l[k][0], l[k][1]);
    }
  } else if (c.pairs.policy != "all") {
    throw ConfigError("pairs.policy", "must be 'all', 'closest' or 'list'");
  }
}

inline void parse_fit(RunConfig& c, const json& j) {
  const std::string w = "fit";
  allow_keys(j, w, {"restarts", "start", "bootstrap", "block_length", "level", "sandwich", "tolerance",
                    "max_iterations", "fd_step"});
  auto& f = c.fit;
  f.options.restarts = get<std::size_t>(j, "restarts", w, f.options.restarts);
  const auto start = get<std::string>(j, "start", w, "default");
  if (start != "default" && start != "model") throw ConfigError("fit.start", "must be 'default' or 'model'");
  f.default_start = start == "default";
  f.bootstrap = get<std::size_t>(j, "bootstrap", w, 0);
  f.block_length = get<std::size_t>(j, "block_length", w, 1);
  if (f.block_length < 1) throw ConfigError("fit.block_length", "must be at least 1");
  f.level = get<double>(j, "level", w, 0.95);
  if (!(f.level > 0.0 && f.level < 1.0)) throw ConfigError("fit.level", "must lie in (0, 1)");
  f.options.sandwich = get<bool>(j, "sandwich", w, true);
  f.options.optimizer.ftol = get<double>(j, "tolerance", w, f.options.optimizer.ftol);
  f.options.optimizer.max_iterations = get<std::size_t>(j, "max_iterations", w, f.options.optimizer.max_iterations);
  f.options.fd_step = get<double>(j, "fd_step", w, f.options.fd_step);
  if (!(f.options.fd_step > 0.0)) throw ConfigError("fit.fd_step", "must be positive");
}

inline void parse_simulate(RunConfig& c, const json& j) {
  const std::string w = "simulate";
  allow_keys(j, w, {"replicates", "process", "method", "max_spectral", "slack", "padding", "first_year"});
  auto& s = c.simulate;
  s.replicates = get<std::size_t>(j, "replicates", w, s.replicates);
  if (s.replicates < 1) throw ConfigError("simulate.replicates", "must be at least 1");
  s.process = get<std::string>(j, "process", w, s.process);
  if (s.process != "extremal_t" && s.process != "smith_stephenson")
    throw ConfigError("simulate.process", "must be 'extremal_t' or 'smith_stephenson'");
  const auto method = get<std::string>(j, "method", w, "exact");
  if (method == "exact")
    s.method = simulate::Method::exact;
  else if (method == "truncation")
    s.method = simulate::Method::truncation;
  else
    throw ConfigError("simulate.method", "must be 'exact' or 'truncation'");
  s.max_spectral = get<std::size_t>(j, "max_spectral", w, s.max_spectral);
  if (s.max_spectral < 1) throw ConfigError("simulate.max_spectral", "must be at least 1");
  s.slack = get<double>(j, "slack", w, s.slack);
  if (!(s.slack > 0.0)) throw ConfigError("simulate.slack", "must be positive");
  s.padding = get<double>(j, "padding", w, s.padding);
  s.first_year = get<long>(j, "first_year", w, s.first_year);
}

inline void parse_extcoef(RunConfig& c, const json& j) {
  const std::string w = "extcoef";
  allow_keys(j, w, {"estimator", "refit"});
  const auto e = get<std::string>(j, "estimator", w, "madogram");
  if (e == "madogram")
    c.extcoef.estimator = empirical::Estimator::madogram;
  else if (e == "cfg")
    c.extcoef.estimator = empirical::Estimator::cfg;
  else
    throw ConfigError("extcoef.estimator", "must be 'madogram' or 'cfg'");
  c.extcoef.refit = get<bool>(j, "refit", w, false);
}

inline void parse_rlevel(RunConfig& c, const json& j) {
  const std::string w = "rlevel";
  allow_keys(j, w, {"regions", "periods", "scale", "replicates", "batch"});
  auto& r = c.rlevel;
  if (!j.contains("regions") || !j.at("regions").is_array() || j.at("regions").empty())
    throw ConfigError("rlevel.regions", "must list at least one region");
  for (std::size_t k = 0; k < j.at("regions").size(); ++k) {
    const auto& g = j.at("regions")[k];
    const auto f = "rlevel.regions[" + std::to_string(k) + "]";
    allow_keys(g, f, {"id", "x0", "x1", "y0", "y1", "spacing"});
    returnlevel::Region reg{get<std::string>(g, "id", f, "R" + std::to_string(k + 1)),
                            get<double>(g, "x0", f, 0.0),
                            get<double>(g, "x1", f, 0.0),
                            get<double>(g, "y0", f, 0.0),
                            get<double>(g, "y1", f, 0.0),
                            get<double>(g, "spacing", f, 0.05)};
    try {
      reg.validate();
    } catch (const std::exception& e) {
      throw ConfigError(f, e.what());
    }
    r.regions.push_back(reg);
  }
  r.periods = get<std::vector<double>>(j, "periods", w, r.periods);
  for (double p : r.periods)
    if (!(p > 1.0)) throw ConfigError("rlevel.periods", "return periods must exceed 1");
  const auto sc = get<std::string>(j, "scale", w, "gumbel");
  if (sc == "gumbel")
    r.scale = returnlevel::Scale::gumbel;
  else if (sc == "frechet")
    r.scale = returnlevel::Scale::frechet;
  else
    throw ConfigError("rlevel.scale", "must be 'gumbel' or 'frechet'");
  r.replicates = get<std::size_t>(j, "replicates", w, r.replicates);
  if (r.replicates < 2) throw ConfigError("rlevel.replicates", "must be at least 2");
  r.batch = get<std::size_t>(j, "batch", w, r.batch);
  if (r.batch < 1) throw ConfigError("rlevel.batch", "must be at least 1");
}

}  // namespace detail

/// Parses a configuration. Relative paths resolve against `base_dir`.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  detail::allow_keys(j, "", {"seed", "out", "data", "sites", "model", "models", "pairs", "fit", "simulate", "extcoef",
                             "rlevel", "description"});
  c.seed = detail::get<std::uint64_t>(j, "seed", "", 1);
  if (j.contains("out")) c.out = c.resolve(detail::path_field(j, "out", ""));
  if (j.contains("data")) detail::parse_data(c, j.at("data"));
  if (j.contains("sites")) detail::parse_sites(c, j.at("sites"));
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.is_string())
      c.model = parse_model(read_json_file(c.resolve(m.get<std::string>()), "model"), "model");
    else
      c.model = parse_model(m, "model");
  }
  if (j.contains("models")) {
    const auto& ms = j.at("models");
    if (!ms.is_array()) throw ConfigError("models", "must be an array of model objects or file paths");
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const auto f = "models[" + std::to_string(k) + "]";
      if (ms[k].is_string())
        c.models.push_back(parse_model(read_json_file(c.resolve(ms[k].get<std::string>()), f), f));
      else
        c.models.push_back(parse_model(ms[k], f));
    }
  }
  if (j.contains("pairs")) detail::parse_pairs(c, j.at("pairs"));
  if (j.contains("fit")) detail::parse_fit(c, j.at("fit"));
  if (j.contains("simulate")) detail::parse_simulate(c, j.at("simulate"));
  if (j.contains("extcoef")) detail::parse_extcoef(c, j.at("extcoef"));
  if (j.contains("rlevel")) detail::parse_rlevel(c, j.at("rlevel"));
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  const auto j = read_json_file(path, "config");
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  return parse_config(j, path.parent_path());
}

/// Resolves a pair policy against loaded sites.
inline inference::PairSelection pair_selection(const PairSpec& p, const covmodel::SiteSet& sites) {
  if (p.policy == "closest") return inference::PairSelection::closest(p.fraction);
  if (p.policy == "list") {
    std::map<std::string, std::size_t> idx;
    for (std::size_t j = 0; j < sites.size(); ++j) idx[sites.ids[j]] = j;
    std::vector<inference::PairIndex> out;
    for (std::size_t k = 0; k < p.list.size(); ++k) {
      auto find = [&](const std::string& id) {
        const auto it = idx.find(id);
        if (it == idx.end())
          throw ConfigError("pairs.list[" + std::to_string(k) + "]", "unknown station id '" + id + "'");
        return it->second;
      };
      out.push_back({find(p.list[k].first), find(p.list[k].second)});
    }
    return inference::PairSelection::listed(std::move(out));
  }
  return inference::PairSelection::all_pairs();
}

}  // namespace nsmaxstab::io
