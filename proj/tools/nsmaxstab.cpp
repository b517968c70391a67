// nsmaxstab <simulate|fit|ic|extcoef|rlevel|transform> --config <path> [--seed N] [--out DIR]

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsmaxstab/empirical.hpp"
#include "nsmaxstab/inference.hpp"
#include "nsmaxstab/io/config.hpp"
#include "nsmaxstab/io/data.hpp"
#include "nsmaxstab/io/output.hpp"
#include "nsmaxstab/returnlevel.hpp"
#include "nsmaxstab/simulate.hpp"

namespace fs = std::filesystem;
using namespace nsmaxstab;
using io::json;

namespace {

enum Exit { ok = 0, runtime_failure = 1, config_failure = 2, input_failure = 3 };

struct Context {
  std::string command;
  io::RunConfig config;
  json resolved;  // config as run, with the effective seed
  json provenance;

  [[nodiscard]] fs::path out(const std::string& name) const { return config.out / name; }
  void write(const std::string& name, const std::string& text) const { io::atomic_write(out(name), text); }
  void write_json(const std::string& name, json j) const {
    j["provenance"] = provenance;
    write(name, io::dump(j));
  }
};

covmodel::SiteSet load_sites(const io::RunConfig& c) {
  if (!c.data.stations) throw io::ConfigError("data.stations", "is required for this command");
  return io::read_stations(*c.data.stations, c.data.projection);
}

struct Loaded {
  inference::Dataset data;
  std::vector<std::string> warnings;
};

Loaded load_dataset(const io::RunConfig& c) {
  const auto sites = load_sites(c);
  if (!c.data.maxima) throw io::ConfigError("data.maxima", "is required for this command");
  const auto raw = io::read_maxima(*c.data.maxima, sites);
  Loaded l;
  if (c.data.margins == "frechet") {
    l.data = io::frechet_dataset(raw, sites);
  } else {
    auto t = io::marginal_transform(raw, sites, c.data.margins == "given" ? c.data.gev : decltype(c.data.gev){});
    l.data = std::move(t.data);
    l.warnings = std::move(t.warnings);
  }
  return l;
}

inference::FitOptions fit_options(const io::RunConfig& c) {
  auto o = c.fit.options;
  o.seed = c.seed;
  return o;
}

inference::ParameterVector starting_values(const io::ModelSpec& m, const inference::Dataset& d,
                                           const inference::PairSelection& policy, const io::RunConfig& c) {
  if (!c.fit.default_start) return m.params;
  return inference::default_start(m.tmpl, d, inference::select_pairs(policy, d.sites), 0, m.params);
}

json model_json(const io::ModelSpec& m) { return {{"name", m.name}, {"spec", m.source}}; }

int run_simulate(const Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = c.require_model();
  covmodel::SiteSet sites;
  if (c.sites.stations) {
    sites = io::read_stations(*c.sites.stations, c.data.projection);
  } else if (c.sites.grid) {
    sites = covmodel::SiteSet::regular_grid(*c.sites.grid);
  } else if (c.sites.random_count > 0) {
    mathkit::RngStream rng(c.sites.random_seed, 0);
    std::vector<covmodel::SiteCoordinate> pts;
    const auto& b = c.sites.box;
    for (std::size_t k = 0; k < c.sites.random_count; ++k) {
      const double x = b[0] + (b[1] - b[0]) * rng.uniform();
      pts.push_back({x, b[2] + (b[3] - b[2]) * rng.uniform()});
    }
    sites = covmodel::SiteSet::from_coordinates(std::move(pts));
  } else if (c.data.stations) {
    sites = load_sites(c);
  } else {
    throw io::ConfigError("sites", "simulate needs sites (stations, grid or random) or data.stations");
  }
  io::check_covariates(m, sites.covariates, "model");

  simulate::SimulationConfig sc;
  sc.replicates = c.simulate.replicates;
  sc.seed = c.seed;
  sc.method = c.simulate.method;
  sc.max_spectral = c.simulate.max_spectral;
  sc.slack = c.simulate.slack;
  const auto model = m.tmpl.build(m.params, sites.covariates);
  simulate::FieldRealizations f;
  if (c.simulate.process == "smith_stephenson") {
    const auto* e = std::get_if<extremal::ExtremalT>(&model);
    const auto* comp = e ? std::get_if<covmodel::CorrelationComponent>(&e->correlation) : nullptr;
    if (!comp) throw io::ConfigError("simulate.process", "smith_stephenson needs a model without mixture");
    simulate::StormWindow w;
    w.padding = c.simulate.padding;
    f = simulate::simulate_smith_stephenson(sites, comp->kernel, w, sc);
  } else {
    f = simulate::simulate_extremal_t(sites, model, sc);
  }

  inference::Dataset d;
  d.sites = sites;
  d.z = f.values;
  auto raw = io::as_raw(d);
  for (auto& y : raw.years) y += c.simulate.first_year - 1;
  ctx.write("stations.csv", io::stations_csv(sites));
  ctx.write("fields.csv", io::fields_csv(f));
  ctx.write("maxima.csv", io::maxima_csv(raw, sites));
  ctx.write_json("simulate.json", {{"command", "simulate"},
                                   {"model", model_json(m)},
                                   {"parameters", io::parameters_json(m.params)},
                                   {"sites", sites.size()},
                                   {"replicates", f.replicates()},
                                   {"process", c.simulate.process},
                                   {"simulation", io::simulation_provenance(f.provenance)},
                                   {"config", ctx.resolved}});
  return ok;
}

int run_fit(const Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = c.require_model();
  auto loaded = load_dataset(c);
  const auto& d = loaded.data;
  io::check_covariates(m, d.sites.covariates, "model");
  const auto policy = io::pair_selection(c.pairs, d.sites);
  const auto start = starting_values(m, d, policy, c);
  auto r = inference::fit(d, m.tmpl, start, policy, fit_options(c));
  r.warnings.insert(r.warnings.begin(), loaded.warnings.begin(), loaded.warnings.end());
  std::optional<inference::BootstrapResult> boot;
  if (c.fit.bootstrap > 0) {
    inference::BootstrapOptions bo;
    bo.resamples = c.fit.bootstrap;
    bo.seed = c.seed;
    bo.block_length = c.fit.block_length;
    bo.level = c.fit.level;
    bo.fit.optimizer = c.fit.options.optimizer;
    boot = inference::bootstrap_ci(d, m.tmpl, r.estimate, policy, bo);
  }
  auto j = io::fit_json(r, m.name, boot ? &*boot : nullptr);
  j["command"] = "fit";
  j["config"] = ctx.resolved;
  ctx.write_json("fit.json", j);
  return ok;
}

int run_ic(const Context& ctx) {
  const auto& c = ctx.config;
  if (c.models.empty()) throw io::ConfigError("models", "ic needs a non-empty model list");
  auto loaded = load_dataset(c);
  const auto& d = loaded.data;
  for (std::size_t k = 0; k < c.models.size(); ++k)
    io::check_covariates(c.models[k], d.sites.covariates, "models[" + std::to_string(k) + "]");
  const auto policy = io::pair_selection(c.pairs, d.sites);
  std::ostringstream csv;
  csv << "model,parameters,loglik,penalty,clic,cbic,converged\n";
  json fits = json::array();
  for (const auto& m : c.models) {
    const auto r = inference::fit(d, m.tmpl, starting_values(m, d, policy, c), policy, fit_options(c));
    csv << io::csv_field(m.name) << ',' << r.names.size() << ',' << io::format_double(r.loglik) << ','
        << io::format_double(r.has_sandwich ? r.sandwich.penalty : std::nan("")) << ',' << io::format_double(r.clic)
        << ',' << io::format_double(r.cbic) << ',' << int(r.converged) << '\n';
    fits.push_back(io::fit_json(r, m.name));
  }
  ctx.write("ic.csv", csv.str());
  ctx.write_json("ic.json", {{"command", "ic"}, {"fits", fits}, {"warnings", loaded.warnings}, {"config", ctx.resolved}});
  return ok;
}

int run_extcoef(const Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = c.require_model();
  auto loaded = load_dataset(c);
  const auto& d = loaded.data;
  io::check_covariates(m, d.sites.covariates, "model");
  auto params = m.params;
  json fit_block = nullptr;
  if (c.extcoef.refit) {
    const auto policy = io::pair_selection(c.pairs, d.sites);
    const auto r = inference::fit(d, m.tmpl, starting_values(m, d, policy, c), policy, fit_options(c));
    params = r.estimate;
    fit_block = io::fit_json(r, m.name);
  }
  std::vector<inference::PairIndex> pairs;
  if (c.pairs.policy != "all") pairs = inference::select_pairs(io::pair_selection(c.pairs, d.sites), d.sites);
  const auto res = empirical::fit_vs_empirical_sse(m.tmpl.build(params, d.sites.covariates), d, c.extcoef.estimator, pairs);
  ctx.write("theta_pairs.csv", io::theta_table_csv(res.table, d.sites));
  ctx.write_json("extcoef.json", {{"command", "extcoef"},
                                  {"model", model_json(m)},
                                  {"estimator", empirical::estimator_name(c.extcoef.estimator)},
                                  {"pairs", res.table.records.size()},
                                  {"sse", io::number(res.sse)},
                                  {"truncated_fraction", res.table.truncated_fraction()},
                                  {"parameters", io::parameters_json(params)},
                                  {"fit", fit_block},
                                  {"warnings", loaded.warnings},
                                  {"config", ctx.resolved}});
  return ok;
}

int run_rlevel(const Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = c.require_model();
  if (c.rlevel.regions.empty()) throw io::ConfigError("rlevel.regions", "must list at least one region");
  simulate::SimulationConfig sc;
  sc.replicates = c.rlevel.replicates;
  sc.seed = c.seed;
  sc.method = c.simulate.method;
  sc.max_spectral = c.simulate.max_spectral;
  sc.slack = c.simulate.slack;
  std::vector<returnlevel::ReturnLevelCurve> curves;
  std::vector<std::string> warnings;
  json regions = json::array();
  for (const auto& reg : c.rlevel.regions) {
    const auto pixels = reg.pixels();
    io::check_covariates(m, pixels.covariates, "model");
    const auto s = returnlevel::simulate_functionals(m.tmpl.build(m.params, pixels.covariates), reg, sc,
                                                     c.rlevel.scale, c.rlevel.batch);
    const auto th = returnlevel::areal_extremal_coefficient(s);
    auto cv = returnlevel::return_level_curves(s, c.rlevel.periods, &warnings);
    curves.insert(curves.end(), cv.begin(), cv.end());
    regions.push_back({{"id", reg.id},
                       {"pixels", pixels.size()},
                       {"area", reg.area()},
                       {"theta", io::number(th.level)},
                       {"theta_se", io::number(th.se)},
                       {"simulation", io::simulation_provenance(s.provenance)}});
  }
  ctx.write("curves.csv", io::curves_csv(curves));
  ctx.write_json("rlevel.json", {{"command", "rlevel"},
                                 {"model", model_json(m)},
                                 {"regions", regions},
                                 {"warnings", warnings},
                                 {"config", ctx.resolved}});
  return ok;
}

int run_transform(const Context& ctx) {
  const auto& c = ctx.config;
  const auto sites = load_sites(c);
  if (!c.data.maxima) throw io::ConfigError("data.maxima", "is required for this command");
  const auto raw = io::read_maxima(*c.data.maxima, sites);
  if (c.data.margins == "frechet")
    throw io::ConfigError("data.margins", "transform needs margins 'fit' or 'given'");
  const auto t = io::marginal_transform(raw, sites, c.data.margins == "given" ? c.data.gev : decltype(c.data.gev){});
  auto out = io::as_raw(t.data);
  out.years = t.years;
  ctx.write("margins.csv", io::margins_csv(t.margins));
  ctx.write("frechet_maxima.csv", io::maxima_csv(out, t.data.sites));
  json counts = json::object();
  const auto n = raw.counts();
  for (std::size_t j = 0; j < sites.size(); ++j) counts[sites.ids[j]] = n[j];
  ctx.write_json("transform.json", {{"command", "transform"},
                                    {"stations_kept", t.data.stations()},
                                    {"years", t.years.size()},
                                    {"counts", counts},
                                    {"warnings", t.warnings},
                                    {"config", ctx.resolved}});
  return ok;
}

int report(const std::string& command, const fs::path& out, int code, const std::string& kind,
           const std::string& message, const std::string& field = {}) {
  const auto j = io::error_json(command, kind, message, field);
  std::cerr << "nsmaxstab " << command << ": " << message << '\n';
  try {
    io::atomic_write(out / "error.json", io::dump(j));
  } catch (const std::exception&) {
    std::cerr << io::dump(j);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-stationary extremal-t max-stable models"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  for (const char* name : {"simulate", "fit", "ic", "extcoef", "rlevel", "transform"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "overrides the configured seed");
    sub->add_option("--out", out_dir, "output directory");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  fs::path out = out_dir ? fs::path(*out_dir) : fs::path("out");
  Context ctx;
  ctx.command = command;
  try {
    ctx.config = io::load_config(config_path);
    if (seed) ctx.config.seed = *seed;
    if (out_dir) ctx.config.out = *out_dir;
    out = ctx.config.out;
    ctx.resolved = ctx.config.raw;
    ctx.resolved["seed"] = ctx.config.seed;
    ctx.resolved.erase("out");
    ctx.provenance = io::provenance(command, ctx.resolved, ctx.config.seed);
    std::cout << json{{"command", command},
                      {"seed", ctx.config.seed},
                      {"config_hash", ctx.provenance["config_hash"]},
                      {"out", out.string()},
                      {"config", ctx.resolved}}
                     .dump()
              << '\n';
    fs::remove(out / "error.json");
    if (command == "simulate") return run_simulate(ctx);
    if (command == "fit") return run_fit(ctx);
    if (command == "ic") return run_ic(ctx);
    if (command == "extcoef") return run_extcoef(ctx);
    if (command == "rlevel") return run_rlevel(ctx);
    return run_transform(ctx);
  } catch (const io::ConfigError& e) {
    return report(command, out, config_failure, "config", e.what(), e.field());
  } catch (const io::InputError& e) {
    return report(command, out, input_failure, "input", e.what());
  } catch (const std::exception& e) {
    return report(command, out, runtime_failure, "runtime", e.what());
  }
}
