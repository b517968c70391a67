#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "nsmaxstab/io/config.hpp"
#include "nsmaxstab/io/data.hpp"
#include "nsmaxstab/io/output.hpp"
#include "nsmaxstab/mathkit/statistics.hpp"

using namespace nsmaxstab;
using namespace nsmaxstab::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "nsmaxstab_test_io";
  fs::create_directories(d);
  return d / name;
}

fs::path write(const std::string& name, const std::string& text) {
  const auto p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

const char* kStations = "id,x,y,altitude\nA,0,0,1500\nB,1,0.5,2100\n";

}  // namespace

TEST(Ingest, OneMissingCell) {
  const auto sites = read_stations(write("st.csv", kStations));
  EXPECT_EQ(sites.size(), 2u);
  ASSERT_TRUE(sites.covariates.index_of("altitude"));
  const auto raw = read_maxima(write("mx.csv", "year,station_id,value\n2001,A,3\n2001,B,4\n2002,A,5\n2003,A,1\n"
                                               "2003,B,2\n"),
                               sites);
  ASSERT_EQ(raw.years.size(), 3u);
  EXPECT_EQ(std::count(raw.observed.begin(), raw.observed.end(), 0), 1);
  EXPECT_FALSE(raw.is_observed(1, 1));
  EXPECT_EQ(raw.counts(), (std::vector<std::size_t>{3, 2}));
}

TEST(Ingest, DuplicateRowIsError) {
  const auto sites = read_stations(write("st.csv", kStations));
  EXPECT_THROW(read_maxima(write("dup.csv", "year,station_id,value\n2001,A,3\n2001,A,4\n"), sites), InputError);
}

TEST(Ingest, UnknownStationNamesLine) {
  const auto sites = read_stations(write("st.csv", kStations));
  try {
    read_maxima(write("unk.csv", "year,station_id,value\n2001,A,3\n2001,Z,4\n"), sites);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("'Z'"), std::string::npos);
  }
  EXPECT_THROW(read_maxima(write("nan.csv", "year,station_id,value\n2001,A,abc\n"), sites), InputError);
}

TEST(Ingest, RoundTrip) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<covmodel::SiteCoordinate> c;
  mathkit::DenseMatrix cov(5, 2);
  for (int i = 0; i < 5; ++i) {
    const double x = u(g);
    c.push_back({x, u(g)});
    cov(i, 0) = 1000 + 2000 * u(g);
    cov(i, 1) = u(g) / 3.0;
  }
  auto sites = covmodel::SiteSet::from_coordinates(c);
  sites.covariates = covmodel::CovariateTable({"altitude", "slope"}, cov);
  inference::Dataset d;
  d.sites = sites;
  d.z = mathkit::DenseMatrix(7, 5);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) d.z(i, j) = -1.0 / std::log(u(g));
  d.set_missing(2, 3);
  d.z(2, 3) = 1.0;

  atomic_write(scratch("rt_st.csv"), stations_csv(d.sites));
  atomic_write(scratch("rt_mx.csv"), maxima_csv(as_raw(d), d.sites));
  const auto s2 = read_stations(scratch("rt_st.csv"));
  const auto d2 = frechet_dataset(read_maxima(scratch("rt_mx.csv"), s2), s2);
  EXPECT_EQ(s2.ids, d.sites.ids);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(s2.coords[j].x, d.sites.coords[j].x);
    EXPECT_EQ(s2.coords[j].y, d.sites.coords[j].y);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(s2.covariates.raw(j, k), d.sites.covariates.raw(j, k));
  }
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(d2.is_observed(i, j), d.is_observed(i, j));
      EXPECT_EQ(d2.z(i, j), d.z(i, j));
    }
}

TEST(Ingest, ProjectionScalesLongitude) {
  const Projection p{-105.0, 40.0, 100.0};
  const auto a = p.apply(-104.0, 40.0);
  const auto b = p.apply(-105.0, 41.0);
  const double deg = 6371.0 * std::numbers::pi / 180.0 / 100.0;
  EXPECT_NEAR(a.x, deg * std::cos(40.0 * std::numbers::pi / 180.0), 1e-12);
  EXPECT_NEAR(a.y, 0.0, 1e-12);
  EXPECT_NEAR(b.y, deg, 1e-12);
}

TEST(Transform, KnownUnitFrechetParamsAreIdentity) {
  const auto sites = read_stations(write("st.csv", kStations));
  RawMaxima raw;
  raw.years = {1, 2, 3};
  raw.values = mathkit::DenseMatrix(3, 2);
  raw.observed.assign(6, 1);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) raw.values(i, j) = 0.5 + i + 2.0 * j;
  const auto r = marginal_transform(raw, sites, {{"A", {1, 1, 1}}, {"B", {1, 1, 1}}});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(r.data.z(i, j), raw.values(i, j), 1e-12);
}

TEST(Transform, GumbelShapeNearZero) {
  mathkit::RngStream rng(2, 0);
  RawMaxima raw;
  const std::size_t n = 1000;
  raw.values = mathkit::DenseMatrix(n, 2);
  raw.observed.assign(2 * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    raw.years.push_back(long(i));
    raw.values(i, 0) = -std::log(-std::log(rng.uniform()));
    raw.values(i, 1) = 10.0 + 2.0 * (std::pow(-std::log(rng.uniform()), -0.2) - 1.0) / 0.2;
  }
  const auto sites = covmodel::SiteSet::from_coordinates({{0, 0}, {1, 0}});
  const auto r = marginal_transform(raw, sites);
  EXPECT_TRUE(r.margins[0].fitted);
  EXPECT_NEAR(r.margins[0].params.xi, 0.0, 0.1);
  EXPECT_NEAR(r.margins[1].params.xi, 0.2, 0.1);
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = r.data.z(i, j);
    EXPECT_LT(mathkit::ks_statistic(col, [](double z) { return std::exp(-1.0 / z); }),
              mathkit::ks_critical_value(n, 0.01));
  }
}

TEST(Transform, ShortSeriesDropped) {
  RawMaxima raw;
  raw.values = mathkit::DenseMatrix(30, 3, 2.0);
  raw.observed.assign(90, 1);
  mathkit::RngStream rng(3, 0);
  for (std::size_t i = 0; i < 30; ++i) {
    raw.years.push_back(long(i));
    for (std::size_t j = 0; j < 3; ++j) raw.values(i, j) = -std::log(-std::log(rng.uniform()));
    if (i >= 10) raw.observed[i * 3 + 2] = 0;
  }
  const auto sites = covmodel::SiteSet::from_coordinates({{0, 0}, {1, 0}, {2, 0}});
  const auto r = marginal_transform(raw, sites);
  EXPECT_EQ(r.data.stations(), 2u);
  EXPECT_TRUE(r.margins[2].dropped);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("s3"), std::string::npos);
}

TEST(Config, ParsesModelAndNamesBadFields) {
  const auto m = parse_model(json::parse(R"({"name":"m11","mixture":"sum","covariates":{"omega_x":["altitude"],
      "a":["altitude"]},"parameters":{"alpha":0.7},"fixed":["alpha2"]})"));
  EXPECT_EQ(m.params.size(), m.tmpl.parameter_count() + 1);  // df is carried but fixed
  EXPECT_DOUBLE_EQ(m.params["alpha"], 0.7);
  EXPECT_TRUE(m.params.at("alpha2").fixed);

  auto field_of = [](const char* text) {
    try {
      static_cast<void>(parse_config(json::parse(text), "."));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  EXPECT_EQ(field_of(R"({"model":{"kernel":"wavy"}})"), "model.kernel");
  EXPECT_EQ(field_of(R"({"model":{"parameters":{"beta9":1}}})"), "model.parameters.beta9");
  EXPECT_EQ(field_of(R"({"model":{"parameters":{"alpha":3}}})"), "model.parameters.alpha");
  EXPECT_EQ(field_of(R"({"pairs":{"policy":"closest","fraction":0}})"), "pairs.fraction");
  EXPECT_EQ(field_of(R"({"fit":{"restart":2}})"), "fit.restart");
  EXPECT_EQ(field_of(R"({"rlevel":{"regions":[{"x0":0,"x1":0.23,"y0":0,"y1":1}]}})"), "rlevel.regions[0]");

  const auto sites = read_stations(write("st.csv", kStations));
  const auto bad = parse_model(json::parse(R"({"covariates":{"omega_x":["altitude","elevation"]}})"));
  try {
    check_covariates(bad, sites.covariates, "model");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "model.covariates.omega_x[1]");
  }
}

TEST(Config, DefaultParameterCountsOfZoo) {
  // covariates: altitude, longitude, latitude
  const std::vector<std::pair<const char*, std::size_t>> zoo{
      {R"({})", 2},
      {R"({"kernel":"parametric"})", 3},
      {R"({"isotropic":false})", 4},
      {R"({"covariates":{"omega_x":["altitude"]}})", 3},
      {R"({"isotropic":false,"covariates":{"omega_x":["altitude"],"omega_y":["altitude"]}})", 6},
      {R"({"mixture":"sum","covariates":{"omega_x":["altitude"],"a":["altitude"]}})", 6},
  };
  for (const auto& [text, n] : zoo) EXPECT_EQ(parse_model(json::parse(text)).tmpl.parameter_count(), n) << text;
}

TEST(Output, HashIsKeyOrderInvariant) {
  const auto a = json::parse(R"({"seed":1,"model":{"kernel":"parametric","df":5}})");
  const auto b = json::parse(R"({"model":{"df":5,"kernel":"parametric"},"seed":1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(json::parse(R"({"seed":2})")));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Output, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 2.0}) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Config, ZooFilesMatchTheirParameterCounts) {
  const std::filesystem::path zoo = std::filesystem::path(NSMAXSTAB_SOURCE_DIR) / "configs/zoo";
  const std::vector<std::size_t> counts{2, 4, 3, 4, 5, 6, 8, 10, 5, 7, 6, 7, 8, 9, 11, 13};
  for (std::size_t k = 0; k < counts.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "model%02zu.json", k + 1);
    const auto m = parse_model(read_json_file(zoo / name, name), name);
    EXPECT_EQ(m.tmpl.parameter_count(), counts[k]) << name;
    EXPECT_EQ(m.tmpl.mixture != inference::MixtureKind::none, k >= 8) << name;
  }
}
