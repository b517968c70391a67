#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nsmaxstab/empirical.hpp"
#include "nsmaxstab/simulate.hpp"

using namespace nsmaxstab;
using namespace nsmaxstab::empirical;

namespace {

std::vector<double> frechet_sample(std::size_t n, std::uint64_t seed) {
  mathkit::RngStream rng(seed, 0);
  std::vector<double> z(n);
  for (double& v : z) v = -1.0 / std::log(rng.uniform());
  return z;
}

// correlation giving the pair coefficient theta for df, by bisection on the
// closed form
double rho_for_theta(double theta, double df) {
  double lo = -0.999, hi = 0.999999;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (extremal::extremal_t_theta(mid, df) > theta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// two sites whose correlation under exp(-h / omega) is rho
inference::Dataset pair_data(double rho, double df, std::size_t n, std::uint64_t seed) {
  const double h = -std::log(rho);
  auto sites = covmodel::SiteSet::from_coordinates({{0.0, 0.0}, {h, 0.0}});
  const extremal::ExtremalT e{df, covmodel::CorrelationComponent{covmodel::ParametricKernel{1.0, 0.0, 1.0},
                                                                 covmodel::BaseCorrelation(1.0)}};
  simulate::SimulationConfig c;
  c.replicates = n;
  c.seed = seed;
  inference::Dataset d;
  d.z = simulate::simulate_extremal_t(sites, e, c).values;
  d.sites = std::move(sites);
  return d;
}

}  // namespace

TEST(PseudoObservations, RanksWithTies) {
  const auto u = pseudo_observations({3.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(u[1], 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(u[3], 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(u[0], 3.5 / 5.0);
  EXPECT_DOUBLE_EQ(u[2], 3.5 / 5.0);
}

TEST(Madogram, IdenticalColumnsGiveOne) {
  const auto z = frechet_sample(500, 1);
  EXPECT_DOUBLE_EQ(theta_madogram(z, z), 1.0);
  EXPECT_NEAR(theta_cfg(z, z), 1.0, 1e-12);
}

TEST(Madogram, IndependenceGivesTwo) {
  const auto a = frechet_sample(10000, 2), b = frechet_sample(10000, 3);
  const double m = theta_madogram(a, b);
  EXPECT_GE(m, 1.9);
  EXPECT_LE(m, 2.0);
  EXPECT_NEAR(theta_cfg(a, b), 2.0, 0.05);
}

TEST(Madogram, TooFewObservations) {
  EXPECT_THROW(static_cast<void>(theta_madogram(frechet_sample(9, 1), frechet_sample(9, 2))), InsufficientData);
  auto d = pair_data(0.5, 5.0, 12, 4);
  for (std::size_t i = 0; i < 3; ++i) d.set_missing(i, 1);
  try {
    static_cast<void>(pairwise_theta_madogram(d, {0, 1}));
    FAIL();
  } catch (const InsufficientData& e) {
    EXPECT_NE(std::string(e.what()).find("9 joint"), std::string::npos);
  }
}

TEST(Estimators, MatchAnalyticTheta) {
  const double rho = rho_for_theta(1.5, 5.0);
  ASSERT_NEAR(extremal::extremal_t_theta(rho, 5.0), 1.5, 1e-9);
  const auto d = pair_data(rho, 5.0, 10000, 5);
  EXPECT_NEAR(pairwise_theta_madogram(d, {0, 1}), 1.5, 0.05);
  EXPECT_NEAR(pairwise_theta_cfg(d, {0, 1}), 1.5, 0.05);
}

TEST(Estimators, RankInvariance) {
  const auto d = pair_data(0.6, 5.0, 400, 6);
  auto t = d;
  for (std::size_t i = 0; i < t.replicates(); ++i) {
    t.z(i, 0) = std::log(t.z(i, 0)) * 3.0 + 7.0;
    t.z(i, 1) = std::pow(t.z(i, 1), 0.3);
  }
  EXPECT_EQ(pairwise_theta_madogram(d, {0, 1}), pairwise_theta_madogram(t, {0, 1}));
  EXPECT_EQ(pairwise_theta_cfg(d, {0, 1}), pairwise_theta_cfg(t, {0, 1}));
}

TEST(Estimators, AgreeAcrossPairs) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int k = 0; k < 20; ++k) {
    const auto d = pair_data(u(g), 5.0, 2000, 100 + k);
    EXPECT_NEAR(pairwise_theta_madogram(d, {0, 1}), pairwise_theta_cfg(d, {0, 1}), 0.05) << k;
  }
}

TEST(ThetaTable, InjectedValuesGiveZeroSse) {
  const auto d = pair_data(0.5, 5.0, 200, 8);
  const extremal::ExtremalT e{5.0, {}};
  auto r = fit_vs_empirical_sse(e, d);
  ASSERT_EQ(r.table.records.size(), 1u);
  for (auto& rec : r.table.records) rec.fitted = rec.empirical;
  EXPECT_EQ(r.table.sse(), 0.0);
  EXPECT_GE(r.table.truncated_fraction(), 0.0);
}

TEST(ThetaTable, TrueModelBeatsMisranged) {
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<covmodel::SiteCoordinate> c;
  for (int i = 0; i < 12; ++i) {
    const double x = u(g);
    c.push_back({x, u(g)});
  }
  const auto sites = covmodel::SiteSet::from_coordinates(c);
  auto model = [](double omega) {
    return extremal::ExtremalT{5.0, covmodel::CorrelationComponent{covmodel::ParametricKernel{omega, 0.0, 1.0},
                                                                   covmodel::BaseCorrelation(1.0)}};
  };
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    simulate::SimulationConfig cfg;
    cfg.replicates = 300;
    cfg.seed = 50 + seed;
    inference::Dataset d;
    d.sites = sites;
    d.z = simulate::simulate_extremal_t(sites, model(0.5), cfg).values;
    wins += fit_vs_empirical_sse(model(0.5), d).sse < fit_vs_empirical_sse(model(0.1), d).sse;
  }
  EXPECT_GE(wins, 8);
}
