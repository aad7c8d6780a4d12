#include <gtest/gtest.h>

#include <cmath>

#include "ndsense/error.hpp"
#include "ndsense/media.hpp"
#include "ndsense/random.hpp"
#include "ndsense/rheology.hpp"
#include "oracles.hpp"

using namespace ndsense;

namespace {

std::vector<double> increments(const Trajectory& t, int axis) {
  std::vector<double> d;
  for (std::size_t i = 1; i < t.size(); ++i) d.push_back(component(t.points[i], axis) - component(t.points[i - 1], axis));
  return d;
}

}  // namespace

TEST(Brownian, ZeroDiffusionStaysPut) {
  const Trajectory t = simulate_brownian(0.0, 100, 0.01, 1, {1, 2, 3});
  ASSERT_EQ(t.size(), 101u);
  for (const auto& p : t.points) EXPECT_EQ(p, (Vec3{1, 2, 3}));
}

TEST(Brownian, RejectsBadInputs) {
  EXPECT_THROW(simulate_brownian(-1.0, 10, 0.01, 1), ValidationError);
  EXPECT_THROW(simulate_brownian(1.0, 0, 0.01, 1), ValidationError);
  EXPECT_THROW(simulate_brownian(1.0, 10, 0.0, 1), ValidationError);
  EXPECT_THROW(simulate_brownian(NAN, 10, 0.01, 1), ValidationError);
}

TEST(Brownian, DeterministicGivenSeed) {
  const Trajectory a = simulate_brownian(100.0, 500, 0.01, 42), b = simulate_brownian(100.0, 500, 0.01, 42);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, simulate_brownian(100.0, 500, 0.01, 43).points);
}

TEST(Brownian, IncrementsAreGaussianWithCorrectVarianceAndIndependentAxes) {
  const double D = 2e3, dt = 9.6e-3;
  const std::size_t n = 340000;
  const Trajectory t = simulate_brownian(D, n, dt, 7);
  std::vector<double> all;
  for (int a = 0; a < 3; ++a) {
    const auto d = increments(t, a);
    EXPECT_NEAR(oracle::variance(d) / (2 * D * dt), 1.0, 0.01);
    all.insert(all.end(), d.begin(), d.end());
  }
  double m2 = 0.0, m4 = 0.0;
  for (double v : all) {
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m2 /= all.size();
  m4 /= all.size();
  EXPECT_LT(std::abs(m4 / (m2 * m2) - 3.0), 0.1);

  const auto dx = increments(t, 0), dy = increments(t, 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    sxy += dx[i] * dy[i];
    sxx += dx[i] * dx[i];
    syy += dy[i] * dy[i];
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Brownian, EnsembleMsdSlopeIsFourD) {
  const double D = 1e4, dt = 0.01;
  const auto ens = brownian_ensemble(D, 10000, dt, 11, 100);
  const MsdCurve c = ensemble_msd(ens, Axes::xy(), log_spaced_lags(100, 12));
  const DiffusionFit f = fit_diffusion(c, 0.0, 1.0);
  EXPECT_NEAR(f.D, D, 3 * f.sigma);
  EXPECT_LT(f.sigma / D, 0.05);
}

TEST(Brownian, EnsembleMembersUseDerivedSeeds) {
  const auto ens = brownian_ensemble(10.0, 50, 0.1, 5, 3);
  EXPECT_EQ(ens[2].points, simulate_brownian(10.0, 50, 0.1, derive_seed(5, "medium", 2)).points);
}

TEST(Viscosity, LinearModel) {
  ViscousMediumModel m;
  EXPECT_DOUBLE_EQ(viscosity_at(m, 35.0), 0.301);
  EXPECT_NEAR(viscosity_at(m, 40.0) - viscosity_at(m, 30.0), 10 * m.mu, 1e-12);
  m.mu = 0.0;
  EXPECT_DOUBLE_EQ(viscosity_at(m, 22.0), viscosity_at(m, 44.0));
  EXPECT_THROW(viscosity_at(m, 50.0), ValidationError);
}

TEST(Viscosity, NonPositiveOverRangeIsInvalid) {
  ViscousMediumModel m;
  m.mu = -0.05;  // reaches zero inside [21, 45]
  EXPECT_THROW(m.validate(), ValidationError);
  EXPECT_THROW(viscosity_at(m, 45.0), ValidationError);
}

TEST(StokesEinstein, ReferenceValueAndScaling) {
  // k_B T / (6 π r η) evaluated independently: 9377.68 nm²/s.
  EXPECT_NEAR(stokes_einstein_D(294.15, 25.0, 0.919), 9377.6818, 1e-3);
  EXPECT_DOUBLE_EQ(stokes_einstein_D(300, 28, 0.2) / stokes_einstein_D(300, 28, 0.4), 2.0);
  EXPECT_NEAR(stokes_einstein_radius(300.0, stokes_einstein_D(300.0, 28.0, 0.3), 0.3), 28.0, 1e-9);
  EXPECT_THROW(stokes_einstein_D(0.0, 25, 0.9), ValidationError);
  EXPECT_THROW(stokes_einstein_D(300, -1, 0.9), ValidationError);
}

TEST(Viscoelastic, UnitExponentIsBrownian) {
  const ViscoelasticModel m{1.0, 500.0};
  EXPECT_EQ(simulate_viscoelastic(m, 300, 0.01, 3).points, simulate_brownian(500.0, 300, 0.01, 3).points);
}

TEST(Viscoelastic, RejectsExponentOutsideRange) {
  EXPECT_THROW(simulate_viscoelastic({0.0, 1.0}, 10, 0.01, 1), ValidationError);
  EXPECT_THROW(simulate_viscoelastic({2.1, 1.0}, 10, 0.01, 1), ValidationError);
}

class ExponentScaling : public ::testing::TestWithParam<double> {};

TEST_P(ExponentScaling, EnsembleMsdSlopeMatches) {
  const double alpha = GetParam(), K = 1e3, dt = 0.01;
  const auto ens = viscoelastic_ensemble({alpha, K}, 10000, dt, 21, 100);
  const MsdCurve c = ensemble_msd(ens, Axes::only_x(), log_spaced_lags(1000, 20));
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < c.size(); ++i) {
    lx.push_back(std::log(c.taus[i]));
    ly.push_back(std::log(c.msd[i]));
  }
  EXPECT_NEAR(oracle::slope(lx, ly), alpha, 0.05);
  // Amplitude: per-axis MSD = 2 K τ^α at the first lag.
  EXPECT_NEAR(c.msd[0] / (2 * K * std::pow(c.taus[0], alpha)), 1.0, 0.05);
}

INSTANTIATE_TEST_SUITE_P(Alphas, ExponentScaling, ::testing::Values(0.3, 0.5, 1.0, 1.5, 1.65));

TEST(InjectDirected, IdentityCases) {
  const Trajectory t = simulate_brownian(100.0, 200, 0.01, 4);
  EXPECT_EQ(inject_directed(t, {}).points, t.points);
  EXPECT_EQ(inject_directed(t, {{10, 50, {0, 0, 0}}}).points, t.points);
}

TEST(InjectDirected, AddsDriftInsideAndKeepsOffsetAfter) {
  Trajectory t;
  t.dt = 0.1;
  t.points.assign(101, Vec3{});
  const Trajectory d = inject_directed(t, {{20, 30, {10, 0, 0}}});
  EXPECT_EQ(d.points[20].x, 0.0);
  EXPECT_NEAR(d.points[35].x, 15.0, 1e-12);
  EXPECT_NEAR(d.points[50].x, 30.0, 1e-12);
  EXPECT_NEAR(d.points[100].x, 30.0, 1e-12);
}

TEST(InjectDirected, RejectsOverlapAndOutOfBounds) {
  const Trajectory t = simulate_brownian(1.0, 100, 0.01, 1);
  EXPECT_THROW(inject_directed(t, {{10, 20, {1, 0, 0}}, {25, 10, {1, 0, 0}}}), ValidationError);
  EXPECT_THROW(inject_directed(t, {{90, 20, {1, 0, 0}}}), ValidationError);
  EXPECT_THROW(inject_directed(t, {{10, 0, {1, 0, 0}}}), ValidationError);
}
