#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndsense/error.hpp"
#include "ndsense/media.hpp"
#include "ndsense/random.hpp"
#include "ndsense/rheology.hpp"
#include "ndsense/tracker.hpp"

using namespace ndsense;

namespace {

const double kPi = 3.14159265358979323846;

Trajectory stationary(double duration, double dt = 1.2e-3) {
  Trajectory t;
  t.dt = dt;
  t.points.assign(static_cast<std::size_t>(duration / dt) + 1, Vec3{});
  return t;
}

/// Noiseless frame for an emitter at `offset` from the orbit centre, integrating each bin finely.
OrbitFrame noiseless_frame(const TrackerConfig& cfg, Vec3 offset) {
  const PlaneRates rates = center_rates(cfg, 1e6);
  OrbitFrame f;
  const int sub = 200;
  for (int n = 0; n < cfg.n_bins; ++n) {
    double top = 0.0, bottom = 0.0;
    for (int s = 0; s < sub; ++s) {
      const double th = 2 * kPi * (n + (s + 0.5) / sub) / cfg.n_bins;
      const Vec3 beam{cfg.R_xy * std::cos(th), cfg.R_xy * std::sin(th), 0.0};
      top += expected_rate(offset, beam, Plane::top, cfg, rates.top, rates.bottom);
      bottom += expected_rate(offset, beam, Plane::bottom, cfg, rates.top, rates.bottom);
    }
    f.counts_top.push_back(top / sub);
    f.counts_bottom.push_back(bottom / sub);
  }
  return f;
}

TrackerConfig noise_free() {
  TrackerConfig c;
  c.shot_noise = false;
  return c;
}

}  // namespace

TEST(TrackerConfig, DerivedGeometry) {
  const TrackerConfig c;
  EXPECT_DOUBLE_EQ(c.eps_xy(), 338.0);
  EXPECT_DOUBLE_EQ(c.eps_z(), 50.0);
  EXPECT_NEAR(static_cast<double>(c.samples_per_bin() * c.n_bins) * c.clock, c.T_orbit, 1e-15);
  TrackerConfig bad;
  bad.T_orbit = 9.65e-3;  // not a whole number of 10 µs samples per bin
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = TrackerConfig{};
  bad.G = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(ExpectedRate, TransverseFactorOnOrbit) {
  const TrackerConfig c;
  const double on = expected_rate({}, {50, 0, 0}, Plane::top, c, 1.0, 1.0);
  const double centre = expected_rate({}, {0, 0, 0}, Plane::top, c, 1.0, 1.0);
  EXPECT_NEAR(on / centre, 0.9287047, 1e-7);  // exp(−2·50²/260²)
}

TEST(ExpectedRate, RadialSymmetryAndTail) {
  const TrackerConfig c;
  const double r0 = expected_rate({}, {50, 0, 0}, Plane::bottom, c, 1.0, 1.0);
  for (double th = 0.1; th < 6.3; th += 0.7)
    EXPECT_NEAR(expected_rate({}, {50 * std::cos(th), 50 * std::sin(th), 0}, Plane::bottom, c, 1.0, 1.0), r0, 1e-15);
  EXPECT_LT(expected_rate({3000, 0, 0}, {50, 0, 0}, Plane::top, c, 1.0, 1.0), 1e-50);
}

TEST(FitOrbit, SymmetricFrame) {
  const TrackerConfig c;
  OrbitFrame f{std::vector<double>(8, 100.0), std::vector<double>(8, 100.0), {}};
  const FitResult r = fit_orbit(f, c);
  EXPECT_NEAR(r.delta, 0.0, 1e-14);
  EXPECT_EQ(r.r_axial, 0.0);
  EXPECT_DOUBLE_EQ(r.I_prime, 200.0);
}

TEST(FitOrbit, AxialRatioDefinition) {
  const TrackerConfig c;
  OrbitFrame f{std::vector<double>(8, 112.5), std::vector<double>(8, 137.5), {}};
  EXPECT_DOUBLE_EQ(fit_orbit(f, c).r_axial, 0.1);  // totals 900 vs 1100
}

TEST(FitOrbit, EmptyFrameIsLossOfSignal) {
  const TrackerConfig c;
  OrbitFrame f{std::vector<double>(8, 0.0), std::vector<double>(8, 0.0), {}};
  EXPECT_THROW(fit_orbit(f, c), NoSignalError);
}

TEST(FitOrbit, RecoversDisplacementFromForwardModel) {
  const TrackerConfig c;
  const FitResult r = fit_orbit(noiseless_frame(c, {20, 0, 0}), c);
  EXPECT_NEAR(r.delta * c.eps_xy(), 20.0, 2.0);
  EXPECT_NEAR(r.phi, 0.0, 0.1);
  EXPECT_GT(r.phi, -kPi);
  EXPECT_LE(r.phi, kPi);
}

TEST(Correction, ClosedFormCases) {
  const TrackerConfig c;
  EXPECT_EQ(correction({1.0, 0.0, 0.3, 0.0}, c), (Vec3{0, 0, 0}));
  EXPECT_NEAR(correction({1.0, 0.0, 0.0, -0.1}, c).z, 5.0, 1e-12);
  const Vec3 d = correction({1.0, 0.059, 0.0, 0.0}, c);
  EXPECT_NEAR(d.x, 19.942, 1e-9);
  EXPECT_EQ(d.y, 0.0);
  TrackerConfig g = c;
  g.G = 0.5;
  EXPECT_THROW(correction({1.0, 0.0, 0.0, 2.0}, g), SingularError);
}

TEST(Correction, PointsTowardsTheEmitter) {
  const TrackerConfig c;
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 off{u(rng), u(rng), 0.5 * u(rng)};
    if (off.norm() < 1.0) continue;
    const Vec3 d = correction(fit_orbit(noiseless_frame(c, off), c), c);
    EXPECT_GT(dot(d, off), 0.0);
  }
}

TEST(Correction, LinearisationErrorBounded) {
  const TrackerConfig c;
  for (double r : {5.0, 20.0, 40.0, 65.0}) {
    for (double th = 0.0; th < 2 * kPi; th += kPi / 5) {
      const Vec3 off{r * std::cos(th), r * std::sin(th), 0.0};
      const Vec3 d = correction(fit_orbit(noiseless_frame(c, off), c), c);
      EXPECT_LE((d - off).norm(), 0.15 * r) << "r=" << r << " th=" << th;
    }
  }
}

class ClosedLoop : public ::testing::TestWithParam<double> {};

TEST_P(ClosedLoop, ConvergesFromHalfPsfOffset) {
  TrackerConfig c = noise_free();
  c.G = GetParam();
  for (double th : {0.0, 1.0, 2.5, 4.0}) {
    c.initial_offset = {130 * std::cos(th), 130 * std::sin(th), 0.0};
    const TrackResult r = track(stationary(0.2), c, 1e6, 1);
    ASSERT_GE(r.diagnostics.err_nm.size(), 10u);
    EXPECT_LT(r.diagnostics.err_nm[9], 1.0) << "theta " << th;
  }
}

INSTANTIATE_TEST_SUITE_P(Imbalance, ClosedLoop, ::testing::Values(-0.2, 0.0, 0.2));

TEST(Track, DeterministicGivenSeed) {
  const TrackerConfig c;
  const Trajectory truth = simulate_brownian(1e3, 2000, 1.2e-3, 5);
  const TrackResult a = track(truth, c, 1e6, 9), b = track(truth, c, 1e6, 9);
  EXPECT_EQ(a.estimate.points, b.estimate.points);
  EXPECT_NE(a.estimate.points, track(truth, c, 1e6, 10).estimate.points);
}

TEST(Track, OnePointPerOrbitAtMidOrbit) {
  const TrackerConfig c;
  const TrackResult r = track(stationary(1.0), c, 1e6, 1);
  EXPECT_DOUBLE_EQ(r.estimate.dt, c.T_orbit);
  EXPECT_NEAR(r.estimate.t0, c.T_orbit / 2, 1e-15);
  EXPECT_EQ(r.estimate.size(), static_cast<std::size_t>(1.0 / c.T_orbit));
}

TEST(Track, ModulationScalesPhotons) {
  const TrackerConfig c = noise_free();
  const TrackResult full = track(stationary(0.1), c, 1e6, 1);
  const TrackResult half = track(stationary(0.1), c, 1e6, 1, [](double) { return 0.5; });
  EXPECT_NEAR(half.diagnostics.photons[3] / full.diagnostics.photons[3], 0.5, 1e-9);
}

TEST(Track, DiffusionOfTrackedTrajectory) {
  const TrackerConfig c;
  const double D = 2e3, dt = c.T_orbit / 8;
  const Trajectory truth = simulate_brownian(D, static_cast<std::size_t>(600 / dt), dt, 17);
  const TrackResult r = track(truth, c, 1e6, 18);
  ASSERT_FALSE(r.diagnostics.lock_lost);
  const MsdCurve m = msd(r.estimate, Axes::xy(), {static_cast<std::size_t>(std::llround(1.0 / c.T_orbit))});
  EXPECT_NEAR(fit_diffusion_at(m, m.taus[0]).D / D, 1.0, 0.1);
}

TEST(Track, LosesLockWhenDiffusionTooFast) {
  const TrackerConfig c;
  const double dt = c.T_orbit / 8;
  const Trajectory truth = simulate_brownian(5e5, static_cast<std::size_t>(60 / dt), dt, 3);
  const TrackResult r = track(truth, c, 1e6, 4);
  EXPECT_TRUE(r.diagnostics.lock_lost);
  EXPECT_LT(r.estimate.size(), static_cast<std::size_t>(60 / c.T_orbit));
}

TEST(StaticBenchmark, ShotNoiseScaling) {
  const TrackerConfig c;
  const auto rows = static_benchmark({1e5, 1e6, 1e7}, c, 2, 30.0);
  ASSERT_EQ(rows.size(), 3u);
  // Per-axis variance times photons per update is constant.
  const double ref = rows[0].rms_xy * rows[0].rms_xy * rows[0].pl;
  for (const auto& r : rows) EXPECT_NEAR(r.rms_xy * r.rms_xy * r.pl / ref, 1.0, 0.2) << r.pl;
  EXPECT_GT(rows[0].D_xy, rows[1].D_xy);
  EXPECT_GT(rows[1].D_xy, rows[2].D_xy);
  EXPECT_FALSE(rows[0].psd_freqs.empty());
}

TEST(StaticBenchmark, NoiseFreeLockIsBelowFloor) {
  const TrackerConfig c = noise_free();
  const auto rows = static_benchmark({1e6}, c, 2, 10.0);
  EXPECT_LT(rows[0].D_xy, kMsdNoiseFloorNm2);
  EXPECT_LT(rows[0].rms_error, 1e-6);
}
