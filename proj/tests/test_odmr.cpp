#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ndsense/error.hpp"
#include "ndsense/odmr.hpp"
#include "oracles.hpp"

using namespace ndsense;

namespace {

Lineshape sampled_table(const Lineshape& shape, const std::vector<double>& grid) {
  std::vector<double> levels;
  for (double f : grid) levels.push_back(shape.value(f));
  return Lineshape::interpolation(grid, levels);
}

OdmrScan exact_scan(const Lineshape& shape, const std::vector<double>& grid, double lambda0, double shift) {
  OdmrScan s;
  s.freqs = grid;
  for (double f : grid) s.counts.push_back(lambda0 * shape.value(f - shift));
  return s;
}

struct Spread {
  double mean, sd;
};

Spread fit_spread(const Lineshape& truth, const Lineshape& model, double shift, int n_scans, int repeats,
                  std::uint64_t seed) {
  const auto grid = default_grid();
  Rng rng = make_rng(seed);
  std::vector<double> v;
  for (int i = 0; i < repeats; ++i) v.push_back(fit_shift(synthesize_scan(truth, grid, 5.0, shift, rng, n_scans), model).shift);
  return {oracle::mean(v), std::sqrt(oracle::variance(v))};
}

}  // namespace

TEST(Lineshape, DefaultShapeIsNormalizedDip) {
  const Lineshape s = default_lineshape();
  const auto grid = default_grid();
  ASSERT_EQ(grid.size(), 200u);
  for (double f : grid) {
    EXPECT_GT(s.value(f), 0.0);
    EXPECT_LE(s.value(f), 1.0);
  }
  EXPECT_NEAR(s.value(grid.front()), 1.0, 0.02);
  EXPECT_NEAR(s.value(grid.back()), 1.0, 0.02);
  EXPECT_NEAR(s.dip_center(), 2.867e9, 1e5);
  EXPECT_EQ(s.n_params(), 6);
}

TEST(Lineshape, TableRequiresIncreasingFrequenciesAndExtendsAsOne) {
  EXPECT_THROW(Lineshape::interpolation({1, 1, 2}, {1, 0.5, 1}), ValidationError);
  EXPECT_THROW(Lineshape::interpolation({1, 2, 3}, {1, 0.0, 1}), ValidationError);
  const Lineshape t = Lineshape::interpolation({0, 1, 2}, {1, 0.5, 1});
  EXPECT_DOUBLE_EQ(t.value(0.5), 0.75);
  EXPECT_DOUBLE_EQ(t.value(-3.0), 1.0);
  EXPECT_DOUBLE_EQ(t.value(7.0), 1.0);
  EXPECT_DOUBLE_EQ(t.slope(0.5), -0.5);
  EXPECT_DOUBLE_EQ(t.slope_smooth(1.0), 0.0);
}

TEST(Lineshape, ParameterGradientMatchesFiniteDifference) {
  const Lineshape s = default_lineshape();
  const auto p = s.params();
  const double f = 2.869e9;
  const auto g = s.param_gradient(f);
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto hi = p, lo = p;
    const double h = std::max(1e-7, std::abs(p[k]) * 1e-6);
    hi[k] += h;
    lo[k] -= h;
    const double fd = (Lineshape::from_params(s.kind(), hi).value(f) - Lineshape::from_params(s.kind(), lo).value(f)) / (2 * h);
    EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::abs(fd)) + 1e-12) << k;
  }
}

TEST(Synthesize, FlatShapeMeanIsLambda0) {
  const auto grid = default_grid();
  const Lineshape flat = Lineshape::single_lorentzian({0.0, 3e6, 2.87e9});
  const OdmrScan s = synthesize_scan(flat, grid, 5.0, 0.0, std::uint64_t{4}, 50);
  double m = 0.0;
  for (double c : s.counts) {
    EXPECT_EQ(c, std::floor(c));
    m += c;
  }
  m /= static_cast<double>(s.counts.size() * 50);
  EXPECT_NEAR(m, 5.0, 3 * std::sqrt(5.0 / (200 * 50)));
}

TEST(Synthesize, FlagsDipOutsideGrid) {
  const auto grid = default_grid();
  EXPECT_FALSE(synthesize_scan(default_lineshape(), grid, 5.0, 1e6, std::uint64_t{1}).outside_grid);
  EXPECT_TRUE(synthesize_scan(default_lineshape(), grid, 5.0, 30e6, std::uint64_t{1}).outside_grid);
  EXPECT_THROW(synthesize_scan(default_lineshape(), grid, 0.0, 0.0, std::uint64_t{1}), ValidationError);
}

TEST(BuildInterpolation, NoiselessInputReproducesShapeUpToPlateau) {
  const auto grid = default_grid();
  const Lineshape s = default_lineshape();
  const Lineshape t = build_interpolation({exact_scan(s, grid, 5.0, 0.0)});
  const double ratio = t.table_levels()[0] / s.value(grid[0]);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(t.table_levels()[i] / s.value(grid[i]), ratio, 1e-12);
  EXPECT_NEAR(t.table_levels().front(), 1.0, 0.02);
  EXPECT_THROW(build_interpolation({}), ValidationError);
}

TEST(BuildInterpolation, PointNoiseFallsAsInverseRootOfScans) {
  const auto grid = default_grid();
  const Lineshape s = default_lineshape();
  auto point_sd = [&](int n_scans) {
    Rng rng = make_rng(static_cast<std::uint64_t>(n_scans));
    std::vector<double> v;
    for (int r = 0; r < 400; ++r) {
      std::vector<OdmrScan> scans;
      for (int i = 0; i < n_scans; ++i) scans.push_back(synthesize_scan(s, grid, 5.0, 0.0, rng));
      v.push_back(build_interpolation(scans).table_levels()[100]);
    }
    return std::sqrt(oracle::variance(v));
  };
  EXPECT_NEAR(point_sd(10) / point_sd(40), 2.0, 0.3);
}

TEST(BuildInterpolation, ResidualShrinksWithAveraging) {
  const auto grid = default_grid();
  const Lineshape s = default_lineshape();
  Rng rng = make_rng(8);
  auto residual = [&](int n) {
    std::vector<OdmrScan> scans;
    for (int i = 0; i < n; ++i) scans.push_back(synthesize_scan(s, grid, 5.0, 0.0, rng, 10));
    const Lineshape t = build_interpolation(scans);
    const double scale = t.table_levels()[0] / s.value(grid[0]);
    double r = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) r += std::abs(t.table_levels()[i] - scale * s.value(grid[i]));
    return r / grid.size();
  };
  EXPECT_GT(residual(10), residual(1000));
}

TEST(FitShift, NoiselessSelfConsistency) {
  const auto grid = default_grid();
  const Lineshape table = sampled_table(default_lineshape(), grid);
  const ShiftFit f = fit_shift(exact_scan(table, grid, 800.0, 300e3), table);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.shift, 300e3, 5.0);
  EXPECT_NEAR(f.lambda0, 800.0, 1e-3);
}

TEST(FitShift, ScalingCountsScalesOnlyAmplitude) {
  const auto grid = default_grid();
  const Lineshape table = sampled_table(default_lineshape(), grid);
  OdmrScan s = synthesize_scan(default_lineshape(), grid, 5.0, 1e5, std::uint64_t{3}, 160);
  const ShiftFit a = fit_shift(s, table);
  for (auto& c : s.counts) c *= 3.0;
  const ShiftFit b = fit_shift(s, table);
  EXPECT_NEAR(b.lambda0 / a.lambda0, 3.0, 1e-9);
  EXPECT_NEAR(b.shift, a.shift, 1e-3);
}

TEST(FitShift, UnbiasedAtZeroShift) {
  const auto grid = default_grid();
  const Lineshape table = sampled_table(default_lineshape(), grid);
  const Spread s = fit_spread(default_lineshape(), table, 0.0, 160, 2000, 12);
  EXPECT_LT(std::abs(s.mean), s.sd / 10);
}

TEST(FitShift, MonteCarloSpreadMatchesBoundAndNeverBeatsIt) {
  const auto grid = default_grid();
  const Lineshape truth = default_lineshape();
  const Lineshape table = sampled_table(truth, grid);
  const Spread s = fit_spread(truth, table, 0.0, 160, 2000, 13);
  const double bound = std::sqrt(crb(truth, 5.0 * 160, grid, CrbParams::amplitude_shift).shift_variance);
  const double mc_err = s.sd / std::sqrt(2.0 * 2000);
  EXPECT_NEAR(s.sd / bound, 1.0, 0.15);
  EXPECT_GE(s.sd + 3 * mc_err, bound);
}

TEST(FitShift, ShiftEquivariance) {
  const auto grid = default_grid();
  const Lineshape table = sampled_table(default_lineshape(), grid);
  const Spread zero = fit_spread(default_lineshape(), table, 0.0, 160, 300, 20);
  for (double a : {-4e6, -1e6, 1e6, 4e6}) {
    const Spread s = fit_spread(default_lineshape(), table, a, 160, 300, 21);
    EXPECT_NEAR(s.mean - zero.mean, a, 4 * std::hypot(s.sd, zero.sd) / std::sqrt(300.0)) << a;
  }
}

TEST(FitShift, TwoParameterSpreadNarrowerThanFullLorentzian) {
  const auto grid = default_grid();
  const Lineshape truth = default_lineshape();
  Rng rng = make_rng(30);
  std::vector<OdmrScan> scans;
  for (int i = 0; i < 150; ++i) scans.push_back(synthesize_scan(truth, grid, 5.0, 0.0, rng, 16));
  const Lineshape table = build_interpolation(scans);
  std::vector<double> two, seven;
  for (const auto& s : scans) {
    two.push_back(fit_shift(s, table).shift);
    const LorentzianFit lf = fit_lorentzian(s, truth, 5.0 * 16);
    if (lf.converged) seven.push_back(lf.center);
  }
  ASSERT_GT(seven.size(), 100u);
  EXPECT_LT(std::sqrt(oracle::variance(two) / oracle::variance(seven)), 0.8);
}

TEST(FitLorentzian, RecoversNoiselessParameters) {
  const auto grid = default_grid();
  const Lineshape truth = default_lineshape();
  const Lineshape start = Lineshape::double_lorentzian({0.12, 3e6, 2.866e9}, {0.12, 3e6, 2.8725e9});
  const LorentzianFit f = fit_lorentzian(exact_scan(truth, grid, 400.0, 0.0), start, 380.0);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.lambda0, 400.0, 1e-3);
  const auto p = f.shape.params(), q = truth.params();
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k] / q[k], 1.0, 1e-5) << k;
  EXPECT_NEAR(f.center, 2.87e9, 10.0);
}

TEST(ShiftToTemperature, Arithmetic) {
  KappaCalibration cal;
  cal.kappa = -60.0;
  EXPECT_NEAR(shift_to_temperature(-240e3, 0.0, cal).value, 4.0, 1e-12);
  EXPECT_EQ(shift_to_temperature(0.0, 0.0, cal).value, 0.0);
  cal.kappa = -91.0;
  EXPECT_NEAR(shift_to_temperature(-240e3, 0.0, cal).value, 2.637, 1e-3);
  cal.kappa = -60.0;
  cal.sigma_kappa = 0.4;
  const Estimate e = shift_to_temperature(-240e3, 6e3, cal);
  EXPECT_NEAR(e.sigma, std::hypot(0.1, 4.0 * 0.4 / 60.0), 1e-12);
  cal.kappa = 0.0;
  EXPECT_THROW(shift_to_temperature(1.0, 0.0, cal), ValidationError);
}

TEST(ShiftToTemperature, AssumedKappaSystematic) {
  KappaCalibration truth, assumed;
  truth.kappa = -53.6;
  assumed.kappa = -74.0;
  const double shift = -53.6e3 * 5.0;
  const double err = std::abs(shift_to_temperature(shift, 0, assumed).value / 5.0 - 1.0);
  EXPECT_NEAR(err, 0.276, 0.005);
  EXPECT_NEAR(shift_to_temperature(shift, 0, truth).value, 5.0, 1e-12);
}

TEST(Crb, FrozenSensitivities) {
  // Independent numpy evaluation: table with central-difference slopes 1.98951, double
  // Lorentzian 1.98652 °C/√Hz; 2-parameter / 7-parameter centre bound ratio 0.30994.
  const auto grid = default_grid();
  const Lineshape dl = default_lineshape();
  const Lineshape table = sampled_table(dl, grid);
  EXPECT_NEAR(crb_temperature_sensitivity(table, 5.0, grid, -60.0), 1.98951, 2e-4);
  EXPECT_NEAR(crb_temperature_sensitivity(dl, 5.0, grid, -60.0), 1.98652, 2e-4);
  const double two = crb(dl, 5.0, grid, CrbParams::amplitude_shift).shift_variance;
  const double seven = crb(dl, 5.0, grid, CrbParams::full).shift_variance;
  EXPECT_NEAR(std::sqrt(two / seven), 0.30994, 2e-4);
}

TEST(Crb, WithinQuarterOfReferenceSensitivities) {
  const auto grid = default_grid();
  const Lineshape dl = default_lineshape();
  EXPECT_NEAR(crb_temperature_sensitivity(sampled_table(dl, grid), 5.0, grid, -60.0) / 2.1, 1.0, 0.25);
  EXPECT_NEAR(crb_temperature_sensitivity(dl, 5.0, grid, -60.0) / 2.2, 1.0, 0.25);
}

TEST(Crb, FisherSymmetricPositiveAndScalesWithBudget) {
  const auto grid = default_grid();
  const Lineshape dl = default_lineshape();
  for (auto p : {CrbParams::shift, CrbParams::amplitude_shift, CrbParams::full}) {
    const CrbResult r = crb(dl, 5.0, grid, p);
    EXPECT_LT((r.fisher - r.fisher.transpose()).norm(), 1e-12 * r.fisher.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.fisher);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
  const double a = crb(dl, 5.0, grid, CrbParams::shift).shift_variance;
  const double b = crb(dl, 10.0, grid, CrbParams::shift).shift_variance;
  EXPECT_NEAR(std::sqrt(a / b), std::sqrt(2.0), 1e-12);
}

TEST(Crb, FlatShapeIsSingular) {
  const auto grid = default_grid();
  const Lineshape flat = Lineshape::interpolation(grid, std::vector<double>(grid.size(), 1.0));
  EXPECT_THROW(crb(flat, 5.0, grid, CrbParams::shift), SingularError);
}

TEST(Allan, ConstantSeriesIsZero) {
  const auto pts = allan_deviation(std::vector<double>(300, 4.2), 0.4, octave_factors(300));
  ASSERT_FALSE(pts.empty());
  for (const auto& p : pts) EXPECT_EQ(p.adev, 0.0);
}

TEST(Allan, MatchesBruteForceAndSkipsLongTaus) {
  Rng rng = make_rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> y;
  double drift = 0.0;
  for (int i = 0; i < 500; ++i) y.push_back(n(rng) + (drift += 0.01 * n(rng)));
  const auto pts = allan_deviation(y, 1.0, {1, 3, 7, 50, 166, 167, 200});
  ASSERT_EQ(pts.size(), 5u);  // 3m > N is skipped
  for (const auto& p : pts) EXPECT_NEAR(p.adev, oracle::allan(y, p.m), 1e-10 * oracle::allan(y, p.m));
}

TEST(Allan, WhiteNoiseLaw) {
  const double sigma = 2.0;
  Rng rng = make_rng(4);
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<double> y(100000);
  for (auto& v : y) v = n(rng);
  std::vector<std::size_t> ms;
  for (std::size_t m = 1; m <= y.size() / 200; m *= 2) ms.push_back(m);
  const auto pts = allan_deviation(y, 1.0, ms);
  for (const auto& p : pts) EXPECT_NEAR(p.adev * std::sqrt(p.tau) / sigma, 1.0, 0.1) << p.tau;
  const WhiteNoiseFit w = fit_white_noise(pts, 1.0, 1e9);
  EXPECT_NEAR(w.slope, -0.5, 0.1);
  EXPECT_NEAR(w.S / sigma, 1.0, 0.05);
}

TEST(CalibrateKappa, ExactOnNoiselessLevels) {
  std::vector<double> T, f;
  for (double t : {25.0, 29.0, 33.0, 37.0})
    for (int i = 0; i < 5; ++i) {
      T.push_back(t);
      f.push_back(-60e3 * (t - 25.0));
    }
  const KappaCalibration k = calibrate_kappa(T, f);
  EXPECT_NEAR(k.kappa, -60.0, 1e-9);
  EXPECT_LT(k.sigma_kappa, 1e-9);
  EXPECT_THROW(calibrate_kappa({25, 25, 29, 29}, {0, 0, 1, 1}), ValidationError);
}

TEST(CalibrateKappa, NoisyLevelsWithinErrors) {
  Rng rng = make_rng(6);
  std::normal_distribution<double> n(0.0, 40e3);
  std::vector<double> T, f;
  for (double t : {25.0, 29.0, 33.0, 37.0, 33.0, 29.0, 25.0})
    for (int i = 0; i < 60; ++i) {
      T.push_back(t);
      f.push_back(-60e3 * (t - 25.0) + n(rng));
    }
  const KappaCalibration k = calibrate_kappa(T, f);
  EXPECT_NEAR(k.kappa, -60.0, 3 * k.sigma_kappa);
  EXPECT_GT(k.sigma_kappa, 0.0);
}

TEST(KappaPosterior, SymmetricGroupsCentreOnZero) {
  std::vector<KappaMeasurement> g;
  for (double k : {-55.0, -62.0, -70.0, -58.0, -66.0}) g.push_back({k, 1.0});
  const PosteriorSummary p = kappa_shift_posterior(g, g, 20000, 1);
  EXPECT_NEAR(p.mean, 0.0, 4 * p.sd / std::sqrt(20000.0) + 0.05 * p.sd);
  EXPECT_LT(p.q025, 0.0);
  EXPECT_GT(p.q975, 0.0);
}

TEST(KappaPosterior, SmallLiveGroupGivesTenKilohertzScaleSpread) {
  Rng rng = make_rng(2);
  std::normal_distribution<double> dry(-74.0, 10.0), live(-71.0, 12.0);
  std::vector<KappaMeasurement> d, l;
  for (int i = 0; i < 26; ++i) d.push_back({dry(rng), 1.0});
  for (int i = 0; i < 6; ++i) l.push_back({live(rng), 1.0});
  const PosteriorSummary p = kappa_shift_posterior(l, d, 20000, 3);
  EXPECT_GT(p.sd, 3.0);
  EXPECT_LT(p.sd, 20.0);
}

TEST(KappaPosterior, InjectedShiftExcludesZero) {
  std::vector<KappaMeasurement> d, l;
  for (double k : {-60.0, -61.0, -59.5, -60.5, -60.2}) d.push_back({k, 0.5});
  for (double k : {-30.0, -31.0, -29.0, -30.5}) l.push_back({k, 0.5});
  const PosteriorSummary p = kappa_shift_posterior(l, d, 20000, 4);
  EXPECT_GT(p.q025, 0.0);
  EXPECT_NEAR(p.mean, 30.0, 2.0);
}

TEST(KappaPosterior, RejectsDegenerateGroups) {
  EXPECT_THROW(kappa_shift_posterior({{1.0, 1.0}}, {{1.0, 1.0}, {2.0, 1.0}}, 100, 1), ValidationError);
  EXPECT_THROW(kappa_shift_posterior({{1.0, 0.0}, {2.0, 1.0}}, {{1.0, 1.0}, {2.0, 1.0}}, 100, 1), ValidationError);
}

TEST(OdmrFile, BlockAndLongFormsRoundTrip) {
  const auto grid = default_grid();
  std::vector<OdmrScan> scans;
  for (std::uint64_t i = 0; i < 3; ++i) scans.push_back(synthesize_scan(default_lineshape(), grid, 5.0, 0.0, i, 4));
  std::stringstream ss;
  write_odmr(ss, scans);
  const auto back = read_odmr(ss);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].counts, scans[1].counts);
  EXPECT_EQ(back[1].freqs, scans[1].freqs);
  EXPECT_EQ(back[1].n_scans, 4);

  std::istringstream longform("scan_id,f_hz,counts\n0,1,5\n0,2,4\n0,3,5\n1,1,6\n1,2,3\n1,3,6\n");
  const auto l = read_odmr(longform);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1].counts, (std::vector<double>{6, 3, 6}));
}

TEST(OdmrFile, MalformedCountNamesLine) {
  std::istringstream in("f_hz,counts\n1,5\n2,-4\n3,5\n");
  try {
    read_odmr(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
