#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndsense/chip.hpp"
#include "ndsense/error.hpp"

using namespace ndsense;

TEST(Rtd, ExactReferencePoints) {
  const RtdCalibration cal;
  EXPECT_DOUBLE_EQ(rtd_temperature(100.0, cal), 20.0);
  EXPECT_NEAR(rtd_temperature(100.244, cal), 21.0, 1e-12);
  EXPECT_NEAR(rtd_resistance(30.0, cal), 102.44, 1e-12);
  EXPECT_EQ(rtd_temperature_sigma(100.0, cal), 0.0);
  // ΔT = 10 °C: relative η error carries straight through.
  EXPECT_NEAR(rtd_temperature_sigma(102.44, cal), 10.0 * 0.12 / 2.44, 1e-12);
}

TEST(Rtd, RoundTripOverOperatingRange) {
  const RtdCalibration cal;
  for (double T = 0.0; T <= 60.0; T += 0.37) EXPECT_NEAR(rtd_temperature(rtd_resistance(T, cal), cal), T, 1e-9);
}

TEST(Rtd, RejectsNonPhysicalInput) {
  RtdCalibration cal;
  EXPECT_THROW(rtd_temperature(0.0, cal), ValidationError);
  EXPECT_THROW(rtd_temperature(-5.0, cal), ValidationError);
  cal.eta = 0.0;
  EXPECT_THROW(cal.validate(), ValidationError);
}

TEST(DutyCycle, DefaultTimelineMatchesReferenceTimings) {
  const auto ev = schedule_timeline(DutyCycleSchedule{}, 0.2);
  ASSERT_EQ(ev.size(), 4u);
  EXPECT_EQ(ev[0].channel, Channel::mw);
  EXPECT_TRUE(ev[0].on);
  EXPECT_EQ(ev[0].tick, 0);
  EXPECT_EQ(ev[1].channel, Channel::mw);
  EXPECT_FALSE(ev[1].on);
  EXPECT_EQ(ev[1].tick, 16000);
  EXPECT_EQ(ev[2].channel, Channel::heater);
  EXPECT_TRUE(ev[2].on);
  EXPECT_EQ(ev[2].tick, 16500);
  EXPECT_EQ(ev[3].channel, Channel::heater);
  EXPECT_FALSE(ev[3].on);
  EXPECT_EQ(ev[3].tick, 19500);
  EXPECT_NEAR(ev[3].t(), 0.195, 1e-15);
  EXPECT_EQ(channel_name(Channel::heater), "heater");
}

TEST(DutyCycle, OverlongHeaterIsRejectedByName) {
  DutyCycleSchedule d;
  d.heater_on = 0.04;
  try {
    d.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("mw_on + 2*buffer + heater_on must be <= period"), std::string::npos);
  }
}

TEST(DutyCycle, OtherConstraints) {
  DutyCycleSchedule d;
  d.switch_edge = 0.005;
  EXPECT_THROW(d.validate(), ValidationError);
  d = DutyCycleSchedule{};
  d.mw_on = 0.160003;  // off the 10 µs clock
  EXPECT_THROW(d.validate(), ValidationError);
  d = DutyCycleSchedule{};
  d.heater_on = 0.0;
  EXPECT_NO_THROW(d.validate());
  const auto ev = schedule_timeline(d, 1.0);
  for (const auto& e : ev) EXPECT_EQ(e.channel, Channel::mw);
  EXPECT_TRUE(std::isinf(timeline_min_gap(ev, d.switch_edge)));
}

TEST(DutyCycle, RandomScheduleKeepsChannelsApart) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> ticks(1, 4000);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    DutyCycleSchedule d;
    d.period = ticks(rng) * 10 * kClockPeriodS;
    d.mw_on = ticks(rng) * kClockPeriodS;
    d.heater_on = ticks(rng) * kClockPeriodS;
    d.buffer = ticks(rng) * kClockPeriodS / 4;
    d.switch_edge = d.buffer * 0.5;
    try {
      d.validate();
    } catch (const ValidationError&) {
      continue;
    }
    const auto ev = schedule_timeline(d, 5 * d.period);
    for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_LE(ev[i - 1].tick, ev[i].tick);
    for (const auto& e : ev) EXPECT_LT(e.t(), 5 * d.period);
    EXPECT_GE(timeline_min_gap(ev, d.switch_edge), d.buffer - d.switch_edge - 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(DutyCycle, MicrowaveGate) {
  const DutyCycleSchedule d;
  EXPECT_TRUE(mw_active(d, 0.0));
  EXPECT_TRUE(mw_active(d, 0.1599));
  EXPECT_FALSE(mw_active(d, 0.16));
  EXPECT_FALSE(mw_active(d, 0.18));
  EXPECT_TRUE(mw_active(d, 0.2005));
}

TEST(Setpoints, SingleSetpointIsFlat) {
  TemperatureSchedule s;
  s.steps = {{0.0, 31.0}};
  const auto series = setpoint_series(s, 1.0, 100.0);
  ASSERT_EQ(series.t.size(), 100u);
  for (double T : series.T) EXPECT_EQ(T, 31.0);
}

TEST(Setpoints, TwoDegreeStepSettlesWithinTwoMinutes) {
  TemperatureSchedule s;
  s.steps = {{0.0, 25.0}, {10.0, 27.0}};
  const auto series = setpoint_series(s, 0.5, 300.0);
  auto at = [&](double t) { return series.T[static_cast<std::size_t>(std::llround(t / 0.5))]; };
  EXPECT_GE(at(130.0), 26.98);
  EXPECT_LT(at(125.0), 26.98);
  EXPECT_LT(at(60.0), 27.0);
  EXPECT_GT(at(60.0), 26.0);
  for (std::size_t i = 1; i < series.T.size(); ++i) EXPECT_GE(series.T[i], series.T[i - 1]);
}

TEST(Setpoints, StaircaseShape) {
  const TemperatureSchedule s = staircase_schedule(25.0, 4.0, 3, 900.0);
  ASSERT_EQ(s.steps.size(), 7u);
  const double want[] = {25, 29, 33, 37, 33, 29, 25};
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(s.steps[i].second, want[i]);
    EXPECT_EQ(s.steps[i].first, 900.0 * i);
  }
  EXPECT_EQ(s.setpoint_at(2000.0), 33.0);
  EXPECT_EQ(staircase_schedule(25.0, 4.0, 3, 900.0, false).steps.size(), 4u);
}

TEST(Setpoints, AlternatingShape) {
  const TemperatureSchedule s = alternating_schedule(28.7, 39.3, 600.0, 3);
  ASSERT_EQ(s.steps.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(s.steps[i].second, i % 2 ? 39.3 : 28.7);
}

TEST(Setpoints, ScheduleValidation) {
  TemperatureSchedule s;
  EXPECT_THROW(s.validate(), ValidationError);
  s.steps = {{0.0, 25.0}, {0.0, 30.0}};
  EXPECT_THROW(s.validate(), ValidationError);
  s.steps = {{0.0, 25.0}, {5.0, 30.0}};
  s.tau_s = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
}
