#include "ndsense/chip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ndsense/error.hpp"

namespace ndsense {

namespace {

std::int64_t to_ticks(double s, const char* what) {
  const double t = s / kClockPeriodS;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-6) throw ValidationError(std::string("duty cycle: ") + what + " is not a multiple of 10 us");
  return static_cast<std::int64_t>(r);
}

}  // namespace

void RtdCalibration::validate() const {
  if (!std::isfinite(R0) || !(R0 > 0.0)) throw ValidationError("rtd: R0 must be > 0");
  if (!std::isfinite(eta) || !(eta > 0.0)) throw ValidationError("rtd: eta must be > 0");
  if (!std::isfinite(T0)) throw ValidationError("rtd: T0 must be finite");
  if (!std::isfinite(sigma_eta) || sigma_eta < 0.0) throw ValidationError("rtd: sigma_eta must be >= 0");
}

double rtd_temperature(double resistance, const RtdCalibration& cal) {
  cal.validate();
  if (!std::isfinite(resistance) || !(resistance > 0.0)) throw ValidationError("rtd_temperature: R must be > 0");
  return cal.T0 + (resistance / cal.R0 - 1.0) / cal.eta;
}

double rtd_resistance(double T_celsius, const RtdCalibration& cal) {
  cal.validate();
  if (!std::isfinite(T_celsius)) throw ValidationError("rtd_resistance: T must be finite");
  const double r = cal.R0 * (1.0 + cal.eta * (T_celsius - cal.T0));
  if (!(r > 0.0)) throw ValidationError("rtd_resistance: temperature below the linear range");
  return r;
}

double rtd_temperature_sigma(double resistance, const RtdCalibration& cal) {
  cal.validate();
  if (!std::isfinite(resistance) || !(resistance > 0.0)) throw ValidationError("rtd_temperature_sigma: R must be > 0");
  return std::abs(resistance / cal.R0 - 1.0) / (cal.eta * cal.eta) * cal.sigma_eta;
}

void DutyCycleSchedule::validate() const {
  for (double v : {period, mw_on, heater_on, buffer, switch_edge})
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("duty cycle: durations must be finite and >= 0");
  if (!(period > 0.0)) throw ValidationError("duty cycle: period must be > 0");
  if (!(mw_on > 0.0)) throw ValidationError("duty cycle: mw_on must be > 0");
  const std::int64_t p = to_ticks(period, "period"), m = to_ticks(mw_on, "mw_on"), h = to_ticks(heater_on, "heater_on"),
                     b = to_ticks(buffer, "buffer"), e = to_ticks(switch_edge, "switch_edge");
  if (m + 2 * b + h > p) throw ValidationError("duty cycle: mw_on + 2*buffer + heater_on must be <= period");
  if (!(e < b)) throw ValidationError("duty cycle: switch_edge must be < buffer");
}

std::vector<TimelineEvent> schedule_timeline(const DutyCycleSchedule& d, double duration_s) {
  d.validate();
  if (!std::isfinite(duration_s) || duration_s < 0.0) throw ValidationError("schedule_timeline: duration must be >= 0");
  const std::int64_t p = to_ticks(d.period, "period"), m = to_ticks(d.mw_on, "mw_on"),
                     h = to_ticks(d.heater_on, "heater_on"), b = to_ticks(d.buffer, "buffer");
  const auto end = static_cast<std::int64_t>(std::ceil(duration_s / kClockPeriodS - 1e-9));
  std::vector<TimelineEvent> ev;
  for (std::int64_t start = 0; start < end; start += p) {
    auto push = [&](std::int64_t tick, Channel c, bool on) {
      if (tick < end) ev.push_back({tick, c, on});
    };
    push(start, Channel::mw, true);
    push(start + m, Channel::mw, false);
    if (h > 0) {
      push(start + m + b, Channel::heater, true);
      push(start + m + b + h, Channel::heater, false);
    }
  }
  return ev;
}

double timeline_min_gap(const std::vector<TimelineEvent>& events, double switch_edge_s) {
  struct Interval {
    double a, b;
  };
  std::vector<Interval> mw, heat;
  double open_mw = -1.0, open_heat = -1.0;
  double last = 0.0;
  for (const auto& e : events) {
    const double t = e.t();
    last = std::max(last, t);
    if (e.channel == Channel::mw) {
      if (e.on) {
        open_mw = t;
      } else if (open_mw >= 0.0) {
        mw.push_back({open_mw, t});
        open_mw = -1.0;
      }
    } else {
      if (e.on) {
        open_heat = t;
      } else if (open_heat >= 0.0) {
        heat.push_back({open_heat - switch_edge_s, t + switch_edge_s});
        open_heat = -1.0;
      }
    }
  }
  // Intervals still open at the end of the timeline extend to its last event.
  if (open_mw >= 0.0) mw.push_back({open_mw, last});
  if (open_heat >= 0.0) heat.push_back({open_heat - switch_edge_s, last + switch_edge_s});
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& x : mw) {
    for (const auto& y : heat) {
      double g = std::max(y.a - x.b, x.a - y.b);
      gap = std::min(gap, g);
    }
  }
  return gap;
}

bool mw_active(const DutyCycleSchedule& d, double t_s) {
  const double phase = std::fmod(t_s, d.period);
  return (phase < 0.0 ? phase + d.period : phase) < d.mw_on;
}

double TemperatureSchedule::default_ramp_tau() { return 120.0 / std::log(100.0); }

void TemperatureSchedule::validate() const {
  if (steps.empty()) throw ValidationError("temperature schedule: no setpoints");
  if (!std::isfinite(tau_s) || tau_s < 0.0) throw ValidationError("temperature schedule: tau must be >= 0");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!std::isfinite(steps[i].first) || !std::isfinite(steps[i].second))
      throw ValidationError("temperature schedule: non-finite entry");
    if (i > 0 && !(steps[i].first > steps[i - 1].first))
      throw ValidationError("temperature schedule: times must be strictly increasing");
  }
}

double TemperatureSchedule::setpoint_at(double t_s) const {
  double sp = steps.front().second;
  for (const auto& [t, v] : steps) {
    if (t > t_s) break;
    sp = v;
  }
  return sp;
}

TemperatureSchedule staircase_schedule(double start_c, double step_c, int n_up, double dwell_s, bool return_down) {
  if (n_up < 1 || !(dwell_s > 0.0)) throw ValidationError("staircase_schedule: need n_up >= 1 and dwell > 0");
  TemperatureSchedule s;
  double t = 0.0;
  for (int i = 0; i <= n_up; ++i, t += dwell_s) s.steps.emplace_back(t, start_c + step_c * i);
  if (return_down)
    for (int i = n_up - 1; i >= 0; --i, t += dwell_s) s.steps.emplace_back(t, start_c + step_c * i);
  return s;
}

TemperatureSchedule alternating_schedule(double low_c, double high_c, double dwell_s, int n_cycles) {
  if (n_cycles < 1 || !(dwell_s > 0.0)) throw ValidationError("alternating_schedule: need n_cycles >= 1 and dwell > 0");
  TemperatureSchedule s;
  double t = 0.0;
  for (int i = 0; i < n_cycles; ++i) {
    s.steps.emplace_back(t, low_c);
    t += dwell_s;
    s.steps.emplace_back(t, high_c);
    t += dwell_s;
  }
  return s;
}

SetpointSeries setpoint_series(const TemperatureSchedule& s, double dt, double duration_s) {
  s.validate();
  if (!std::isfinite(dt) || !(dt > 0.0)) throw ValidationError("setpoint_series: dt must be > 0");
  if (!std::isfinite(duration_s) || duration_s < 0.0) throw ValidationError("setpoint_series: duration must be >= 0");
  SetpointSeries out;
  const auto n = static_cast<std::size_t>(std::ceil(duration_s / dt - 1e-9));
  const double decay = s.tau_s > 0.0 ? std::exp(-dt / s.tau_s) : 0.0;
  double T = s.steps.front().second;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double sp = s.setpoint_at(t);
    if (i > 0) T = sp + (T - sp) * decay;
    out.t.push_back(t);
    out.T.push_back(T);
    out.setpoint.push_back(sp);
  }
  return out;
}

std::string channel_name(Channel c) { return c == Channel::mw ? "mw" : "heater"; }

}  // namespace ndsense
