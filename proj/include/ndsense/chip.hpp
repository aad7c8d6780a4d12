#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ndsense {

/// Period of the global synchronisation clock (100 kHz).
inline constexpr double kClockPeriodS = 1e-5;

/// Gold RTD: R(T)/R0 = 1 + eta (T − T0).
struct RtdCalibration {
  double R0 = 100.0;          // Ω at T0
  double T0 = 20.0;           // °C
  double eta = 2.44e-3;       // 1/°C
  double sigma_eta = 0.12e-3; // 1/°C

  void validate() const;
};

double rtd_temperature(double resistance, const RtdCalibration& cal);
double rtd_resistance(double T_celsius, const RtdCalibration& cal);
/// Temperature uncertainty propagated from sigma_eta alone.
double rtd_temperature_sigma(double resistance, const RtdCalibration& cal);

/// Microwave counting window followed by a buffered heater pulse, repeating every period (s).
struct DutyCycleSchedule {
  double period = 0.2;
  double mw_on = 0.16;
  double heater_on = 0.03;
  double buffer = 0.005;
  double switch_edge = 0.0005;

  /// Throws ValidationError naming the violated constraint.
  void validate() const;
};

enum class Channel { mw, heater };

struct TimelineEvent {
  std::int64_t tick = 0;  // units of kClockPeriodS
  Channel channel = Channel::mw;
  bool on = false;

  double t() const { return static_cast<double>(tick) * kClockPeriodS; }
};

/// Events in [0, duration), ordered by time. The heater switches on one buffer after the
/// microwave turns off; a zero heater_on emits no heater events.
std::vector<TimelineEvent> schedule_timeline(const DutyCycleSchedule& d, double duration_s);

/// Smallest gap (s) between any microwave interval and any heater interval widened by the
/// switch edge on both sides; +inf when either channel never switches on.
double timeline_min_gap(const std::vector<TimelineEvent>& events, double switch_edge_s);

/// Whether the microwave is on at time t under the schedule (counting is gated by this).
bool mw_active(const DutyCycleSchedule& d, double t_s);

/// Setpoint changes (start time s, setpoint °C), approached with a first-order lag.
struct TemperatureSchedule {
  std::vector<std::pair<double, double>> steps;
  double tau_s = default_ramp_tau();

  /// A 2 °C step settles to 99% within 120 s.
  static double default_ramp_tau();
  void validate() const;
  /// Setpoint in force at time t.
  double setpoint_at(double t_s) const;
};

/// Levels start, start+step, ... for n_up steps, then back down to start when `return_down`.
TemperatureSchedule staircase_schedule(double start_c, double step_c, int n_up, double dwell_s, bool return_down = true);
/// Alternates low/high every dwell for n_cycles full cycles.
TemperatureSchedule alternating_schedule(double low_c, double high_c, double dwell_s, int n_cycles);

struct SetpointSeries {
  std::vector<double> t;   // s
  std::vector<double> T;   // °C, actual substrate temperature
  std::vector<double> setpoint;
};

/// Samples 0, dt, ... < duration of the lagged temperature, starting settled at the first setpoint.
SetpointSeries setpoint_series(const TemperatureSchedule& s, double dt, double duration_s);

std::string channel_name(Channel c);

}  // namespace ndsense
