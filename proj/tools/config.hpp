#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndsense/chip.hpp"
#include "ndsense/error.hpp"
#include "ndsense/media.hpp"
#include "ndsense/thermometry.hpp"
#include "ndsense/tracker.hpp"

namespace ndsense::cli {

inline constexpr int kSchemaVersion = 1;

/// Raised for anything wrong in the configuration file itself; maps to exit code 1.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct MediumSection {
  std::string kind = "brownian";  // brownian | viscoelastic | glycerol
  double D = 1e4;                 // nm²/s, brownian
  ViscoelasticModel viscoelastic;
  double radius_nm = 28.0;        // glycerol
  double temperature_c = 25.0;    // glycerol without a schedule
  ViscousMediumModel viscosity;
  double dt_s = 1.2e-3;
  double duration_s = 60.0;
  std::vector<DirectedSegmentSpec> directed;
};

struct TrackerSection {
  bool enabled = true;
  TrackerConfig cfg;
  double brightness = 1e6;  // counts/s per plane at lock
};

struct OdmrSection {
  bool enabled = false;
  ThermometryConfig cfg;
  bool write_scans = false;
};

struct ScheduleSection {
  bool enabled = false;
  TemperatureSchedule temperature;
  double timeline_s = 1.0;  // span of the written duty-cycle timeline
};

struct SegmentationSection {
  bool enabled = false;
  std::size_t window = 75;
  double min_length_nm = 500.0;
  double confidence = 0.95;
  int dims = 2;
};

struct AnalysisSection {
  std::string axes = "xy";
  std::size_t n_lags = 30;
  double fit_tau_min_s = 0.0;  // 0: the first lag
  double fit_tau_max_s = 0.0;  // 0: min(1 s, duration / 10)
  double psd_window_s = 4.8;
  double radius_nm = 0.0;      // 0: no modulus or force output
  std::optional<double> temperature_c;  // otherwise taken from trajectory metadata
  bool force = false;
  double settle_s = 120.0;     // κ calibration discards bins closer than this to a setpoint change
  SegmentationSection segmentation;
  ViscousMediumModel viscosity;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  MediumSection medium;
  TrackerSection tracker;
  OdmrSection odmr;
  ScheduleSection schedule;
  AnalysisSection analysis;

  /// Cross-section checks; throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses JSON text. Unknown keys, wrong types and a missing or mismatched schema_version are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace ndsense::cli
