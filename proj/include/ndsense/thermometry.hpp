#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ndsense/chip.hpp"
#include "ndsense/lineshape.hpp"
#include "ndsense/odmr.hpp"

namespace ndsense {

/// Acquisition settings shared by simulation and analysis of an ODMR temperature record.
struct ThermometryConfig {
  DefaultLineshapeSpec lineshape;
  double lambda0 = 5.0;           // counts per point per sweep off resonance
  double kappa_khz_per_c = -60.0;
  double scan_s = 2e-3;           // one sweep
  DutyCycleSchedule duty_cycle;   // sweeps only run while the microwave is on
  double bin_s = 0.4;             // one shift fit per bin
  std::size_t n_f = 30;           // fits averaged per reported point

  void validate() const;
  /// Whole sweeps that fit inside the microwave windows of one bin.
  int scans_per_bin() const;
  ScanTiming timing() const;
};

struct ThermometryRecord {
  std::vector<double> t;          // bin start, s
  std::vector<double> true_dT;    // °C relative to the reference
  std::vector<OdmrScan> bins;
};

/// One summed scan per bin with the resonance displaced by κ·ΔT.
ThermometryRecord simulate_thermometry(const std::vector<double>& dT_per_bin, const ThermometryConfig& cfg,
                                       std::uint64_t seed);

struct TemperatureSeries {
  std::vector<double> t;      // s
  std::vector<double> dT;     // °C
  std::vector<double> sigma;  // °C
};

struct ThermometryAnalysis {
  Lineshape table;
  std::vector<ShiftFit> fits;
  TemperatureSeries per_bin;   // every converged fit, σ from the fit
  TemperatureSeries averaged;  // n_f blocks, σ is the standard error
  std::size_t n_rejected = 0;
};

/// Builds the interpolation table from all bins, fits each bin, converts to temperature.
ThermometryAnalysis analyze_thermometry(const std::vector<OdmrScan>& bins, double bin_s, std::size_t n_f,
                                        const KappaCalibration& cal);

/// Sensitivity (°C/√Hz) from the Allan deviation of a per-bin temperature series over
/// averaging times in [tau_min, tau_max].
WhiteNoiseFit allan_sensitivity(const TemperatureSeries& per_bin, double bin_s, double tau_min, double tau_max);

/// Staircase calibration: fits from bins recorded while the setpoint is held at least
/// `settle_s` are grouped by setpoint and regressed.
KappaCalibration calibrate_from_record(const std::vector<double>& setpoints_per_bin, const std::vector<double>& t_per_bin,
                                       const std::vector<ShiftFit>& fits, double settle_s);

void write_temperature_series(std::ostream& out, const TemperatureSeries& s);
TemperatureSeries read_temperature_series(std::istream& in);

}  // namespace ndsense
