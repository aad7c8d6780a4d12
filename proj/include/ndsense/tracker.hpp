#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ndsense/trajectory.hpp"
#include "ndsense/types.hpp"

namespace ndsense {

/// Double-plane orbital tracking geometry and loop settings. Lengths in nm, times in s.
struct TrackerConfig {
  double T_orbit = 9.6e-3;
  double R_xy = 50.0;
  double w_xy = 260.0;
  double R_z = 200.0;   // collection planes at ±R_z
  double w_z = 200.0;
  double G = 0.0;       // detector imbalance (I_bottom - I_top)/(I_bottom + I_top)
  int n_bins = 8;
  double clock = 10e-6;
  double gain = 1.0;    // fraction of each correction applied to the orbit centre
  double background = 0.0;  // counts/s per plane, added uniformly
  bool shot_noise = true;   // false: bins hold expected counts
  Vec3 initial_offset;      // orbit centre minus truth at t0
  double lock_loss_factor = 3.0;  // residual threshold in units of w_xy
  int lock_loss_updates = 5;

  double eps_xy() const { return w_xy * w_xy / (4.0 * R_xy); }
  double eps_z() const { return w_z * w_z / (4.0 * R_z); }
  std::size_t samples_per_bin() const;
  /// Throws ValidationError naming the violated constraint.
  void validate() const;
};

enum class Plane { top, bottom };

/// Count rate (counts/s) for an emitter at `emitter` seen by the beam at `beam`,
/// both relative to the orbit centre. `I_top_center`/`I_bottom_center` are the
/// per-plane rates with emitter and beam both at the centre.
double expected_rate(Vec3 emitter, Vec3 beam, Plane plane, const TrackerConfig& cfg, double I_top_center,
                     double I_bottom_center);

/// Centre rates producing `brightness` counts/s on each plane when locked (G = 0).
struct PlaneRates {
  double top = 0.0;
  double bottom = 0.0;
};
PlaneRates center_rates(const TrackerConfig& cfg, double brightness);

/// Photon counts of one orbit, binned by angle; bin n covers [n, n+1)·2π/n_bins.
struct OrbitFrame {
  std::vector<double> counts_top;
  std::vector<double> counts_bottom;
  Vec3 orbit_center;
};

struct FitResult {
  double I_prime = 0.0;
  double delta = 0.0;
  double phi = 0.0;
  double r_axial = 0.0;
};

/// Closed-form least squares of the summed bins to I'[1 + δ cos(θ_n − φ)] at bin-centre angles.
/// Throws NoSignalError for an all-zero frame.
FitResult fit_orbit(const OrbitFrame& frame, const TrackerConfig& cfg);

/// (δ ε_xy cos φ, δ ε_xy sin φ, (r − G)/(rG − 1) ε_z); throws SingularError when rG = 1.
Vec3 correction(const FitResult& fit, const TrackerConfig& cfg);

struct TrackDiagnostics {
  std::vector<double> t;          // s, update time (mid-orbit)
  std::vector<double> err_nm;     // |estimate − truth|
  std::vector<bool> locked;
  std::vector<double> photons;    // total counts per update
  bool lock_lost = false;
  std::size_t lost_at = 0;        // update index at which loss was declared
};

struct TrackResult {
  Trajectory estimate;  // one point per orbit, at mid-orbit times
  TrackDiagnostics diagnostics;
  std::vector<OrbitFrame> frames;  // filled only when requested
};

/// Per-tick multiplier on the photon rate (absolute time in s), e.g. spin-contrast dips.
using RateModulation = std::function<double(double)>;

/// Runs the feedback loop against `truth` (linearly interpolated at every clock tick)
/// for as many whole orbits as the truth covers. Stops early once lock loss is declared.
TrackResult track(const Trajectory& truth, const TrackerConfig& cfg, double brightness, std::uint64_t seed,
                  const RateModulation& modulation = {}, bool keep_frames = false);

struct StaticBenchmarkRow {
  double pl = 0.0;          // total counts/s at lock, both planes
  double D_xy = 0.0;        // apparent, nm²/s, from MSD at 1 s
  double D_z = 0.0;
  double rms_error = 0.0;   // nm, per update, 3D
  double rms_xy = 0.0;      // nm, per axis, transverse
  std::vector<double> psd_freqs;
  std::vector<double> psd_x, psd_y, psd_z;  // nm²/Hz
};

/// Tracks a stationary emitter for `duration_s` at each total PL rate.
std::vector<StaticBenchmarkRow> static_benchmark(const std::vector<double>& pl_values, const TrackerConfig& cfg,
                                                 std::uint64_t seed, double duration_s = 60.0,
                                                 double psd_window_s = 4.8);

}  // namespace ndsense
