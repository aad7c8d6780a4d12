#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ndsense/lineshape.hpp"
#include "ndsense/random.hpp"
#include "ndsense/types.hpp"

namespace ndsense {

/// Summed photon counts over `n_scans` sweeps of a uniform frequency grid.
struct OdmrScan {
  std::vector<double> freqs;   // Hz
  std::vector<double> counts;  // per point, summed over the sweeps
  int n_scans = 1;
  bool outside_grid = false;   // the shifted dip left the grid

  void validate() const;
};

/// Counts ~ Poisson(n_scans · Λ0 · L(f − δf)) per point.
OdmrScan synthesize_scan(const Lineshape& shape, const std::vector<double>& freqs, double lambda0, double shift_hz,
                         Rng& rng, int n_scans = 1);
OdmrScan synthesize_scan(const Lineshape& shape, const std::vector<double>& freqs, double lambda0, double shift_hz,
                         std::uint64_t seed, int n_scans = 1);

/// Mean spectrum of the scans, normalized so the median of the top decile of levels is 1.
Lineshape build_interpolation(const std::vector<OdmrScan>& scans);

struct ShiftFitOptions {
  double max_shift_hz = 0.0;  // search half-range; 0 means a quarter of the grid span
  double tolerance_hz = 1.0;
  int max_iterations = 200;
};

struct ShiftFit {
  double lambda0 = 0.0;  // off-resonance counts per point, in the data's units
  double shift = 0.0;    // Hz
  double sigma = 0.0;    // Hz, from s²(JᵀJ)⁻¹
  bool converged = false;
};

/// Two-parameter least squares of counts to Λ0 · L(f − δf); Λ0 is solved in closed form.
ShiftFit fit_shift(const OdmrScan& scan, const Lineshape& shape, const ShiftFitOptions& opts = {});

struct AveragedShift {
  double shift = 0.0;  // Hz, mean of the converged fits in the block
  double sem = 0.0;    // Hz, standard error of that mean
  std::size_t n_used = 0;
  std::size_t n_rejected = 0;
};

/// Averages consecutive blocks of n_f fits; non-converged fits are excluded and counted.
/// Blocks with fewer than 2 usable fits are dropped.
std::vector<AveragedShift> average_shifts(const std::vector<ShiftFit>& fits, std::size_t n_f);

struct LorentzianFit {
  Lineshape shape;
  double lambda0 = 0.0;
  double center = 0.0;  // mean of the peak centres, Hz
  bool converged = false;
  int iterations = 0;
};

/// Full least squares of counts to Λ0 · L(f) over Λ0 and every shape parameter
/// (7 for the double, 4 for the single Lorentzian), starting from `initial`.
LorentzianFit fit_lorentzian(const OdmrScan& scan, const Lineshape& initial, double lambda0_initial);

/// ΔT = δf / κ with σ from σ_δf and σ_κ in quadrature.
struct KappaCalibration {
  double kappa = -60.0;       // kHz/°C
  double sigma_kappa = 0.0;   // kHz/°C
  double f0_hz = 2.87e9;      // resonance at T_ref
  double T_ref = 0.0;         // °C
};
Estimate shift_to_temperature(double shift_hz, double sigma_hz, const KappaCalibration& cal);

enum class CrbParams {
  shift,            // δf only, Λ0 known
  amplitude_shift,  // Λ0 and δf
  full,             // Λ0 and every shape parameter (tables: same as amplitude_shift)
};

struct CrbResult {
  Eigen::MatrixXd fisher;
  Eigen::MatrixXd covariance;  // inverse Fisher matrix
  std::vector<std::string> names;
  double shift_variance = 0.0;  // Hz²; for full Lorentzian fits, of the mean centre
};

/// Poisson Fisher information of one sweep with Λ0 counts per point off resonance.
/// Throws SingularError when the information matrix is singular.
CrbResult crb(const Lineshape& shape, double lambda0, const std::vector<double>& freqs, CrbParams params);

struct ScanTiming {
  double scan_s = 2e-3;  // one full sweep
  double duty = 0.8;     // counting fraction of the duty cycle
};

/// Shot-noise limited sensitivity in °C/√Hz: sqrt(var_δf · scan_s / duty) / |κ|.
double crb_temperature_sensitivity(const Lineshape& shape, double lambda0, const std::vector<double>& freqs,
                                   double kappa_khz_per_c, const ScanTiming& timing = {},
                                   CrbParams params = CrbParams::shift);

struct AllanPoint {
  double tau = 0.0;
  double adev = 0.0;
  std::size_t m = 0;
};

/// Overlapping Allan deviation for averaging factors m (τ = m·period); m > N/3 is skipped.
std::vector<AllanPoint> allan_deviation(const std::vector<double>& series, double period,
                                        const std::vector<std::size_t>& factors);
/// Octave-spaced averaging factors 1, 2, 4, ... up to N/3.
std::vector<std::size_t> octave_factors(std::size_t n);

struct WhiteNoiseFit {
  double S = 0.0;      // σ_A = S/√τ
  double slope = 0.0;  // free log-log slope over the same points
  std::size_t n_points = 0;
};
WhiteNoiseFit fit_white_noise(const std::vector<AllanPoint>& points, double tau_min, double tau_max);

/// Per-level mean and standard error of δf, then weighted regression against the setpoint.
/// Needs >= 3 distinct levels.
KappaCalibration calibrate_kappa(const std::vector<double>& setpoints_c, const std::vector<double>& shifts_hz,
                                 double base_frequency_hz = 2.87e9);

struct KappaMeasurement {
  double kappa = 0.0;  // kHz/°C
  double sigma = 0.0;
};

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  std::vector<double> samples;
};

/// Posterior of mean(live) − mean(dry) under a normal hierarchical model per group
/// (flat prior on the mean, uniform prior on the between-diamond spread).
PosteriorSummary kappa_shift_posterior(const std::vector<KappaMeasurement>& live,
                                       const std::vector<KappaMeasurement>& dry, std::size_t n_samples,
                                       std::uint64_t seed);

/// ODMR CSV `f_hz,counts` with blank-line separated scans, or long form with a `scan_id` column.
std::vector<OdmrScan> read_odmr(std::istream& in);
void write_odmr(std::ostream& out, const std::vector<OdmrScan>& scans);

}  // namespace ndsense
