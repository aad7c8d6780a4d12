#pragma once

#include <cstddef>
#include <vector>

#include "ndsense/media.hpp"
#include "ndsense/trajectory.hpp"
#include "ndsense/types.hpp"

namespace ndsense {

/// System noise floor on MSD values, 1e-4 µm².
inline constexpr double kMsdNoiseFloorNm2 = 100.0;

/// How the per-lag MSD variance is estimated.
enum class MsdVariance {
  /// Gaussian covariance-of-products form: Var = (1/K²) Σ_ab Cov(ξa², ξb²) truncated at |a-b| <= τ.
  covariance,
  /// (4/K) Σ_{i=1..τ} mean_α [ξ(i+α) ξ(α)]², kept for comparison; overestimates by ~5x on Brownian data.
  squared_products,
};

struct MsdOptions {
  MsdVariance variance = MsdVariance::covariance;
  double noise_floor_nm2 = kMsdNoiseFloorNm2;
};

/// Time-averaged MSD per lag, summed over the selected axes.
struct MsdCurve {
  std::vector<double> taus;       // s
  std::vector<std::size_t> lags;  // samples
  std::vector<double> msd;        // nm²
  std::vector<double> var;        // nm⁴, statistical only
  std::vector<std::size_t> k;     // number of pair differences per lag
  Axes axes;
  int dims = 2;
  double noise_floor_nm2 = kMsdNoiseFloorNm2;

  std::size_t size() const { return taus.size(); }
  /// Reported one-sigma error: statistical, never below the noise floor.
  double sigma(std::size_t i) const;
};

/// Lags 1..max_lag spaced approximately logarithmically, unique and increasing.
std::vector<std::size_t> log_spaced_lags(std::size_t max_lag, std::size_t count);
std::vector<std::size_t> linear_lags(std::size_t first, std::size_t last);

/// Throws if any lag is 0 or >= N, or lags are not strictly increasing.
MsdCurve msd(const Trajectory& traj, Axes axes, const std::vector<std::size_t>& lags, const MsdOptions& opts = {});

/// Mean of per-trajectory MSD curves; var holds the empirical inter-trajectory variance.
MsdCurve ensemble_msd(const std::vector<Trajectory>& trajs, Axes axes, const std::vector<std::size_t>& lags,
                      const MsdOptions& opts = {});

struct DiffusionFit {
  double D = 0.0;      // nm²/s
  double sigma = 0.0;  // nm²/s
  std::size_t n_points = 0;
  bool below_floor = false;  // some used MSD value is under the noise floor
};

/// Weighted fit of MSD = 2·dims·D·τ through the origin over tau_min <= τ <= tau_max.
DiffusionFit fit_diffusion(const MsdCurve& curve, double tau_min, double tau_max);

/// D from the single lag closest to tau (must match within half a sample).
DiffusionFit fit_diffusion_at(const MsdCurve& curve, double tau);

struct ExponentFit {
  double alpha = 0.0;
  double sigma = 0.0;
  double amplitude = 0.0;  // MSD at τ = 1 s
  std::size_t n_points = 0;
};

/// Weighted log-log regression over tau_min <= τ <= tau_max; needs >= 4 points.
ExponentFit anomalous_exponent(const MsdCurve& curve, double tau_min, double tau_max);

struct ComplexModulus {
  std::vector<double> freqs;  // Hz, 1/τ, decreasing with τ order
  std::vector<double> G_abs, G_prime, G_dprime;  // Pa
  std::vector<double> alpha_local;
  std::vector<double> delta;  // rad
  std::vector<bool> flagged;  // local exponent outside [0, 2]
};

/// Generalized Stokes–Einstein estimate from a 2D MSD (axes summed):
/// |G*| = k_B T / (π r MSD Γ(1 + α)), δ = π α / 2, α the local log-log slope.
ComplexModulus complex_modulus(const MsdCurve& curve, double T_kelvin, double radius_nm);

/// Local log-log slope: centered over neighbours, one-sided at the ends.
std::vector<double> local_exponents(const MsdCurve& curve);

struct Psd {
  std::vector<double> freqs;    // Hz
  std::vector<double> density;  // nm²/Hz, one-sided, summed over axes
  int n_axes = 0;
  std::size_t n_segments = 0;

  /// Linear interpolation in frequency; throws outside the grid.
  double at(double f_hz) const;
};

/// Welch estimate with a Hann window of `window_s`, 50% overlap and per-segment mean removal.
/// Requires at least two segments.
Psd psd(const Trajectory& traj, Axes axes, double window_s);

struct ForceSpectrum {
  std::vector<double> omegas;        // rad/s
  std::vector<double> thermal;       // N²/Hz, summed over the PSD's axes
  std::vector<double> external;      // N²/Hz, clipped at zero
  std::vector<double> external_raw;  // N²/Hz, signed
  std::vector<double> K_abs;         // N/m
  std::vector<bool> clipped;
};

/// Thermal force density for one axis, 4 k_B T K''/ω with K = 6π r G*.
double thermal_force_density(double T_kelvin, double radius_nm, double G_dprime_pa, double omega);

/// external = |K|² PSD − thermal on the PSD frequencies inside the modulus range.
/// The modulus is interpolated as log|G*| and δ against log f.
ForceSpectrum external_force_spectrum(const Psd& psd, const ComplexModulus& modulus, double radius_nm,
                                      double T_kelvin);

struct TemperatureDiffusion {
  double T_celsius = 0.0;
  double D = 0.0;      // nm²/s
  double sigma = 0.0;  // nm²/s; <= 0 means unweighted
};

struct RadiusFit {
  double radius = 0.0;  // nm
  double sigma = 0.0;   // nm
  double chi2_reduced = 0.0;
};

/// Least squares of D(T) = k_B T / (6π r η(T)) for r; needs >= 3 points.
RadiusFit fit_hydrodynamic_radius(const std::vector<TemperatureDiffusion>& series, const ViscousMediumModel& medium);

}  // namespace ndsense
