#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ndsense/trajectory.hpp"
#include "ndsense/types.hpp"

namespace ndsense {

/// Linear viscosity model eta(T) = eta0 + slope * (T - T_ref), valid on [T_min, T_max] (°C).
/// Defaults are the reference glycerol constants; the slope sign is a free parameter.
struct ViscousMediumModel {
  double eta0 = 0.301;     // Pa·s
  double mu = 0.0208;      // Pa·s/°C, signed
  double T_ref = 35.0;     // °C
  double T_min = 21.0;     // °C
  double T_max = 45.0;     // °C

  /// Throws ValidationError if eta is non-positive anywhere on the operating range.
  void validate() const;
};

/// Viscosity (Pa·s) at T (°C); throws outside the operating range or if eta <= 0.
double viscosity_at(const ViscousMediumModel& model, double T_celsius);

/// Stokes–Einstein diffusion coefficient in nm²/s for T in kelvin, r in nm, eta in Pa·s.
double stokes_einstein_D(double T_kelvin, double radius_nm, double eta_pa_s);

/// Inverse of stokes_einstein_D for the radius (nm).
double stokes_einstein_radius(double T_kelvin, double D_nm2_s, double eta_pa_s);

/// Fractional Brownian motion parameters: per-axis MSD = 2 K_alpha tau^alpha.
struct ViscoelasticModel {
  double alpha = 1.0;    // 0 < alpha <= 2
  double K_alpha = 1e4;  // nm²/s^alpha
};

/// Constant-velocity drift added over [start, start + duration] steps.
struct DirectedSegmentSpec {
  std::size_t start = 0;
  std::size_t duration = 1;  // steps
  Vec3 velocity;             // nm/s
};

/// 3D Brownian walk of n_steps + 1 points from `origin`; per-axis increments N(0, 2 D dt).
Trajectory simulate_brownian(double D, std::size_t n_steps, double dt, std::uint64_t seed, Vec3 origin = {});

/// 3D fractional Brownian motion with Hurst index alpha/2 (exact circulant embedding).
/// alpha == 1 delegates to simulate_brownian with D = K_alpha.
Trajectory simulate_viscoelastic(const ViscoelasticModel& model, std::size_t n_steps, double dt, std::uint64_t seed,
                                 Vec3 origin = {});

/// Adds piecewise-linear drift. Inside a segment the displacement grows by v·dt per
/// step; afterwards the accumulated offset is kept, so steps outside segments are unchanged.
Trajectory inject_directed(const Trajectory& traj, const std::vector<DirectedSegmentSpec>& specs);

/// Ensembles; member i is seeded with derive_seed(master_seed, "medium", i).
std::vector<Trajectory> brownian_ensemble(double D, std::size_t n_steps, double dt, std::uint64_t master_seed,
                                          std::size_t count);
std::vector<Trajectory> viscoelastic_ensemble(const ViscoelasticModel& model, std::size_t n_steps, double dt,
                                              std::uint64_t master_seed, std::size_t count);

}  // namespace ndsense
