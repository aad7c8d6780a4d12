#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ndsense/types.hpp"

namespace ndsense {

/// Uniformly sampled 3D position series (nm) starting at t0 (s).
struct Trajectory {
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<Vec3> points;
  std::vector<std::pair<std::string, std::string>> meta;

  std::size_t size() const { return points.size(); }
  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double duration() const { return points.empty() ? 0.0 : dt * static_cast<double>(points.size() - 1); }

  void set_meta(const std::string& key, const std::string& value);
  const std::string* get_meta(const std::string& key) const;

  /// Throws ValidationError unless dt > 0, all points are finite and size() >= min_points.
  void validate(std::size_t min_points = 1) const;

  /// Linear interpolation at absolute time t, clamped to the sampled range.
  Vec3 at(double t) const;

  /// Copy holding points [first, last).
  Trajectory slice(std::size_t first, std::size_t last) const;
};

/// CSV `t_s,x_nm,y_nm,z_nm` with `#key=value` metadata; dt is written as `#dt_s=`.
void write_trajectory(std::ostream& out, const Trajectory& traj);
void write_trajectory_file(const std::string& path, const Trajectory& traj);

/// Reads the CSV produced by write_trajectory. dt comes from `#dt_s` when present,
/// otherwise from the time column, which must then be uniform.
Trajectory read_trajectory(std::istream& in);
Trajectory read_trajectory_file(const std::string& path);

}  // namespace ndsense
