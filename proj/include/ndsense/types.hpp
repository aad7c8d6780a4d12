#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace ndsense {

/// Position or displacement in nanometres.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return s * a; }
  Vec3& operator+=(Vec3 o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

/// Axis selection for analyses that operate on a subset of coordinates.
struct Axes {
  bool x = true;
  bool y = true;
  bool z = false;

  static constexpr Axes xy() { return {true, true, false}; }
  static constexpr Axes xyz() { return {true, true, true}; }
  static constexpr Axes only_x() { return {true, false, false}; }
  static constexpr Axes only_y() { return {false, true, false}; }
  static constexpr Axes only_z() { return {false, false, true}; }

  int count() const { return int(x) + int(y) + int(z); }
  bool has(int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }

  /// Parses "x", "xy", "xyz", "z", ... (order-insensitive).
  static Axes parse(const std::string& s);
  std::string str() const;
};

inline double component(Vec3 v, int axis) { return axis == 0 ? v.x : axis == 1 ? v.y : v.z; }

/// Squared length over the selected axes only.
inline double norm2(Vec3 v, Axes axes) {
  double s = 0.0;
  if (axes.x) s += v.x * v.x;
  if (axes.y) s += v.y * v.y;
  if (axes.z) s += v.z * v.z;
  return s;
}

/// Value with a one-sigma uncertainty.
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

namespace constants {
inline constexpr double boltzmann = 1.380649e-23;  // J/K
inline constexpr double zero_celsius = 273.15;      // K
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

}  // namespace ndsense
