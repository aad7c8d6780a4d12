#include "ndsense/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "ndsense/csv.hpp"
#include "ndsense/error.hpp"

namespace ndsense {

void Trajectory::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string* Trajectory::get_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

void Trajectory::validate(std::size_t min_points) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("trajectory: dt must be > 0");
  if (!std::isfinite(t0)) throw ValidationError("trajectory: t0 must be finite");
  if (points.size() < std::max<std::size_t>(min_points, 1))
    throw ValidationError("trajectory: need at least " + std::to_string(std::max<std::size_t>(min_points, 1)) +
                          " points, got " + std::to_string(points.size()));
  for (const auto& p : points)
    if (!p.finite()) throw ValidationError("trajectory: non-finite coordinate");
}

Vec3 Trajectory::at(double t) const {
  if (points.empty()) throw ValidationError("trajectory: empty");
  double u = (t - t0) / dt;
  if (!(u > 0.0)) return points.front();
  auto last = static_cast<double>(points.size() - 1);
  if (u >= last) return points.back();
  auto i = static_cast<std::size_t>(u);
  double f = u - static_cast<double>(i);
  const Vec3& a = points[i];
  const Vec3& b = points[i + 1];
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.z + f * (b.z - a.z)};
}

Trajectory Trajectory::slice(std::size_t first, std::size_t last) const {
  if (first > last || last > points.size()) throw ValidationError("trajectory: slice out of range");
  Trajectory out;
  out.dt = dt;
  out.t0 = time(first);
  out.meta = meta;
  out.points.assign(points.begin() + static_cast<std::ptrdiff_t>(first),
                    points.begin() + static_cast<std::ptrdiff_t>(last));
  return out;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("dt_s", format_double(traj.dt));
  meta.emplace_back("t0_s", format_double(traj.t0));
  for (const auto& kv : traj.meta)
    if (kv.first != "dt_s" && kv.first != "t0_s") meta.push_back(kv);
  CsvWriter w(out, "trajectory", {"t_s", "x_nm", "y_nm", "z_nm"}, meta);
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const Vec3& p = traj.points[i];
    w.row({traj.time(i), p.x, p.y, p.z});
  }
}

void write_trajectory_file(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_trajectory(out, traj);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Trajectory read_trajectory(std::istream& in) {
  CsvTable t = read_csv(in);
  std::size_t ct = t.column("t_s"), cx = t.column("x_nm"), cy = t.column("y_nm"), cz = t.column("z_nm");
  if (t.rows.empty()) throw ValidationError("trajectory: no data rows");
  Trajectory traj;
  std::vector<double> times;
  times.reserve(t.rows.size());
  traj.points.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    times.push_back(t.number(r, ct));
    traj.points.push_back({t.number(r, cx), t.number(r, cy), t.number(r, cz)});
  }
  for (const auto& kv : t.meta)
    if (kv.first != "dt_s" && kv.first != "t0_s") traj.meta.push_back(kv);
  traj.t0 = times.front();
  if (const auto* dt = t.meta_value("dt_s")) {
    traj.dt = parse_double(*dt, 0);
  } else if (times.size() >= 2) {
    // The first interval locates the offending row; the span average is the better estimate.
    const double first = times[1] - times[0];
    for (std::size_t i = 2; i < times.size(); ++i) {
      const double expected = times[0] + first * static_cast<double>(i);
      if (std::abs(times[i] - expected) > 1e-6 * std::abs(first) * static_cast<double>(i) + 1e-12 * std::abs(expected))
        throw ParseError(t.line_numbers[i], "non-uniform time column");
    }
    traj.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  } else {
    throw ValidationError("trajectory: single point without #dt_s metadata");
  }
  if (!(traj.dt > 0.0)) throw ValidationError("trajectory: dt must be > 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    double expected = traj.t0 + traj.dt * static_cast<double>(i);
    if (std::abs(times[i] - expected) > 1e-6 * traj.dt + 1e-12 * std::abs(expected))
      throw ParseError(t.line_numbers[i], "non-uniform time column");
  }
  traj.validate();
  return traj;
}

Trajectory read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_trajectory(in);
}

}  // namespace ndsense

namespace ndsense {

Axes Axes::parse(const std::string& s) {
  Axes a{false, false, false};
  if (s.empty()) throw ValidationError("axes: empty selection");
  for (char c : s) {
    bool* slot = c == 'x' ? &a.x : c == 'y' ? &a.y : c == 'z' ? &a.z : nullptr;
    if (!slot) throw ValidationError("axes: unknown axis '" + std::string(1, c) + "'");
    if (*slot) throw ValidationError("axes: duplicate axis '" + std::string(1, c) + "'");
    *slot = true;
  }
  return a;
}

std::string Axes::str() const {
  std::string s;
  if (x) s += 'x';
  if (y) s += 'y';
  if (z) s += 'z';
  return s;
}

}  // namespace ndsense
