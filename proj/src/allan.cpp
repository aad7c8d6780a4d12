#include <cmath>

#include "ndsense/error.hpp"
#include "ndsense/odmr.hpp"

namespace ndsense {

std::vector<AllanPoint> allan_deviation(const std::vector<double>& series, double period,
                                        const std::vector<std::size_t>& factors) {
  if (!std::isfinite(period) || !(period > 0.0)) throw ValidationError("allan_deviation: period must be > 0");
  const std::size_t n = series.size();
  if (n < 3) throw ValidationError("allan_deviation: need at least 3 samples");
  // Offsetting by the first sample keeps constant series exactly zero.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(series[i])) throw ValidationError("allan_deviation: non-finite sample");
    prefix[i + 1] = prefix[i] + (series[i] - series[0]);
  }
  std::vector<AllanPoint> out;
  for (std::size_t m : factors) {
    if (m < 1) throw ValidationError("allan_deviation: averaging factor must be >= 1");
    if (3 * m > n) continue;
    double acc = 0.0;
    const std::size_t terms = n - 2 * m + 1;
    for (std::size_t j = 0; j < terms; ++j) {
      double d = prefix[j + 2 * m] - 2.0 * prefix[j + m] + prefix[j];
      acc += d * d;
    }
    const double md = static_cast<double>(m);
    AllanPoint p;
    p.m = m;
    p.tau = md * period;
    p.adev = std::sqrt(acc / (2.0 * md * md * static_cast<double>(terms)));
    out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> octave_factors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t m = 1; 3 * m <= n; m *= 2) out.push_back(m);
  return out;
}

WhiteNoiseFit fit_white_noise(const std::vector<AllanPoint>& points, double tau_min, double tau_max) {
  double s_logs = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  WhiteNoiseFit fit;
  for (const auto& p : points) {
    if (p.tau < tau_min || p.tau > tau_max) continue;
    if (!(p.adev > 0.0)) throw ValidationError("fit_white_noise: Allan deviation must be > 0 in range");
    double x = std::log(p.tau), y = std::log(p.adev);
    s_logs += y + 0.5 * x;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.n_points;
  }
  if (fit.n_points == 0) throw ValidationError("fit_white_noise: no points in range");
  const double n = static_cast<double>(fit.n_points);
  fit.S = std::exp(s_logs / n);
  const double det = n * sxx - sx * sx;
  fit.slope = fit.n_points >= 2 && det > 0.0 ? (n * sxy - sx * sy) / det : -0.5;
  return fit;
}

}  // namespace ndsense
