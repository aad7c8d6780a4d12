#include "ndsense/lineshape.hpp"

#include <algorithm>
#include <cmath>

#include "ndsense/error.hpp"

namespace ndsense {

namespace {

void check_peak(const Lorentzian& p) {
  if (!std::isfinite(p.contrast) || p.contrast < 0.0 || p.contrast >= 1.0)
    throw ValidationError("lineshape: contrast must be in [0, 1)");
  if (!std::isfinite(p.hwhm) || !(p.hwhm > 0.0)) throw ValidationError("lineshape: hwhm must be > 0");
  if (!std::isfinite(p.center)) throw ValidationError("lineshape: centre must be finite");
}

double lorentz(const Lorentzian& p, double f) {
  double u = (f - p.center) / p.hwhm;
  return p.contrast / (1.0 + u * u);
}

}  // namespace

Lineshape Lineshape::double_lorentzian(const Lorentzian& a, const Lorentzian& b) {
  check_peak(a);
  check_peak(b);
  if (a.contrast + b.contrast >= 1.0) throw ValidationError("lineshape: total contrast must be < 1");
  Lineshape s;
  s.kind_ = Kind::double_lorentzian;
  s.peaks_ = {a, b};
  return s;
}

Lineshape Lineshape::single_lorentzian(const Lorentzian& a) {
  check_peak(a);
  Lineshape s;
  s.kind_ = Kind::single_lorentzian;
  s.peaks_ = {a};
  return s;
}

Lineshape Lineshape::interpolation(std::vector<double> freqs, std::vector<double> levels) {
  if (freqs.size() < 2 || freqs.size() != levels.size())
    throw ValidationError("lineshape: table needs >= 2 matching frequencies and levels");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!std::isfinite(freqs[i]) || !std::isfinite(levels[i])) throw ValidationError("lineshape: non-finite table");
    if (!(levels[i] > 0.0)) throw ValidationError("lineshape: table levels must be > 0");
    if (i > 0 && !(freqs[i] > freqs[i - 1])) throw ValidationError("lineshape: table frequencies must increase");
  }
  Lineshape s;
  s.kind_ = Kind::interpolation;
  s.table_f_ = std::move(freqs);
  s.table_l_ = std::move(levels);
  return s;
}

std::string Lineshape::kind_name() const {
  switch (kind_) {
    case Kind::double_lorentzian: return "double-lorentzian";
    case Kind::single_lorentzian: return "single-lorentzian";
    case Kind::interpolation: return "interpolation";
  }
  return "unknown";
}

double Lineshape::value(double f) const {
  if (kind_ != Kind::interpolation) {
    double v = 1.0;
    for (const auto& p : peaks_) v -= lorentz(p, f);
    return v;
  }
  if (f <= table_f_.front() || f >= table_f_.back()) {
    if (f == table_f_.front()) return table_l_.front();
    if (f == table_f_.back()) return table_l_.back();
    return 1.0;
  }
  auto it = std::upper_bound(table_f_.begin(), table_f_.end(), f);
  std::size_t j = static_cast<std::size_t>(it - table_f_.begin());
  double u = (f - table_f_[j - 1]) / (table_f_[j] - table_f_[j - 1]);
  return table_l_[j - 1] + u * (table_l_[j] - table_l_[j - 1]);
}

double Lineshape::slope(double f) const {
  if (kind_ != Kind::interpolation) {
    double d = 0.0;
    for (const auto& p : peaks_) {
      double u = (f - p.center) / p.hwhm;
      double q = 1.0 + u * u;
      d += 2.0 * p.contrast * u / (p.hwhm * q * q);
    }
    return d;
  }
  if (f < table_f_.front() || f >= table_f_.back()) return 0.0;
  auto it = std::upper_bound(table_f_.begin(), table_f_.end(), f);
  std::size_t j = static_cast<std::size_t>(it - table_f_.begin());
  return (table_l_[j] - table_l_[j - 1]) / (table_f_[j] - table_f_[j - 1]);
}

double Lineshape::slope_smooth(double f) const {
  if (kind_ != Kind::interpolation) return slope(f);
  const std::size_t n = table_f_.size();
  auto it = std::lower_bound(table_f_.begin(), table_f_.end(), f);
  std::size_t j = static_cast<std::size_t>(it - table_f_.begin());
  auto seg = [&](std::size_t k) { return (table_l_[k + 1] - table_l_[k]) / (table_f_[k + 1] - table_f_[k]); };
  double tol = 1e-9 * (table_f_[1] - table_f_[0]);
  for (std::size_t k : {j, j == 0 ? j : j - 1}) {
    if (k < n && std::abs(table_f_[k] - f) <= tol) {
      if (k == 0) return seg(0);
      if (k == n - 1) return seg(n - 2);
      return 0.5 * (seg(k - 1) + seg(k));
    }
  }
  return slope(f);
}

int Lineshape::n_params() const {
  return kind_ == Kind::double_lorentzian ? 6 : kind_ == Kind::single_lorentzian ? 3 : 0;
}

std::vector<double> Lineshape::params() const {
  std::vector<double> p;
  for (const auto& pk : peaks_) p.push_back(pk.contrast);
  for (const auto& pk : peaks_) p.push_back(pk.hwhm);
  for (const auto& pk : peaks_) p.push_back(pk.center);
  return p;
}

Lineshape Lineshape::from_params(Kind kind, const std::vector<double>& p) {
  if (kind == Kind::double_lorentzian) {
    if (p.size() != 6) throw ValidationError("lineshape: double Lorentzian needs 6 parameters");
    return double_lorentzian({p[0], p[2], p[4]}, {p[1], p[3], p[5]});
  }
  if (kind == Kind::single_lorentzian) {
    if (p.size() != 3) throw ValidationError("lineshape: single Lorentzian needs 3 parameters");
    return single_lorentzian({p[0], p[1], p[2]});
  }
  throw ValidationError("lineshape: tables have no parameter vector");
}

std::vector<double> Lineshape::param_gradient(double f) const {
  const std::size_t k = peaks_.size();
  std::vector<double> g(3 * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& p = peaks_[i];
    double u = (f - p.center) / p.hwhm;
    double q = 1.0 + u * u;
    g[i] = -1.0 / q;
    g[k + i] = -2.0 * p.contrast * u * u / (p.hwhm * q * q);
    g[2 * k + i] = -2.0 * p.contrast * u / (p.hwhm * q * q);
  }
  return g;
}

double Lineshape::dip_center() const {
  if (kind_ == Kind::interpolation) {
    auto it = std::min_element(table_l_.begin(), table_l_.end());
    return table_f_[static_cast<std::size_t>(it - table_l_.begin())];
  }
  auto it = std::max_element(peaks_.begin(), peaks_.end(),
                             [](const Lorentzian& a, const Lorentzian& b) { return a.contrast < b.contrast; });
  return it->center;
}

Lineshape Lineshape::shifted(double df) const {
  Lineshape s = *this;
  for (auto& p : s.peaks_) p.center += df;
  for (auto& f : s.table_f_) f += df;
  return s;
}

std::vector<double> frequency_grid(double f_start, double f_stop, int n) {
  if (n < 2 || !(f_stop > f_start) || !std::isfinite(f_start) || !std::isfinite(f_stop))
    throw ValidationError("frequency_grid: need n >= 2 and f_stop > f_start");
  std::vector<double> f(static_cast<std::size_t>(n));
  const double step = (f_stop - f_start) / (n - 1);
  for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = f_start + step * i;
  return f;
}

Lineshape default_lineshape(const DefaultLineshapeSpec& spec) {
  const double half = spec.splitting_hz / 2.0;
  return Lineshape::double_lorentzian({spec.contrast_low, spec.hwhm_low_hz, spec.center_hz - half},
                                      {spec.contrast_high, spec.hwhm_high_hz, spec.center_hz + half});
}

std::vector<double> default_grid(const DefaultLineshapeSpec& spec) {
  return frequency_grid(spec.center_hz - spec.span_hz / 2.0, spec.center_hz + spec.span_hz / 2.0, spec.n_points);
}

}  // namespace ndsense
