#include "ndsense/rheology.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "fft.hpp"
#include "ndsense/error.hpp"

namespace ndsense {

namespace {

// r[i] = Σ_a s[a+i] s[a] for i = 0..max_lag.
std::vector<double> lagged_products(const std::vector<double>& s, std::size_t max_lag) {
  const std::size_t n = s.size();
  max_lag = std::min(max_lag, n == 0 ? 0 : n - 1);
  std::vector<double> r(max_lag + 1, 0.0);
  if (n == 0) return r;
  if (max_lag <= 64) {
    for (std::size_t i = 0; i <= max_lag; ++i) {
      double acc = 0.0;
      for (std::size_t a = 0; a + i < n; ++a) acc += s[a + i] * s[a];
      r[i] = acc;
    }
    return r;
  }
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<std::complex<double>> buf(m);
  for (std::size_t a = 0; a < n; ++a) buf[a] = s[a];
  detail::fft_forward(buf);
  for (auto& c : buf) c = std::norm(c);
  detail::fft_forward(buf);  // power spectrum is real and even, so a forward pass inverts it
  for (std::size_t i = 0; i <= max_lag; ++i) r[i] = buf[i].real() / static_cast<double>(m);
  return r;
}

struct LagStats {
  double msd = 0.0;
  double var = 0.0;
};

LagStats lag_stats(const std::vector<double>& x, std::size_t lag, MsdVariance method) {
  const std::size_t K = x.size() - lag;
  std::vector<double> xi(K);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t a = 0; a < K; ++a) {
    xi[a] = x[a + lag] - x[a];
    sum += xi[a];
    sum2 += xi[a] * xi[a];
  }
  const double Kd = static_cast<double>(K);
  LagStats out;
  out.msd = sum2 / Kd;
  const std::size_t max_i = std::min(lag, K - 1);
  if (method == MsdVariance::squared_products) {
    std::vector<double> sq(K);
    for (std::size_t a = 0; a < K; ++a) sq[a] = xi[a] * xi[a];
    const auto r = lagged_products(sq, max_i);
    double acc = 0.0;
    for (std::size_t i = 1; i <= max_i; ++i) acc += r[i] / (Kd - static_cast<double>(i));
    out.var = 4.0 / Kd * acc;
    return out;
  }
  const double mean = sum / Kd;
  for (auto& v : xi) v -= mean;
  const auto r = lagged_products(xi, max_i);
  const double m2 = mean * mean;
  auto term = [&](std::size_t i) {
    double c = r[i] / (Kd - static_cast<double>(i));
    return 2.0 * c * c + 4.0 * m2 * c;
  };
  double acc = term(0);
  for (std::size_t i = 1; i <= max_i; ++i) acc += 2.0 * (1.0 - static_cast<double>(i) / Kd) * term(i);
  out.var = std::max(0.0, acc / Kd);
  return out;
}

void check_lags(const std::vector<std::size_t>& lags, std::size_t n_points) {
  if (lags.empty()) throw ValidationError("msd: no lags requested");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] == 0) throw ValidationError("msd: lag must be >= 1");
    if (lags[i] >= n_points) throw ValidationError("msd: lag " + std::to_string(lags[i]) + " >= trajectory length");
    if (i > 0 && lags[i] <= lags[i - 1]) throw ValidationError("msd: lags must be strictly increasing");
  }
}

double require_positive(double v, const char* what) {
  if (!std::isfinite(v) || !(v > 0.0)) throw ValidationError(std::string(what) + " must be finite and > 0");
  return v;
}

}  // namespace

double MsdCurve::sigma(std::size_t i) const { return std::max(std::sqrt(var.at(i)), noise_floor_nm2); }

std::vector<std::size_t> log_spaced_lags(std::size_t max_lag, std::size_t count) {
  if (max_lag < 1 || count < 1) throw ValidationError("log_spaced_lags: max_lag and count must be >= 1");
  std::vector<std::size_t> out;
  const double top = std::log(static_cast<double>(max_lag));
  for (std::size_t i = 0; i < count; ++i) {
    double u = count == 1 ? top : top * static_cast<double>(i) / static_cast<double>(count - 1);
    auto lag = static_cast<std::size_t>(std::llround(std::exp(u)));
    lag = std::clamp<std::size_t>(lag, 1, max_lag);
    if (out.empty() || lag > out.back()) out.push_back(lag);
  }
  return out;
}

std::vector<std::size_t> linear_lags(std::size_t first, std::size_t last) {
  if (first < 1 || last < first) throw ValidationError("linear_lags: need 1 <= first <= last");
  std::vector<std::size_t> out;
  for (std::size_t l = first; l <= last; ++l) out.push_back(l);
  return out;
}

MsdCurve msd(const Trajectory& traj, Axes axes, const std::vector<std::size_t>& lags, const MsdOptions& opts) {
  traj.validate(2);
  if (axes.count() == 0) throw ValidationError("msd: no axes selected");
  check_lags(lags, traj.size());
  MsdCurve c;
  c.axes = axes;
  c.dims = axes.count();
  c.noise_floor_nm2 = opts.noise_floor_nm2;
  c.lags = lags;
  c.taus.reserve(lags.size());
  c.msd.assign(lags.size(), 0.0);
  c.var.assign(lags.size(), 0.0);
  for (auto lag : lags) {
    c.taus.push_back(traj.dt * static_cast<double>(lag));
    c.k.push_back(traj.size() - lag);
  }
  std::vector<double> x(traj.size());
  for (int axis = 0; axis < 3; ++axis) {
    if (!axes.has(axis)) continue;
    for (std::size_t i = 0; i < traj.size(); ++i) x[i] = component(traj.points[i], axis);
    for (std::size_t j = 0; j < lags.size(); ++j) {
      LagStats s = lag_stats(x, lags[j], opts.variance);
      c.msd[j] += s.msd;
      c.var[j] += s.var;
    }
  }
  return c;
}

MsdCurve ensemble_msd(const std::vector<Trajectory>& trajs, Axes axes, const std::vector<std::size_t>& lags,
                      const MsdOptions& opts) {
  if (trajs.size() < 2) throw ValidationError("ensemble_msd: need at least 2 trajectories");
  MsdCurve out;
  std::vector<std::vector<double>> values(lags.size());
  for (const auto& t : trajs) {
    MsdCurve c = msd(t, axes, lags, opts);
    if (out.taus.empty()) {
      out = c;
    } else if (c.taus != out.taus) {
      throw ValidationError("ensemble_msd: trajectories differ in sampling");
    }
    for (std::size_t j = 0; j < lags.size(); ++j) values[j].push_back(c.msd[j]);
  }
  const double n = static_cast<double>(trajs.size());
  for (std::size_t j = 0; j < lags.size(); ++j) {
    double mean = 0.0;
    for (double v : values[j]) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values[j]) ss += (v - mean) * (v - mean);
    out.msd[j] = mean;
    out.var[j] = ss / (n - 1.0);
  }
  return out;
}

DiffusionFit fit_diffusion(const MsdCurve& curve, double tau_min, double tau_max) {
  double swxx = 0.0, swxy = 0.0;
  DiffusionFit fit;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double tau = curve.taus[i];
    if (tau < tau_min || tau > tau_max) continue;
    if (!(curve.msd[i] > 0.0)) throw ValidationError("fit_diffusion: non-positive MSD in fit range");
    double s = curve.sigma(i);
    double w = 1.0 / (s * s);
    swxx += w * tau * tau;
    swxy += w * tau * curve.msd[i];
    ++fit.n_points;
    if (curve.msd[i] < curve.noise_floor_nm2) fit.below_floor = true;
  }
  if (fit.n_points == 0) throw ValidationError("fit_diffusion: no lags in fit range");
  const double scale = 2.0 * curve.dims;
  fit.D = swxy / swxx / scale;
  fit.sigma = 1.0 / std::sqrt(swxx) / scale;
  return fit;
}

DiffusionFit fit_diffusion_at(const MsdCurve& curve, double tau) {
  if (curve.size() == 0) throw ValidationError("fit_diffusion_at: empty curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (std::abs(curve.taus[i] - tau) < std::abs(curve.taus[best] - tau)) best = i;
  const double dt = curve.taus[best] / static_cast<double>(curve.lags[best]);
  if (std::abs(curve.taus[best] - tau) > 0.5 * dt) throw ValidationError("fit_diffusion_at: lag not on curve");
  if (!(curve.msd[best] > 0.0)) throw ValidationError("fit_diffusion_at: non-positive MSD");
  const double scale = 2.0 * curve.dims * curve.taus[best];
  DiffusionFit fit;
  fit.D = curve.msd[best] / scale;
  fit.sigma = curve.sigma(best) / scale;
  fit.n_points = 1;
  fit.below_floor = curve.msd[best] < curve.noise_floor_nm2;
  return fit;
}

ExponentFit anomalous_exponent(const MsdCurve& curve, double tau_min, double tau_max) {
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  ExponentFit fit;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double tau = curve.taus[i];
    if (tau < tau_min || tau > tau_max) continue;
    if (!(curve.msd[i] > 0.0)) throw ValidationError("anomalous_exponent: non-positive MSD in range");
    double rel = std::sqrt(curve.var[i]) / curve.msd[i];
    double w = 1.0 / std::max(rel * rel, 1e-12);
    double x = std::log(tau), y = std::log(curve.msd[i]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++fit.n_points;
  }
  if (fit.n_points < 4) throw ValidationError("anomalous_exponent: need at least 4 lags in range");
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw ValidationError("anomalous_exponent: degenerate lag range");
  fit.alpha = (sw * sxy - sx * sy) / det;
  fit.sigma = std::sqrt(sw / det);
  fit.amplitude = std::exp((sy - fit.alpha * sx) / sw);
  return fit;
}

std::vector<double> local_exponents(const MsdCurve& curve) {
  const std::size_t n = curve.size();
  if (n < 2) throw ValidationError("local_exponents: need at least 2 lags");
  std::vector<double> lx(n), ly(n), a(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(curve.msd[i] > 0.0)) throw ValidationError("local_exponents: MSD must be > 0");
    lx[i] = std::log(curve.taus[i]);
    ly[i] = std::log(curve.msd[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i == 0 ? 0 : i - 1;
    std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    a[i] = (ly[hi] - ly[lo]) / (lx[hi] - lx[lo]);
  }
  return a;
}

ComplexModulus complex_modulus(const MsdCurve& curve, double T_kelvin, double radius_nm) {
  require_positive(T_kelvin, "complex_modulus: T");
  require_positive(radius_nm, "complex_modulus: radius");
  if (curve.dims != 2) throw ValidationError("complex_modulus: requires a 2-axis MSD");
  const auto alpha = local_exponents(curve);
  ComplexModulus m;
  const double r_m = radius_nm * 1e-9;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double a = alpha[i];
    bool bad = !(a >= 0.0 && a <= 2.0);
    double ac = std::clamp(a, 0.0, 2.0);
    double g = constants::boltzmann * T_kelvin / (constants::pi * r_m * curve.msd[i] * 1e-18 * std::tgamma(1.0 + ac));
    double d = constants::pi / 2.0 * ac;
    m.freqs.push_back(1.0 / curve.taus[i]);
    m.G_abs.push_back(g);
    m.G_prime.push_back(g * std::cos(d));
    m.G_dprime.push_back(g * std::sin(d));
    m.alpha_local.push_back(a);
    m.delta.push_back(d);
    m.flagged.push_back(bad);
  }
  return m;
}

double Psd::at(double f_hz) const {
  if (freqs.empty() || f_hz < freqs.front() || f_hz > freqs.back())
    throw ValidationError("psd: frequency outside grid");
  auto it = std::lower_bound(freqs.begin(), freqs.end(), f_hz);
  std::size_t j = static_cast<std::size_t>(it - freqs.begin());
  if (j == 0 || freqs[j] == f_hz) return density[j];
  double u = (f_hz - freqs[j - 1]) / (freqs[j] - freqs[j - 1]);
  return density[j - 1] + u * (density[j] - density[j - 1]);
}

Psd psd(const Trajectory& traj, Axes axes, double window_s) {
  traj.validate(2);
  require_positive(window_s, "psd: window");
  if (axes.count() == 0) throw ValidationError("psd: no axes selected");
  const auto nseg = static_cast<std::size_t>(std::llround(window_s / traj.dt));
  if (nseg < 4) throw ValidationError("psd: window shorter than 4 samples");
  const std::size_t step = nseg - nseg / 2;
  const std::size_t n = traj.size();
  if (n < nseg + step) throw ValidationError("psd: window admits fewer than 2 segments");
  const std::size_t segments = (n - nseg) / step + 1;
  const double fs = 1.0 / traj.dt;

  std::vector<double> w(nseg);
  double w2 = 0.0;
  for (std::size_t j = 0; j < nseg; ++j) {
    w[j] = 0.5 - 0.5 * std::cos(2.0 * constants::pi * static_cast<double>(j) / static_cast<double>(nseg));
    w2 += w[j] * w[j];
  }
  const std::size_t nf = nseg / 2 + 1;
  Psd out;
  out.n_axes = axes.count();
  out.n_segments = segments;
  out.density.assign(nf, 0.0);
  for (std::size_t j = 0; j < nf; ++j) out.freqs.push_back(static_cast<double>(j) * fs / static_cast<double>(nseg));

  std::vector<double> seg(nseg);
  const double scale = 1.0 / (fs * w2 * static_cast<double>(segments));
  for (int axis = 0; axis < 3; ++axis) {
    if (!axes.has(axis)) continue;
    for (std::size_t s = 0; s < segments; ++s) {
      const std::size_t off = s * step;
      double mean = 0.0;
      for (std::size_t j = 0; j < nseg; ++j) mean += component(traj.points[off + j], axis);
      mean /= static_cast<double>(nseg);
      for (std::size_t j = 0; j < nseg; ++j) seg[j] = (component(traj.points[off + j], axis) - mean) * w[j];
      const auto spec = detail::rfft(seg);
      for (std::size_t j = 0; j < nf; ++j) {
        double p = std::norm(spec[j]) * scale;
        bool edge = j == 0 || (nseg % 2 == 0 && j == nf - 1);
        out.density[j] += edge ? p : 2.0 * p;
      }
    }
  }
  return out;
}

double thermal_force_density(double T_kelvin, double radius_nm, double G_dprime_pa, double omega) {
  require_positive(T_kelvin, "thermal_force_density: T");
  require_positive(radius_nm, "thermal_force_density: radius");
  require_positive(omega, "thermal_force_density: omega");
  const double k_loss = 6.0 * constants::pi * radius_nm * 1e-9 * G_dprime_pa;
  return 4.0 * constants::boltzmann * T_kelvin * k_loss / omega;
}

ForceSpectrum external_force_spectrum(const Psd& spectrum, const ComplexModulus& modulus, double radius_nm,
                                      double T_kelvin) {
  require_positive(radius_nm, "external_force_spectrum: radius");
  require_positive(T_kelvin, "external_force_spectrum: T");
  if (modulus.freqs.size() < 2) throw ValidationError("external_force_spectrum: modulus needs >= 2 points");
  if (spectrum.freqs.size() != spectrum.density.size() || spectrum.n_axes < 1)
    throw ValidationError("external_force_spectrum: malformed PSD");

  struct Node {
    double lf, lg, delta;
  };
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < modulus.freqs.size(); ++i)
    nodes.push_back({std::log(modulus.freqs[i]), std::log(modulus.G_abs[i]), modulus.delta[i]});
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.lf < b.lf; });
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i].lf > nodes[i - 1].lf)) throw ValidationError("external_force_spectrum: duplicate modulus frequency");

  ForceSpectrum out;
  const double r_m = radius_nm * 1e-9;
  for (std::size_t j = 0; j < spectrum.freqs.size(); ++j) {
    double f = spectrum.freqs[j];
    if (!(f > 0.0)) continue;
    double lf = std::log(f);
    if (lf < nodes.front().lf - 1e-12 || lf > nodes.back().lf + 1e-12) continue;
    auto it = std::lower_bound(nodes.begin(), nodes.end(), lf, [](const Node& n, double v) { return n.lf < v; });
    std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - nodes.begin()), 1, nodes.size() - 1);
    double u = std::clamp((lf - nodes[k - 1].lf) / (nodes[k].lf - nodes[k - 1].lf), 0.0, 1.0);
    double g_abs = std::exp(nodes[k - 1].lg + u * (nodes[k].lg - nodes[k - 1].lg));
    double delta = nodes[k - 1].delta + u * (nodes[k].delta - nodes[k - 1].delta);
    double omega = 2.0 * constants::pi * f;
    double k_abs = 6.0 * constants::pi * r_m * g_abs;
    double thermal = spectrum.n_axes * thermal_force_density(T_kelvin, radius_nm, g_abs * std::sin(delta), omega);
    double raw = k_abs * k_abs * spectrum.density[j] * 1e-18 - thermal;
    out.omegas.push_back(omega);
    out.thermal.push_back(thermal);
    out.external_raw.push_back(raw);
    out.external.push_back(std::max(raw, 0.0));
    out.clipped.push_back(raw < 0.0);
    out.K_abs.push_back(k_abs);
  }
  if (out.omegas.empty()) throw ValidationError("external_force_spectrum: PSD and modulus grids do not overlap");
  return out;
}

RadiusFit fit_hydrodynamic_radius(const std::vector<TemperatureDiffusion>& series, const ViscousMediumModel& medium) {
  if (series.size() < 3) throw ValidationError("fit_hydrodynamic_radius: need at least 3 temperature points");
  bool weighted = true;
  for (const auto& p : series) {
    require_positive(p.D, "fit_hydrodynamic_radius: D");
    if (!(p.sigma > 0.0)) weighted = false;
  }
  // D = c·u with u = 1/r and c = k_B T / (6π η) in nm³/s.
  std::vector<double> c, w;
  for (const auto& p : series) {
    double eta = viscosity_at(medium, p.T_celsius);
    c.push_back(constants::boltzmann * (p.T_celsius + constants::zero_celsius) / (6.0 * constants::pi * eta) * 1e27);
    w.push_back(weighted ? 1.0 / (p.sigma * p.sigma) : 1.0);
  }
  double scc = 0.0, scd = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    scc += w[i] * c[i] * c[i];
    scd += w[i] * c[i] * series[i].D;
  }
  const double u = scd / scc;
  if (!(u > 0.0) || !std::isfinite(u)) throw ValidationError("fit_hydrodynamic_radius: non-physical radius");
  double chi2 = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    double res = series[i].D - c[i] * u;
    chi2 += w[i] * res * res;
  }
  const double dof = static_cast<double>(series.size() - 1);
  RadiusFit fit;
  fit.chi2_reduced = chi2 / dof;
  // Unweighted fits take their scale from the residuals; weighted fits only inflate.
  double inflate = weighted ? std::max(1.0, fit.chi2_reduced) : fit.chi2_reduced;
  double sigma_u = std::sqrt(inflate / scc);
  fit.radius = 1.0 / u;
  fit.sigma = sigma_u / (u * u);
  return fit;
}

}  // namespace ndsense
