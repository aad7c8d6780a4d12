#include "ndsense/media.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "fft.hpp"
#include "ndsense/csv.hpp"
#include "ndsense/error.hpp"
#include "ndsense/random.hpp"

namespace ndsense {

namespace {

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || !(v > 0.0)) throw ValidationError(std::string(what) + " must be finite and > 0");
}

void tag(Trajectory& t, const char* medium, std::uint64_t seed) {
  t.set_meta("medium", medium);
  t.set_meta("seed", std::to_string(seed));
}

}  // namespace

void ViscousMediumModel::validate() const {
  if (!std::isfinite(eta0) || !std::isfinite(mu) || !std::isfinite(T_ref) || !std::isfinite(T_min) ||
      !std::isfinite(T_max))
    throw ValidationError("viscous medium: parameters must be finite");
  if (T_min > T_max) throw ValidationError("viscous medium: T_min must be <= T_max");
  // Linear in T, so the extremes sit at the range ends.
  double lo = eta0 + mu * (T_min - T_ref);
  double hi = eta0 + mu * (T_max - T_ref);
  if (!(lo > 0.0) || !(hi > 0.0)) throw ValidationError("viscous medium: viscosity must be > 0 over [T_min, T_max]");
}

double viscosity_at(const ViscousMediumModel& model, double T_celsius) {
  model.validate();
  if (!std::isfinite(T_celsius) || T_celsius < model.T_min || T_celsius > model.T_max)
    throw ValidationError("viscosity_at: temperature " + format_double(T_celsius) + " C outside operating range");
  double eta = model.eta0 + model.mu * (T_celsius - model.T_ref);
  if (!(eta > 0.0)) throw ValidationError("viscosity_at: non-positive viscosity");
  return eta;
}

double stokes_einstein_D(double T_kelvin, double radius_nm, double eta_pa_s) {
  require_finite_positive(T_kelvin, "stokes_einstein_D: T");
  require_finite_positive(radius_nm, "stokes_einstein_D: radius");
  require_finite_positive(eta_pa_s, "stokes_einstein_D: eta");
  double d_m2 = constants::boltzmann * T_kelvin / (6.0 * constants::pi * radius_nm * 1e-9 * eta_pa_s);
  return d_m2 * 1e18;
}

double stokes_einstein_radius(double T_kelvin, double D_nm2_s, double eta_pa_s) {
  require_finite_positive(T_kelvin, "stokes_einstein_radius: T");
  require_finite_positive(D_nm2_s, "stokes_einstein_radius: D");
  require_finite_positive(eta_pa_s, "stokes_einstein_radius: eta");
  return constants::boltzmann * T_kelvin / (6.0 * constants::pi * eta_pa_s * D_nm2_s * 1e-18) * 1e9;
}

Trajectory simulate_brownian(double D, std::size_t n_steps, double dt, std::uint64_t seed, Vec3 origin) {
  if (!std::isfinite(D) || D < 0.0) throw ValidationError("simulate_brownian: D must be finite and >= 0");
  if (n_steps < 1) throw ValidationError("simulate_brownian: n_steps must be >= 1");
  require_finite_positive(dt, "simulate_brownian: dt");
  if (!origin.finite()) throw ValidationError("simulate_brownian: origin must be finite");

  Rng rng = make_rng(seed);
  std::normal_distribution<double> step(0.0, std::sqrt(2.0 * D * dt));
  Trajectory t;
  t.dt = dt;
  t.points.reserve(n_steps + 1);
  Vec3 p = origin;
  t.points.push_back(p);
  for (std::size_t i = 0; i < n_steps; ++i) {
    double dx = step(rng);
    double dy = step(rng);
    double dz = step(rng);
    p += Vec3{dx, dy, dz};
    t.points.push_back(p);
  }
  tag(t, "brownian", seed);
  t.set_meta("D_nm2_s", format_double(D));
  return t;
}

namespace {

// Square roots of the circulant eigenvalues (scaled by 1/m) embedding the
// autocovariance of unit-amplitude fractional Gaussian noise.
std::vector<double> fgn_spectrum_sqrt(std::size_t n, double hurst) {
  const std::size_t m = 2 * n;
  auto gamma = [hurst](double k) {
    double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(std::abs(k - 1.0), h2));
  };
  std::vector<std::complex<double>> c(m);
  for (std::size_t k = 0; k <= n; ++k) c[k] = gamma(static_cast<double>(k));
  for (std::size_t k = n + 1; k < m; ++k) c[k] = c[m - k];
  detail::fft_forward(c);
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lam = c[k].real();
    if (lam < 0.0) {
      if (lam < -1e-8 * static_cast<double>(m)) throw std::runtime_error("simulate_viscoelastic: embedding not PSD");
      lam = 0.0;
    }
    out[k] = std::sqrt(lam / static_cast<double>(m));
  }
  return out;
}

}  // namespace

Trajectory simulate_viscoelastic(const ViscoelasticModel& model, std::size_t n_steps, double dt, std::uint64_t seed,
                                 Vec3 origin) {
  if (!std::isfinite(model.alpha) || !(model.alpha > 0.0) || model.alpha > 2.0)
    throw ValidationError("simulate_viscoelastic: alpha must be in (0, 2]");
  if (!std::isfinite(model.K_alpha) || model.K_alpha < 0.0)
    throw ValidationError("simulate_viscoelastic: K_alpha must be finite and >= 0");
  if (model.alpha == 1.0) {
    Trajectory t = simulate_brownian(model.K_alpha, n_steps, dt, seed, origin);
    t.set_meta("alpha", "1");
    return t;
  }
  if (n_steps < 1) throw ValidationError("simulate_viscoelastic: n_steps must be >= 1");
  require_finite_positive(dt, "simulate_viscoelastic: dt");
  if (!origin.finite()) throw ValidationError("simulate_viscoelastic: origin must be finite");

  const double scale = std::sqrt(2.0 * model.K_alpha * std::pow(dt, model.alpha));
  const std::vector<double> sq = fgn_spectrum_sqrt(n_steps, model.alpha / 2.0);
  const std::size_t m = sq.size();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Real and imaginary parts of one transform are independent samples.
  auto draw = [&]() {
    std::vector<std::complex<double>> w(m);
    for (std::size_t k = 0; k < m; ++k) {
      double re = normal(rng);
      double im = normal(rng);
      w[k] = {sq[k] * re, sq[k] * im};
    }
    detail::fft_forward(w);
    return w;
  };
  const auto xy = draw();
  const auto zz = draw();

  Trajectory t;
  t.dt = dt;
  t.points.reserve(n_steps + 1);
  Vec3 p = origin;
  t.points.push_back(p);
  for (std::size_t i = 0; i < n_steps; ++i) {
    p += Vec3{scale * xy[i].real(), scale * xy[i].imag(), scale * zz[i].real()};
    t.points.push_back(p);
  }
  tag(t, "fbm", seed);
  t.set_meta("alpha", format_double(model.alpha));
  t.set_meta("K_alpha", format_double(model.K_alpha));
  return t;
}

Trajectory inject_directed(const Trajectory& traj, const std::vector<DirectedSegmentSpec>& specs) {
  traj.validate();
  const std::size_t n_steps = traj.size() - 1;
  std::vector<DirectedSegmentSpec> sorted(specs);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto& s = sorted[k];
    if (s.duration < 1) throw ValidationError("inject_directed: duration must be >= 1");
    if (!s.velocity.finite()) throw ValidationError("inject_directed: velocity must be finite");
    if (s.start + s.duration > n_steps) throw ValidationError("inject_directed: segment exceeds trajectory");
    if (k > 0 && sorted[k - 1].start + sorted[k - 1].duration > s.start)
      throw ValidationError("inject_directed: overlapping segments");
  }
  Trajectory out = traj;
  for (const auto& s : sorted) {
    const Vec3 step = traj.dt * s.velocity;
    for (std::size_t i = s.start + 1; i < out.size(); ++i) {
      double k = static_cast<double>(std::min(i - s.start, s.duration));
      out.points[i] += k * step;
    }
  }
  return out;
}

std::vector<Trajectory> brownian_ensemble(double D, std::size_t n_steps, double dt, std::uint64_t master_seed,
                                          std::size_t count) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(simulate_brownian(D, n_steps, dt, derive_seed(master_seed, "medium", i)));
  return out;
}

std::vector<Trajectory> viscoelastic_ensemble(const ViscoelasticModel& model, std::size_t n_steps, double dt,
                                              std::uint64_t master_seed, std::size_t count) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(simulate_viscoelastic(model, n_steps, dt, derive_seed(master_seed, "medium", i)));
  return out;
}

}  // namespace ndsense
