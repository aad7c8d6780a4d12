#include "ndsense/tracker.hpp"

#include <cmath>
#include <string>

#include "ndsense/error.hpp"
#include "ndsense/random.hpp"
#include "ndsense/rheology.hpp"

namespace ndsense {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("tracker config: " + what);
}

}  // namespace

std::size_t TrackerConfig::samples_per_bin() const {
  double spb = T_orbit / (static_cast<double>(n_bins) * clock);
  return static_cast<std::size_t>(std::llround(spb));
}

void TrackerConfig::validate() const {
  require(std::isfinite(T_orbit) && T_orbit > 0.0, "T_orbit must be > 0");
  require(std::isfinite(R_xy) && R_xy > 0.0, "R_xy must be > 0");
  require(std::isfinite(w_xy) && w_xy > 0.0, "w_xy must be > 0");
  require(std::isfinite(R_z) && R_z > 0.0, "R_z must be > 0");
  require(std::isfinite(w_z) && w_z > 0.0, "w_z must be > 0");
  require(std::isfinite(G) && G > -1.0 && G < 1.0, "G must be in (-1, 1)");
  require(n_bins >= 3, "n_bins must be >= 3");
  require(std::isfinite(clock) && clock > 0.0, "clock must be > 0");
  double spb = T_orbit / (static_cast<double>(n_bins) * clock);
  require(spb >= 1.0 - 1e-9 && std::abs(spb - std::round(spb)) <= 1e-6 * spb,
          "T_orbit must be an integral number of clock ticks per bin");
  require(std::isfinite(gain) && gain > 0.0 && gain < 2.0, "gain must be in (0, 2)");
  require(std::isfinite(background) && background >= 0.0, "background must be >= 0");
  require(initial_offset.finite(), "initial_offset must be finite");
  require(std::isfinite(lock_loss_factor) && lock_loss_factor > 0.0, "lock_loss_factor must be > 0");
  require(lock_loss_updates >= 1, "lock_loss_updates must be >= 1");
}

double expected_rate(Vec3 emitter, Vec3 beam, Plane plane, const TrackerConfig& cfg, double I_top_center,
                     double I_bottom_center) {
  if (!(cfg.w_xy > 0.0) || !(cfg.w_z > 0.0)) throw ValidationError("expected_rate: PSF widths must be > 0");
  const double dx = beam.x - emitter.x;
  const double dy = beam.y - emitter.y;
  const double plane_z = plane == Plane::top ? beam.z + cfg.R_z : beam.z - cfg.R_z;
  const double dz = plane_z - emitter.z;
  const double radial = std::exp(-2.0 * (dx * dx + dy * dy) / (cfg.w_xy * cfg.w_xy));
  const double axial = std::exp(-2.0 * dz * dz / (cfg.w_z * cfg.w_z));
  return (plane == Plane::top ? I_top_center : I_bottom_center) * radial * axial;
}

PlaneRates center_rates(const TrackerConfig& cfg, double brightness) {
  const double on_orbit = std::exp(-2.0 * cfg.R_xy * cfg.R_xy / (cfg.w_xy * cfg.w_xy)) *
                          std::exp(-2.0 * cfg.R_z * cfg.R_z / (cfg.w_z * cfg.w_z));
  const double ic = brightness / on_orbit;
  return {ic * (1.0 - cfg.G), ic * (1.0 + cfg.G)};
}

FitResult fit_orbit(const OrbitFrame& frame, const TrackerConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.n_bins);
  if (frame.counts_top.size() != n || frame.counts_bottom.size() != n)
    throw ValidationError("fit_orbit: frame has wrong number of bins");
  double top = 0.0, bottom = 0.0, a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ct = frame.counts_top[i];
    const double cb = frame.counts_bottom[i];
    if (!(ct >= 0.0) || !(cb >= 0.0) || !std::isfinite(ct) || !std::isfinite(cb))
      throw ValidationError("fit_orbit: counts must be finite and >= 0");
    const double theta = 2.0 * constants::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    top += ct;
    bottom += cb;
    a += (ct + cb) * std::cos(theta);
    b += (ct + cb) * std::sin(theta);
  }
  const double total = top + bottom;
  if (!(total > 0.0)) throw NoSignalError("fit_orbit: no photons in frame");
  FitResult fit;
  fit.I_prime = total / static_cast<double>(n);
  a *= 2.0 / static_cast<double>(n);
  b *= 2.0 / static_cast<double>(n);
  fit.delta = std::hypot(a, b) / fit.I_prime;
  fit.phi = std::atan2(b, a);
  if (fit.phi <= -constants::pi) fit.phi = constants::pi;
  fit.r_axial = (bottom - top) / total;
  return fit;
}

Vec3 correction(const FitResult& fit, const TrackerConfig& cfg) {
  const double denom = fit.r_axial * cfg.G - 1.0;
  if (std::abs(denom) < 1e-12) throw SingularError("correction: r·G = 1, axial correction undefined");
  const double radial = fit.delta * cfg.eps_xy();
  return {radial * std::cos(fit.phi), radial * std::sin(fit.phi), (fit.r_axial - cfg.G) / denom * cfg.eps_z()};
}

TrackResult track(const Trajectory& truth, const TrackerConfig& cfg, double brightness, std::uint64_t seed,
                  const RateModulation& modulation, bool keep_frames) {
  cfg.validate();
  truth.validate(2);
  if (!std::isfinite(brightness) || !(brightness > 0.0)) throw ValidationError("track: brightness must be > 0");
  const std::size_t n_orbits = static_cast<std::size_t>(std::floor(truth.duration() / cfg.T_orbit + 1e-9));
  if (n_orbits < 1) throw ValidationError("track: truth shorter than one orbit");

  const auto n_bins = static_cast<std::size_t>(cfg.n_bins);
  const std::size_t spb = cfg.samples_per_bin();
  const std::size_t ticks = spb * n_bins;
  const double tick = cfg.T_orbit / static_cast<double>(ticks);
  const PlaneRates rates = center_rates(cfg, brightness);
  const double inv_wxy2 = 2.0 / (cfg.w_xy * cfg.w_xy);
  const double inv_wz2 = 2.0 / (cfg.w_z * cfg.w_z);
  const double threshold = cfg.lock_loss_factor * cfg.w_xy;

  // Beam positions along the orbit are the same every period.
  std::vector<double> cx(ticks), cy(ticks);
  for (std::size_t j = 0; j < ticks; ++j) {
    const double theta = 2.0 * constants::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(ticks);
    cx[j] = cfg.R_xy * std::cos(theta);
    cy[j] = cfg.R_xy * std::sin(theta);
  }

  Rng rng = make_rng(seed);
  TrackResult out;
  out.estimate.dt = cfg.T_orbit;
  out.estimate.t0 = truth.t0 + 0.5 * cfg.T_orbit;
  out.estimate.meta = truth.meta;
  out.estimate.set_meta("source", "tracker");
  out.estimate.points.reserve(n_orbits);
  auto& diag = out.diagnostics;

  Vec3 center = truth.points.front() + cfg.initial_offset;
  int unlocked_run = 0;
  OrbitFrame frame;
  frame.counts_top.assign(n_bins, 0.0);
  frame.counts_bottom.assign(n_bins, 0.0);
  const double bg = cfg.background * tick;

  for (std::size_t k = 0; k < n_orbits; ++k) {
    const double t_start = truth.t0 + static_cast<double>(k) * cfg.T_orbit;
    frame.orbit_center = center;
    for (std::size_t n = 0; n < n_bins; ++n) {
      double mean_top = 0.0, mean_bottom = 0.0;
      for (std::size_t s = 0; s < spb; ++s) {
        const std::size_t j = n * spb + s;
        const double t = t_start + (static_cast<double>(j) + 0.5) * tick;
        const Vec3 e = truth.at(t) - center;
        const double dx = cx[j] - e.x, dy = cy[j] - e.y;
        const double radial = std::exp(-(dx * dx + dy * dy) * inv_wxy2);
        const double up = cfg.R_z - e.z, down = cfg.R_z + e.z;
        const double m = modulation ? modulation(t) : 1.0;
        mean_top += rates.top * radial * std::exp(-up * up * inv_wz2) * m;
        mean_bottom += rates.bottom * radial * std::exp(-down * down * inv_wz2) * m;
      }
      // A bin's count is a sum of independent per-tick Poisson draws, hence Poisson in the summed mean.
      mean_top = mean_top * tick + bg * static_cast<double>(spb);
      mean_bottom = mean_bottom * tick + bg * static_cast<double>(spb);
      frame.counts_top[n] = cfg.shot_noise ? poisson(rng, mean_top) : mean_top;
      frame.counts_bottom[n] = cfg.shot_noise ? poisson(rng, mean_bottom) : mean_bottom;
    }

    bool signal = true;
    Vec3 delta;
    try {
      delta = correction(fit_orbit(frame, cfg), cfg);
    } catch (const NoSignalError&) {
      signal = false;
    }
    const Vec3 estimate = center + delta;
    const double t_mid = t_start + 0.5 * cfg.T_orbit;
    const double err = (estimate - truth.at(t_mid)).norm();
    const bool locked = signal && err <= threshold;
    double photons = 0.0;
    for (std::size_t n = 0; n < n_bins; ++n) photons += frame.counts_top[n] + frame.counts_bottom[n];

    out.estimate.points.push_back(estimate);
    diag.t.push_back(t_mid);
    diag.err_nm.push_back(err);
    diag.locked.push_back(locked);
    diag.photons.push_back(photons);
    if (keep_frames) out.frames.push_back(frame);

    center += cfg.gain * delta;
    unlocked_run = locked ? 0 : unlocked_run + 1;
    if (unlocked_run >= cfg.lock_loss_updates) {
      diag.lock_lost = true;
      diag.lost_at = k;
      break;
    }
  }
  return out;
}

std::vector<StaticBenchmarkRow> static_benchmark(const std::vector<double>& pl_values, const TrackerConfig& cfg,
                                                 std::uint64_t seed, double duration_s, double psd_window_s) {
  cfg.validate();
  if (!std::isfinite(duration_s) || !(duration_s > 0.0)) throw ValidationError("static_benchmark: duration must be > 0");
  const auto lag = static_cast<std::size_t>(std::llround(1.0 / cfg.T_orbit));
  std::vector<StaticBenchmarkRow> rows;
  for (std::size_t i = 0; i < pl_values.size(); ++i) {
    const double pl = pl_values[i];
    if (!std::isfinite(pl) || !(pl > 0.0)) throw ValidationError("static_benchmark: PL values must be > 0");
    Trajectory still;
    still.dt = duration_s;
    still.points = {Vec3{}, Vec3{}};
    TrackResult res = track(still, cfg, pl / 2.0, derive_seed(seed, "tracker-photons", i));
    const Trajectory& est = res.estimate;
    if (res.diagnostics.lock_lost || est.size() <= lag + 1)
      throw std::runtime_error("static_benchmark: lock lost at PL " + std::to_string(pl));

    StaticBenchmarkRow row;
    row.pl = pl;
    const MsdCurve mxy = msd(est, Axes::xy(), {lag});
    const MsdCurve mz = msd(est, Axes::only_z(), {lag});
    row.D_xy = mxy.msd[0] / (4.0 * mxy.taus[0]);
    row.D_z = mz.msd[0] / (2.0 * mz.taus[0]);
    double se = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
      const Vec3& p = est.points[k];
      se += p.x * p.x + p.y * p.y + p.z * p.z;
      sxy += p.x * p.x + p.y * p.y;
    }
    row.rms_error = std::sqrt(se / static_cast<double>(est.size()));
    row.rms_xy = std::sqrt(sxy / (2.0 * static_cast<double>(est.size())));
    const Psd px = psd(est, Axes::only_x(), psd_window_s);
    row.psd_freqs = px.freqs;
    row.psd_x = px.density;
    row.psd_y = psd(est, Axes::only_y(), psd_window_s).density;
    row.psd_z = psd(est, Axes::only_z(), psd_window_s).density;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ndsense
