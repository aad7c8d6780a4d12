#include "ndsense/thermometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "ndsense/csv.hpp"
#include "ndsense/error.hpp"
#include "ndsense/random.hpp"

namespace ndsense {

void ThermometryConfig::validate() const {
  if (!std::isfinite(lambda0) || !(lambda0 > 0.0)) throw ValidationError("thermometry: lambda0 must be > 0");
  if (!std::isfinite(kappa_khz_per_c) || kappa_khz_per_c == 0.0) throw ValidationError("thermometry: kappa must be nonzero");
  if (!std::isfinite(scan_s) || !(scan_s > 0.0)) throw ValidationError("thermometry: scan_s must be > 0");
  if (!std::isfinite(bin_s) || !(bin_s > 0.0)) throw ValidationError("thermometry: bin_s must be > 0");
  if (n_f < 2) throw ValidationError("thermometry: n_f must be >= 2");
  if (lineshape.n_points < 3 || !(lineshape.span_hz > 0.0)) throw ValidationError("thermometry: bad frequency grid");
  duty_cycle.validate();
  if (scans_per_bin() < 1) throw ValidationError("thermometry: no complete sweep fits in a bin");
}

int ThermometryConfig::scans_per_bin() const {
  // Sweeps never straddle a gated interval, so count whole sweeps per microwave window.
  const auto events = schedule_timeline(duty_cycle, bin_s);
  int scans = 0;
  std::int64_t open = -1;
  const auto end = static_cast<std::int64_t>(std::llround(bin_s / kClockPeriodS));
  auto close = [&](std::int64_t stop) {
    scans += static_cast<int>(std::floor(static_cast<double>(stop - open) * kClockPeriodS / scan_s + 1e-9));
    open = -1;
  };
  for (const auto& e : events) {
    if (e.channel != Channel::mw) continue;
    if (e.on) {
      open = e.tick;
    } else if (open >= 0) {
      close(e.tick);
    }
  }
  if (open >= 0) close(end);
  return scans;
}

ScanTiming ThermometryConfig::timing() const { return {scan_s, duty_cycle.mw_on / duty_cycle.period}; }

ThermometryRecord simulate_thermometry(const std::vector<double>& dT_per_bin, const ThermometryConfig& cfg,
                                       std::uint64_t seed) {
  cfg.validate();
  const Lineshape shape = default_lineshape(cfg.lineshape);
  const auto grid = default_grid(cfg.lineshape);
  const int scans = cfg.scans_per_bin();
  Rng rng = make_rng(seed);
  ThermometryRecord rec;
  rec.bins.reserve(dT_per_bin.size());
  for (std::size_t i = 0; i < dT_per_bin.size(); ++i) {
    if (!std::isfinite(dT_per_bin[i])) throw ValidationError("simulate_thermometry: non-finite temperature");
    rec.t.push_back(static_cast<double>(i) * cfg.bin_s);
    rec.true_dT.push_back(dT_per_bin[i]);
    rec.bins.push_back(synthesize_scan(shape, grid, cfg.lambda0, cfg.kappa_khz_per_c * 1e3 * dT_per_bin[i], rng, scans));
  }
  return rec;
}

ThermometryAnalysis analyze_thermometry(const std::vector<OdmrScan>& bins, double bin_s, std::size_t n_f,
                                        const KappaCalibration& cal) {
  if (bins.empty()) throw ValidationError("analyze_thermometry: no bins");
  if (!(bin_s > 0.0) || n_f < 2) throw ValidationError("analyze_thermometry: need bin_s > 0 and n_f >= 2");
  if (cal.kappa == 0.0) throw ValidationError("analyze_thermometry: kappa must be nonzero");
  ThermometryAnalysis out;
  out.table = build_interpolation(bins);
  out.fits.reserve(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const ShiftFit fit = fit_shift(bins[i], out.table);
    out.fits.push_back(fit);
    if (!fit.converged) {
      ++out.n_rejected;
      continue;
    }
    const Estimate T = shift_to_temperature(fit.shift, fit.sigma, cal);
    out.per_bin.t.push_back(static_cast<double>(i) * bin_s);
    out.per_bin.dT.push_back(T.value);
    out.per_bin.sigma.push_back(T.sigma);
  }
  const auto blocks = average_shifts(out.fits, n_f);
  // Blocks are consecutive n_f bins; dropped blocks leave gaps, so recover each start from the counts.
  std::size_t first = 0;
  for (std::size_t b = 0; b * n_f < out.fits.size(); ++b) {
    std::size_t usable = 0;
    for (std::size_t i = b * n_f; i < std::min(out.fits.size(), (b + 1) * n_f); ++i) usable += out.fits[i].converged;
    if (usable < 2) continue;
    const auto& blk = blocks.at(first++);
    const Estimate T = shift_to_temperature(blk.shift, blk.sem, cal);
    const double span = static_cast<double>(std::min(n_f, out.fits.size() - b * n_f));
    out.averaged.t.push_back((static_cast<double>(b * n_f) + 0.5 * span) * bin_s);
    out.averaged.dT.push_back(T.value);
    out.averaged.sigma.push_back(T.sigma);
  }
  return out;
}

WhiteNoiseFit allan_sensitivity(const TemperatureSeries& per_bin, double bin_s, double tau_min, double tau_max) {
  const auto points = allan_deviation(per_bin.dT, bin_s, octave_factors(per_bin.dT.size()));
  return fit_white_noise(points, tau_min, tau_max);
}

KappaCalibration calibrate_from_record(const std::vector<double>& setpoints_per_bin, const std::vector<double>& t_per_bin,
                                       const std::vector<ShiftFit>& fits, double settle_s) {
  if (setpoints_per_bin.size() != fits.size() || t_per_bin.size() != fits.size())
    throw ValidationError("calibrate_from_record: length mismatch");
  if (!(settle_s >= 0.0)) throw ValidationError("calibrate_from_record: settle_s must be >= 0");
  std::vector<double> sp, shifts;
  double changed_at = t_per_bin.empty() ? 0.0 : t_per_bin.front() - settle_s;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (i > 0 && setpoints_per_bin[i] != setpoints_per_bin[i - 1]) changed_at = t_per_bin[i];
    if (!fits[i].converged || t_per_bin[i] - changed_at < settle_s) continue;
    sp.push_back(setpoints_per_bin[i]);
    shifts.push_back(fits[i].shift);
  }
  return calibrate_kappa(sp, shifts);
}

void write_temperature_series(std::ostream& out, const TemperatureSeries& s) {
  CsvWriter w(out, "temperature", {"t_s", "dT_C", "sigma_C"});
  for (std::size_t i = 0; i < s.t.size(); ++i) w.row({s.t[i], s.dT[i], s.sigma[i]});
}

TemperatureSeries read_temperature_series(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::size_t ct = table.column("t_s"), cd = table.column("dT_C"), cs = table.column("sigma_C");
  TemperatureSeries s;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    s.t.push_back(table.number(r, ct));
    s.dT.push_back(table.number(r, cd));
    s.sigma.push_back(table.number(r, cs));
  }
  return s;
}

}  // namespace ndsense
