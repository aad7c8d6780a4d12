#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "ndsense/chip.hpp"
#include "ndsense/csv.hpp"
#include "ndsense/media.hpp"
#include "ndsense/odmr.hpp"
#include "ndsense/random.hpp"
#include "ndsense/rheology.hpp"
#include "ndsense/segmentation.hpp"
#include "ndsense/thermometry.hpp"
#include "ndsense/tracker.hpp"
#include "ndsense/trajectory.hpp"

namespace ndsense::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment configuration");
  cmd->add_option("--seed", o.seed, "master seed, overrides the configuration");
  cmd->add_option("--out-dir", o.out_dir, "output directory, overrides the configuration");
}

/// Files are collected in memory and written together so a failure leaves nothing behind.
class Outputs {
 public:
  std::ostream& open(const std::string& name) {
    for (auto& [n, s] : files_)
      if (n == name) return s;
    files_.emplace_back(name, std::ostringstream{});
    return files_.back().second;
  }

  void commit(const std::string& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    for (const auto& [name, content] : files_) {
      const fs::path path = fs::path(dir) / name;
      std::ofstream f(path, std::ios::binary);
      f << content.str();
      if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.first);
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::ostringstream>> files_;
};

ExperimentConfig config_or_default(const CommonOptions& o) {
  return o.config.empty() ? ExperimentConfig{} : load_config(o.config);
}

std::string resolve_out_dir(const CommonOptions& o, const ExperimentConfig& cfg, bool required) {
  std::string dir = o.out_dir.empty() ? cfg.output_dir : o.out_dir;
  if (dir.empty() && required) throw ConfigError("an output directory is required (--out-dir or output_dir)");
  return dir;
}

ordered_json estimate_json(double value, double sigma) { return {{"value", value}, {"sigma", sigma}}; }

// ---------------------------------------------------------------------------------------------
// simulate

double celsius_to_kelvin(double c) { return c + constants::zero_celsius; }

double glycerol_D(const MediumSection& m, double T_c) {
  return stokes_einstein_D(celsius_to_kelvin(T_c), m.radius_nm, viscosity_at(m.viscosity, T_c));
}

Trajectory simulate_truth(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& m = cfg.medium;
  const auto n_steps = static_cast<std::size_t>(std::llround(m.duration_s / m.dt_s));
  const std::uint64_t medium_seed = derive_seed(seed, "medium");
  Trajectory truth;
  if (m.kind == "brownian") {
    truth = simulate_brownian(m.D, n_steps, m.dt_s, medium_seed);
  } else if (m.kind == "viscoelastic") {
    truth = simulate_viscoelastic(m.viscoelastic, n_steps, m.dt_s, medium_seed);
  } else if (!cfg.schedule.enabled) {
    truth = simulate_brownian(glycerol_D(m, m.temperature_c), n_steps, m.dt_s, medium_seed);
    truth.set_meta("temperature_c", format_double(m.temperature_c));
  } else {
    // Unit-D walk whose increments are rescaled by the instantaneous diffusion coefficient.
    const Trajectory unit = simulate_brownian(1.0, n_steps, m.dt_s, medium_seed);
    const auto temps = setpoint_series(cfg.schedule.temperature, m.dt_s, m.duration_s);
    truth = unit;
    for (std::size_t i = 1; i < truth.points.size(); ++i) {
      const double T = temps.T[std::min(i - 1, temps.T.size() - 1)];
      const Vec3 step = unit.points[i] - unit.points[i - 1];
      truth.points[i] = truth.points[i - 1] + step * std::sqrt(glycerol_D(m, T));
    }
    truth.meta.clear();
  }
  if (!m.directed.empty()) truth = inject_directed(truth, m.directed);
  truth.set_meta("medium", m.kind);
  truth.set_meta("seed", std::to_string(seed));
  if (m.kind == "glycerol") truth.set_meta("radius_nm", format_double(m.radius_nm));
  return truth;
}

void write_diagnostics(std::ostream& out, const TrackDiagnostics& d) {
  CsvWriter w(out, "diagnostics", {"t_s", "err_nm", "locked", "photons"},
              {{"lock_lost", d.lock_lost ? "1" : "0"}, {"lost_at", std::to_string(d.lost_at)}});
  for (std::size_t i = 0; i < d.t.size(); ++i) w.row({d.t[i], d.err_nm[i], d.locked[i] ? 1.0 : 0.0, d.photons[i]});
}

void write_timeline(std::ostream& out, const std::vector<TimelineEvent>& events) {
  CsvWriter w(out, "timeline", {"t_s", "channel", "state"});
  for (const auto& e : events) w.text_row({format_double(e.t()), channel_name(e.channel), e.on ? "on" : "off"});
}

void write_setpoints(std::ostream& out, const SetpointSeries& s) {
  CsvWriter w(out, "setpoint", {"t_s", "T_C"});
  for (std::size_t i = 0; i < s.t.size(); ++i) w.row({s.t[i], s.T[i]});
}

int cmd_simulate(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  if (o.config.empty()) throw ConfigError("simulate needs --config");
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = o.seed;
  if (!cfg.seed) throw ConfigError("a seed is required (--seed or seed)");
  const std::string dir = resolve_out_dir(o, cfg, true);
  const std::uint64_t seed = *cfg.seed;
  const auto& m = cfg.medium;
  if (m.kind == "glycerol" && !cfg.schedule.enabled) {
    try {
      viscosity_at(m.viscosity, m.temperature_c);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("medium: ") + e.what());
    }
  }
  if (cfg.odmr.enabled && m.duration_s < cfg.odmr.cfg.bin_s * static_cast<double>(cfg.odmr.cfg.n_f))
    throw ConfigError("odmr: duration_s is shorter than one averaged point (bin_s * n_f)");

  Outputs files;
  const Trajectory truth = simulate_truth(cfg, seed);
  write_trajectory(files.open("truth.csv"), truth);

  if (cfg.tracker.enabled) {
    const TrackResult r = track(truth, cfg.tracker.cfg, cfg.tracker.brightness, derive_seed(seed, "tracker-photons"));
    Trajectory est = r.estimate;
    for (const auto& [k, v] : truth.meta)
      if (k != "medium") est.set_meta(k, v);
    est.set_meta("source", "tracker");
    write_trajectory(files.open("estimate.csv"), est);
    write_diagnostics(files.open("diagnostics.csv"), r.diagnostics);
    if (r.diagnostics.lock_lost)
      err << "warning: tracking lock lost at update " << r.diagnostics.lost_at << "\n";
  }

  std::optional<SetpointSeries> bin_temps;
  if (cfg.schedule.enabled) {
    const double step = cfg.odmr.enabled ? cfg.odmr.cfg.bin_s : 1.0;
    bin_temps = setpoint_series(cfg.schedule.temperature, step, m.duration_s);
    write_setpoints(files.open("setpoint.csv"), *bin_temps);
    write_timeline(files.open("timeline.csv"), schedule_timeline(cfg.odmr.cfg.duty_cycle, cfg.schedule.timeline_s));
  }

  if (cfg.odmr.enabled) {
    const auto& tc = cfg.odmr.cfg;
    const auto n_bins = static_cast<std::size_t>(std::floor(m.duration_s / tc.bin_s + 1e-9));
    std::vector<double> dT(n_bins, 0.0), setpoint(n_bins, 0.0), t(n_bins, 0.0);
    for (std::size_t i = 0; i < n_bins; ++i) {
      t[i] = static_cast<double>(i) * tc.bin_s;
      if (bin_temps) {
        dT[i] = bin_temps->T[i] - bin_temps->T.front();
        setpoint[i] = bin_temps->setpoint[i];
      }
    }
    const ThermometryRecord rec = simulate_thermometry(dT, tc, derive_seed(seed, "odmr-photons"));
    KappaCalibration cal;
    cal.kappa = tc.kappa_khz_per_c;
    const ThermometryAnalysis an = analyze_thermometry(rec.bins, tc.bin_s, tc.n_f, cal);
    write_temperature_series(files.open("temperature.csv"), an.averaged);
    CsvWriter w(files.open("shifts.csv"), "shifts", {"t_s", "setpoint_C", "dT_true_C", "shift_hz", "sigma_hz", "converged"},
                {{"bin_s", format_double(tc.bin_s)}, {"kappa_khz_per_c", format_double(tc.kappa_khz_per_c)}});
    for (std::size_t i = 0; i < n_bins; ++i)
      w.row({t[i], setpoint[i], dT[i], an.fits[i].shift, an.fits[i].sigma, an.fits[i].converged ? 1.0 : 0.0});
    if (cfg.odmr.write_scans) write_odmr(files.open("odmr.csv"), rec.bins);
    if (an.n_rejected) err << "warning: " << an.n_rejected << " ODMR bins did not converge\n";
  }

  files.commit(dir);
  for (const auto& n : files.names()) out << (fs::path(dir) / n).string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// analyze

struct TrajectoryReport {
  std::string stem;
  std::optional<double> temperature_c;
  DiffusionFit diffusion;
};

std::string unique_stem(const std::string& path, std::map<std::string, int>& seen) {
  std::string stem = fs::path(path).stem().string();
  const int n = seen[stem]++;
  return n ? stem + "_" + std::to_string(n) : stem;
}

void write_msd(std::ostream& out, const MsdCurve& c) {
  CsvWriter w(out, "msd", {"tau_s", "msd_nm2", "var_nm4", "k", "sigma_nm2", "lag"}, {{"axes", c.axes.str()}});
  for (std::size_t i = 0; i < c.size(); ++i)
    w.row({c.taus[i], c.msd[i], c.var[i], static_cast<double>(c.k[i]), c.sigma(i), static_cast<double>(c.lags[i])});
}

void write_modulus(std::ostream& out, const ComplexModulus& g) {
  CsvWriter w(out, "modulus", {"f_hz", "g_abs_pa", "g_prime_pa", "g_dprime_pa", "alpha", "delta_rad", "flagged"});
  for (std::size_t i = 0; i < g.freqs.size(); ++i)
    w.row({g.freqs[i], g.G_abs[i], g.G_prime[i], g.G_dprime[i], g.alpha_local[i], g.delta[i], g.flagged[i] ? 1.0 : 0.0});
}

void write_psd(std::ostream& out, const Psd& p) {
  CsvWriter w(out, "psd", {"f_hz", "psd_nm2_per_hz"},
              {{"n_axes", std::to_string(p.n_axes)}, {"segments", std::to_string(p.n_segments)}});
  for (std::size_t i = 0; i < p.freqs.size(); ++i) w.row({p.freqs[i], p.density[i]});
}

void write_force(std::ostream& out, const ForceSpectrum& f) {
  CsvWriter w(out, "force", {"omega_rad_s", "thermal", "external", "external_raw", "k_abs_n_m", "clipped"},
              {{"thermal_model", "4*kB*T*K_loss/omega per axis (assumed constant)"}});
  for (std::size_t i = 0; i < f.omegas.size(); ++i)
    w.row({f.omegas[i], f.thermal[i], f.external[i], f.external_raw[i], f.K_abs[i], f.clipped[i] ? 1.0 : 0.0});
}

void write_labels(std::ostream& out, const Trajectory& traj, const Segmentation& seg) {
  CsvWriter w(out, "labels", {"start_idx", "end_idx", "gamma", "class", "displacement_nm", "alpha", "t_start_s", "t_end_s"});
  for (const auto& l : seg.labels)
    w.text_row({std::to_string(l.start), std::to_string(l.end), std::isfinite(l.gamma) ? format_double(l.gamma) : "nan",
                class_name(l.cls), format_double(l.displacement), l.alpha ? format_double(*l.alpha) : "nan",
                format_double(traj.time(l.start)), format_double(traj.time(l.end))});
}

ordered_json analyze_trajectory(const std::string& path, const AnalysisSection& a, Outputs& files,
                                std::map<std::string, int>& seen, TrajectoryReport& report, std::ostream& err) {
  const Trajectory traj = read_trajectory_file(path);
  traj.validate(8);
  const Axes axes = Axes::parse(a.axes);
  report.stem = unique_stem(path, seen);
  ordered_json j;
  j["file"] = path;
  j["points"] = traj.size();

  const std::size_t max_lag = std::max<std::size_t>(4, traj.size() / 4);
  const MsdCurve curve = msd(traj, axes, log_spaced_lags(max_lag, a.n_lags));
  write_msd(files.open(report.stem + "_msd.csv"), curve);

  const double tau_min = a.fit_tau_min_s > 0.0 ? a.fit_tau_min_s : curve.taus.front();
  double tau_max = a.fit_tau_max_s;
  if (tau_max <= 0.0)
    tau_max = std::max(curve.taus[std::min<std::size_t>(3, curve.size() - 1)], std::min(1.0, traj.duration() / 10.0));
  report.diffusion = fit_diffusion(curve, tau_min, tau_max);
  j["D_nm2_s"] = estimate_json(report.diffusion.D, report.diffusion.sigma);
  j["D_below_noise_floor"] = report.diffusion.below_floor;
  try {
    const ExponentFit ex = anomalous_exponent(curve, tau_min, tau_max);
    j["alpha"] = estimate_json(ex.alpha, ex.sigma);
  } catch (const ValidationError& e) {
    j["alpha"] = nullptr;
    err << "note: " << report.stem << ": no exponent fit (" << e.what() << ")\n";
  }

  if (a.temperature_c) {
    report.temperature_c = a.temperature_c;
  } else if (const std::string* t = traj.get_meta("temperature_c")) {
    report.temperature_c = parse_double(*t, 0);
  }
  if (report.temperature_c) j["temperature_c"] = *report.temperature_c;

  std::optional<ComplexModulus> modulus;
  if (a.radius_nm > 0.0 && report.temperature_c) {
    modulus = complex_modulus(curve, celsius_to_kelvin(*report.temperature_c), a.radius_nm);
    write_modulus(files.open(report.stem + "_modulus.csv"), *modulus);
  }
  std::optional<Psd> spectrum;
  if (traj.duration() >= 1.5 * a.psd_window_s) {
    spectrum = psd(traj, axes, a.psd_window_s);
    write_psd(files.open(report.stem + "_psd.csv"), *spectrum);
  } else {
    err << "note: " << report.stem << ": shorter than 1.5 PSD windows, no PSD\n";
  }
  if (a.force) {
    if (modulus && spectrum) {
      const ForceSpectrum f =
          external_force_spectrum(*spectrum, *modulus, a.radius_nm, celsius_to_kelvin(*report.temperature_c));
      write_force(files.open(report.stem + "_force.csv"), f);
    } else {
      err << "note: " << report.stem << ": force spectrum needs a modulus, a PSD and a temperature\n";
    }
  }

  if (a.segmentation.enabled) {
    const auto& s = a.segmentation;
    const GammaNull null = gamma_null(static_cast<int>(s.window), s.dims, s.confidence);
    SegmentOptions opts;
    opts.window = s.window;
    opts.min_length = s.min_length_nm;
    const Segmentation seg = segment(traj, null, opts);
    write_labels(files.open(report.stem + "_labels.csv"), traj, seg);
    ordered_json js;
    js["critical_gamma"] = null.critical_gamma;
    js["windows"] = seg.n_windows;
    js["supra_fraction"] = seg.supra_fraction();
    js["directed"] = seg.n_directed();
    js["non_directed"] = seg.labels.size() - seg.n_directed();
    js["rejected_short"] = seg.n_rejected_short;
    const ClassExponents ce = class_exponents(traj, seg.labels, axes_for_dims(s.dims));
    for (const auto& c : ce.classes) {
      ordered_json jc = {{"segments", c.alphas.size()}, {"alpha", estimate_json(c.mean, c.sd)}, {"degenerate", c.degenerate}};
      if (c.ensemble_alpha) jc["ensemble_alpha"] = *c.ensemble_alpha;
      js["classes"][class_name(c.cls)] = jc;
    }
    for (const auto& n : ce.notices) err << "note: " << report.stem << ": " << n << "\n";
    j["segmentation"] = js;
  }
  return j;
}

ordered_json analyze_temperature(const std::string& path, Outputs& files) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open temperature series '" + path + "'");
  const TemperatureSeries s = read_temperature_series(in);
  if (s.t.size() < 3) throw ValidationError("temperature series needs >= 3 samples");
  const double period = s.t[1] - s.t[0];
  if (!(period > 0.0)) throw ValidationError("temperature series: time must increase");
  const auto points = allan_deviation(s.dT, period, octave_factors(s.dT.size()));
  CsvWriter w(files.open("allan.csv"), "allan", {"tau_s", "adev_C", "m"});
  for (const auto& p : points) w.row({p.tau, p.adev, static_cast<double>(p.m)});
  ordered_json j;
  j["file"] = path;
  const WhiteNoiseFit fit = fit_white_noise(points, period, points.back().tau);
  j["sensitivity_C_sqrtHz"] = fit.S;
  j["allan_slope"] = fit.slope;
  return j;
}

ordered_json analyze_shifts(const std::string& path, double settle_s) {
  const CsvTable t = read_csv_file(path);
  const std::size_t ct = t.column("t_s"), cs = t.column("setpoint_C"), cf = t.column("shift_hz"),
                    cc = t.column("converged");
  const std::size_t csig = t.column("sigma_hz");
  std::vector<double> times, setpoints;
  std::vector<ShiftFit> fits;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    times.push_back(t.number(r, ct));
    setpoints.push_back(t.number(r, cs));
    ShiftFit f;
    f.shift = t.number(r, cf);
    f.sigma = t.number(r, csig);
    f.converged = t.number(r, cc) != 0.0;
    fits.push_back(f);
  }
  const KappaCalibration k = calibrate_from_record(setpoints, times, fits, settle_s);
  ordered_json j;
  j["file"] = path;
  j["kappa_khz_per_c"] = estimate_json(k.kappa, k.sigma_kappa);
  j["f0_hz"] = k.f0_hz;
  j["T_ref_c"] = k.T_ref;
  return j;
}

int cmd_analyze(const CommonOptions& o, const std::vector<std::string>& trajectories, const std::string& temperature,
                const std::string& shifts, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = config_or_default(o);
  const std::string dir = resolve_out_dir(o, cfg, true);
  if (trajectories.empty() && temperature.empty() && shifts.empty())
    throw ConfigError("analyze needs --trajectory, --temperature or --shifts");
  const auto& a = cfg.analysis;

  Outputs files;
  ordered_json summary;
  summary["schema_version"] = kSchemaVersion;
  std::map<std::string, int> seen;
  std::vector<TrajectoryReport> reports;
  for (const auto& path : trajectories) {
    TrajectoryReport rep;
    summary["trajectories"].push_back(analyze_trajectory(path, a, files, seen, rep, err));
    reports.push_back(rep);
  }

  std::vector<TemperatureDiffusion> series;
  std::map<double, int> distinct;
  for (const auto& r : reports) {
    if (!r.temperature_c) continue;
    series.push_back({*r.temperature_c, r.diffusion.D, r.diffusion.sigma});
    ++distinct[*r.temperature_c];
  }
  if (distinct.size() >= 3) {
    const RadiusFit rf = fit_hydrodynamic_radius(series, a.viscosity);
    summary["r_hydro_nm"] = estimate_json(rf.radius, rf.sigma);
    summary["r_hydro_chi2_reduced"] = rf.chi2_reduced;
  }
  if (!temperature.empty()) summary["thermometry"] = analyze_temperature(temperature, files);
  if (!shifts.empty()) summary["calibration"] = analyze_shifts(shifts, a.settle_s);

  files.open("summary.json") << summary.dump(2) << "\n";
  files.commit(dir);
  for (const auto& n : files.names()) out << (fs::path(dir) / n).string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// thin wrappers

int cmd_crb(const CommonOptions& o, std::optional<double> lambda0, std::optional<double> kappa,
            const std::string& table_path, std::ostream& out) {
  const ExperimentConfig cfg = config_or_default(o);
  const std::string dir = resolve_out_dir(o, cfg, false);
  const ThermometryConfig& tc = cfg.odmr.cfg;
  const double l0 = lambda0.value_or(tc.lambda0);
  const double k = kappa.value_or(tc.kappa_khz_per_c);
  if (!(l0 > 0.0)) throw ConfigError("--lambda0 must be > 0");
  if (k == 0.0) throw ConfigError("--kappa must be nonzero");

  ordered_json j;
  j["lambda0"] = l0;
  j["kappa_khz_per_c"] = k;
  const ScanTiming timing = tc.timing();
  if (!table_path.empty()) {
    const CsvTable t = read_csv_file(table_path);
    const std::size_t cf = t.column("f_hz"), cl = t.column("level");
    std::vector<double> f, l;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      f.push_back(t.number(r, cf));
      l.push_back(t.number(r, cl));
    }
    const Lineshape table = Lineshape::interpolation(f, l);
    const double s = crb_temperature_sensitivity(table, l0, f, k, timing, CrbParams::amplitude_shift);
    j["interpolation_C_sqrtHz"] = s;
    out << "sensitivity_C_sqrtHz=" << format_double(s) << "\n";
  } else {
    const Lineshape dl = default_lineshape(tc.lineshape);
    const auto grid = default_grid(tc.lineshape);
    std::vector<double> levels;
    for (double f : grid) levels.push_back(dl.value(f));
    const Lineshape table = Lineshape::interpolation(grid, levels);
    const double s_interp = crb_temperature_sensitivity(table, l0, grid, k, timing, CrbParams::amplitude_shift);
    const double s_dl = crb_temperature_sensitivity(dl, l0, grid, k, timing, CrbParams::amplitude_shift);
    const double s_dl_full = crb_temperature_sensitivity(dl, l0, grid, k, timing, CrbParams::full);
    // Single Lorentzian matched to the double-dip shape by a noiseless least-squares fit.
    OdmrScan ideal;
    ideal.freqs = grid;
    for (double f : grid) ideal.counts.push_back(l0 * dl.value(f));
    const auto& p = dl.peaks();
    const Lorentzian guess{0.5 * (p[0].contrast + p[1].contrast), 0.5 * (p[0].hwhm + p[1].hwhm) + 0.5 * std::abs(p[1].center - p[0].center),
                           0.5 * (p[0].center + p[1].center)};
    const LorentzianFit sl = fit_lorentzian(ideal, Lineshape::single_lorentzian(guess), l0);
    const double s_sl = crb_temperature_sensitivity(sl.shape, l0, grid, k, timing, CrbParams::amplitude_shift);
    j["interpolation_C_sqrtHz"] = s_interp;
    j["double_lorentzian_C_sqrtHz"] = s_dl;
    j["single_lorentzian_C_sqrtHz"] = s_sl;
    j["double_lorentzian_full_C_sqrtHz"] = s_dl_full;
    out << "sensitivity_C_sqrtHz=" << format_double(s_interp) << "\n";
    out << "double_lorentzian_C_sqrtHz=" << format_double(s_dl) << "\n";
    out << "single_lorentzian_C_sqrtHz=" << format_double(s_sl) << "\n";
  }
  if (!dir.empty()) {
    Outputs files;
    files.open("crb.json") << j.dump(2) << "\n";
    files.commit(dir);
  }
  return kExitOk;
}

int cmd_allan(const CommonOptions& o, const std::string& input, const std::string& column, std::optional<double> period,
              std::ostream& out) {
  const ExperimentConfig cfg = config_or_default(o);
  const std::string dir = resolve_out_dir(o, cfg, false);
  const CsvTable t = read_csv_file(input);
  const std::size_t cv = t.column(column);
  std::vector<double> y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) y.push_back(t.number(r, cv));
  double dt = period.value_or(0.0);
  if (!period) {
    if (!t.has_column("t_s") || t.rows.size() < 2) throw ValidationError("allan: give --period or a t_s column");
    const std::size_t ct = t.column("t_s");
    dt = t.number(1, ct) - t.number(0, ct);
  }
  if (!(dt > 0.0)) throw ValidationError("allan: sample period must be > 0");
  const auto points = allan_deviation(y, dt, octave_factors(y.size()));
  std::ostringstream csv;
  CsvWriter w(csv, "allan", {"tau_s", "adev", "m"});
  for (const auto& p : points) w.row({p.tau, p.adev, static_cast<double>(p.m)});
  out << csv.str();
  if (!dir.empty()) {
    Outputs files;
    files.open("allan.csv") << csv.str();
    files.commit(dir);
  }
  return kExitOk;
}

int cmd_gamma_null(const CommonOptions& o, int n, int m, double confidence, std::ostream& out) {
  const ExperimentConfig cfg = config_or_default(o);
  const std::string dir = resolve_out_dir(o, cfg, false);
  const GammaNull g = gamma_null(n, m, confidence);
  out << "critical_gamma=" << format_double(g.critical_gamma) << "\n";
  if (!dir.empty()) {
    Outputs files;
    CsvWriter w(files.open("gamma_null.csv"), "gamma-null", {"gamma", "pdf"},
                {{"N", std::to_string(n)}, {"M", std::to_string(m)}, {"confidence", format_double(confidence)},
                 {"critical_gamma", format_double(g.critical_gamma)}});
    for (std::size_t i = 0; i < g.gamma.size(); ++i) w.row({g.gamma[i], g.pdf[i]});
    files.commit(dir);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-modality nanodiamond sensing: simulation and analysis"};
  app.require_subcommand(1);

  CommonOptions sim_o, ana_o, crb_o, allan_o, gamma_o;
  auto* sim = app.add_subcommand("simulate", "simulate a medium, the tracker and ODMR thermometry");
  add_common(sim, sim_o);

  auto* ana = app.add_subcommand("analyze", "MSD, modulus, PSD, force, segmentation and thermometry analysis");
  add_common(ana, ana_o);
  std::vector<std::string> trajectories;
  std::string temperature, shifts;
  ana->add_option("--trajectory", trajectories, "trajectory CSV (repeatable)");
  ana->add_option("--temperature", temperature, "temperature series CSV for the Allan analysis");
  ana->add_option("--shifts", shifts, "per-bin shift CSV for the kappa calibration");

  auto* crb_cmd = app.add_subcommand("crb", "shot-noise limited temperature sensitivity");
  add_common(crb_cmd, crb_o);
  std::optional<double> lambda0, kappa;
  std::string table;
  crb_cmd->add_option("--lambda0", lambda0, "off-resonance counts per point per sweep");
  crb_cmd->add_option("--kappa", kappa, "kHz/°C");
  crb_cmd->add_option("--lineshape", table, "interpolation table CSV with f_hz,level");

  auto* allan_cmd = app.add_subcommand("allan", "overlapping Allan deviation of a series");
  add_common(allan_cmd, allan_o);
  std::string input, column = "dT_C";
  std::optional<double> period;
  allan_cmd->add_option("--input", input, "CSV input")->required();
  allan_cmd->add_option("--column", column, "column to analyse");
  allan_cmd->add_option("--period", period, "sample period in s (default: from t_s)");

  auto* gamma_cmd = app.add_subcommand("gamma-null", "critical directionality ratio under the Brownian null");
  add_common(gamma_cmd, gamma_o);
  int n = 75, m = 2;
  double confidence = 0.95;
  gamma_cmd->add_option("--n", n, "steps per window");
  gamma_cmd->add_option("--m", m, "dimensions");
  gamma_cmd->add_option("--confidence", confidence, "confidence level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o, out, err);
    if (ana->parsed()) return cmd_analyze(ana_o, trajectories, temperature, shifts, out, err);
    if (crb_cmd->parsed()) return cmd_crb(crb_o, lambda0, kappa, table, out);
    if (allan_cmd->parsed()) return cmd_allan(allan_o, input, column, period, out);
    if (gamma_cmd->parsed()) return cmd_gamma_null(gamma_o, n, m, confidence, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace ndsense::cli
