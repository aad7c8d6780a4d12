#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ndsense::cli {

namespace {

using nlohmann::json;

/// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key) + ": must be finite");
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(where(key) + ": must be >= 0");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::optional<Section> child(const std::string& key) {
    if (!take(key)) return std::nullopt;
    return Section(j_.at(key), where(key));
  }

  const json* array(const std::string& key) {
    if (!take(key)) return nullptr;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    return &v;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Throws on the first key that no reader asked for.
  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError("unknown key '" + where(item.key()) + "'");
  }

 private:
  bool take(const std::string& key) {
    if (!j_.contains(key)) return false;
    used_.insert(key);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Vec3 parse_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(where + ": expected [x, y, z]");
  Vec3 out;
  double* dst[] = {&out.x, &out.y, &out.z};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw ConfigError(where + ": expected numbers");
    *dst[i] = v[i].get<double>();
  }
  return out;
}

void parse_viscosity(Section& s, ViscousMediumModel& m) {
  m.eta0 = s.number("eta0_pa_s", m.eta0);
  m.mu = s.number("slope_pa_s_per_c", m.mu);
  m.T_ref = s.number("T_ref_c", m.T_ref);
  m.T_min = s.number("T_min_c", m.T_min);
  m.T_max = s.number("T_max_c", m.T_max);
  s.finish();
}

void parse_medium(Section& s, MediumSection& m) {
  m.kind = s.text("kind", m.kind);
  if (m.kind != "brownian" && m.kind != "viscoelastic" && m.kind != "glycerol")
    throw ConfigError(s.where("kind") + ": expected brownian, viscoelastic or glycerol");
  m.D = s.number("D_nm2_s", m.D);
  m.viscoelastic.alpha = s.number("alpha", m.viscoelastic.alpha);
  m.viscoelastic.K_alpha = s.number("K_alpha", m.viscoelastic.K_alpha);
  m.radius_nm = s.number("radius_nm", m.radius_nm);
  m.temperature_c = s.number("temperature_c", m.temperature_c);
  if (auto v = s.child("viscosity")) parse_viscosity(*v, m.viscosity);
  m.dt_s = s.number("dt_s", m.dt_s);
  m.duration_s = s.number("duration_s", m.duration_s);
  if (const json* arr = s.array("directed")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      Section d((*arr)[i], s.where("directed[" + std::to_string(i) + "]"));
      DirectedSegmentSpec spec;
      spec.start = d.count("start", 0);
      spec.duration = d.count("duration", 1);
      if (auto* v = d.array("velocity_nm_s")) spec.velocity = parse_vec3(*v, d.where("velocity_nm_s"));
      d.finish();
      m.directed.push_back(spec);
    }
  }
  s.finish();
}

void parse_tracker(Section& s, TrackerSection& t) {
  t.enabled = s.boolean("enabled", t.enabled);
  t.brightness = s.number("brightness_cps", t.brightness);
  auto& c = t.cfg;
  c.T_orbit = s.number("T_orbit_s", c.T_orbit);
  c.R_xy = s.number("R_xy_nm", c.R_xy);
  c.w_xy = s.number("w_xy_nm", c.w_xy);
  c.R_z = s.number("R_z_nm", c.R_z);
  c.w_z = s.number("w_z_nm", c.w_z);
  c.G = s.number("G", c.G);
  c.n_bins = static_cast<int>(s.integer("n_bins", c.n_bins));
  c.clock = s.number("clock_s", c.clock);
  c.gain = s.number("gain", c.gain);
  c.background = s.number("background_cps", c.background);
  c.shot_noise = s.boolean("shot_noise", c.shot_noise);
  if (auto* v = s.array("initial_offset_nm")) c.initial_offset = parse_vec3(*v, s.where("initial_offset_nm"));
  c.lock_loss_factor = s.number("lock_loss_factor", c.lock_loss_factor);
  c.lock_loss_updates = static_cast<int>(s.integer("lock_loss_updates", c.lock_loss_updates));
  s.finish();
}

void parse_duty(Section& s, DutyCycleSchedule& d) {
  d.period = s.number("period_s", d.period);
  d.mw_on = s.number("mw_on_s", d.mw_on);
  d.heater_on = s.number("heater_on_s", d.heater_on);
  d.buffer = s.number("buffer_s", d.buffer);
  d.switch_edge = s.number("switch_edge_s", d.switch_edge);
  s.finish();
}

void parse_odmr(Section& s, OdmrSection& o) {
  o.enabled = s.boolean("enabled", o.enabled);
  o.write_scans = s.boolean("write_scans", o.write_scans);
  auto& c = o.cfg;
  c.lambda0 = s.number("lambda0", c.lambda0);
  c.kappa_khz_per_c = s.number("kappa_khz_per_c", c.kappa_khz_per_c);
  c.scan_s = s.number("scan_s", c.scan_s);
  c.bin_s = s.number("bin_s", c.bin_s);
  c.n_f = s.count("n_f", c.n_f);
  auto& l = c.lineshape;
  l.center_hz = s.number("center_hz", l.center_hz);
  l.splitting_hz = s.number("splitting_hz", l.splitting_hz);
  l.contrast_low = s.number("contrast_low", l.contrast_low);
  l.contrast_high = s.number("contrast_high", l.contrast_high);
  l.hwhm_low_hz = s.number("hwhm_low_hz", l.hwhm_low_hz);
  l.hwhm_high_hz = s.number("hwhm_high_hz", l.hwhm_high_hz);
  l.span_hz = s.number("span_hz", l.span_hz);
  l.n_points = static_cast<int>(s.integer("n_points", l.n_points));
  if (auto d = s.child("duty_cycle")) parse_duty(*d, c.duty_cycle);
  s.finish();
}

void parse_schedule(Section& s, ScheduleSection& out) {
  out.enabled = s.boolean("enabled", true);
  out.timeline_s = s.number("timeline_s", out.timeline_s);
  const std::string kind = s.text("kind", "staircase");
  const double tau = s.number("tau_s", TemperatureSchedule::default_ramp_tau());
  if (kind == "staircase") {
    const double start = s.number("start_c", 25.0), step = s.number("step_c", 4.0), dwell = s.number("dwell_s", 900.0);
    const auto n_up = s.integer("n_up", 3);
    const bool down = s.boolean("return_down", true);
    if (n_up < 1 || !(dwell > 0.0)) throw ConfigError("schedule: staircase needs n_up >= 1 and dwell_s > 0");
    out.temperature = staircase_schedule(start, step, static_cast<int>(n_up), dwell, down);
  } else if (kind == "alternating") {
    const double low = s.number("low_c", 28.7), high = s.number("high_c", 39.3), dwell = s.number("dwell_s", 600.0);
    const auto cycles = s.integer("n_cycles", 3);
    if (cycles < 1 || !(dwell > 0.0)) throw ConfigError("schedule: alternating needs n_cycles >= 1 and dwell_s > 0");
    out.temperature = alternating_schedule(low, high, dwell, static_cast<int>(cycles));
  } else if (kind == "steps") {
    const json* arr = s.array("steps");
    if (!arr) throw ConfigError("schedule: kind 'steps' needs a 'steps' array of [t_s, T_C]");
    for (const auto& e : *arr) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ConfigError("schedule.steps: each entry must be [t_s, T_C]");
      out.temperature.steps.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  } else {
    throw ConfigError("schedule.kind: expected staircase, alternating or steps");
  }
  out.temperature.tau_s = tau;
  s.finish();
}

void parse_analysis(Section& s, AnalysisSection& a) {
  a.axes = s.text("axes", a.axes);
  a.n_lags = s.count("n_lags", a.n_lags);
  a.fit_tau_min_s = s.number("fit_tau_min_s", a.fit_tau_min_s);
  a.fit_tau_max_s = s.number("fit_tau_max_s", a.fit_tau_max_s);
  a.psd_window_s = s.number("psd_window_s", a.psd_window_s);
  a.radius_nm = s.number("radius_nm", a.radius_nm);
  if (s.has("temperature_c")) a.temperature_c = s.number("temperature_c", 0.0);
  a.force = s.boolean("force", a.force);
  a.settle_s = s.number("settle_s", a.settle_s);
  if (auto v = s.child("viscosity")) parse_viscosity(*v, a.viscosity);
  if (auto g = s.child("segmentation")) {
    auto& seg = a.segmentation;
    seg.enabled = g->boolean("enabled", true);
    seg.window = g->count("window", seg.window);
    seg.min_length_nm = g->number("min_length_nm", seg.min_length_nm);
    seg.confidence = g->number("confidence", seg.confidence);
    seg.dims = static_cast<int>(g->integer("dims", seg.dims));
    g->finish();
  }
  s.finish();
}

template <class F>
void rethrow_as_config(const std::string& section, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  rethrow_as_config("medium", [&] {
    const auto& m = medium;
    if (!(m.dt_s > 0.0)) throw ConfigError("dt_s must be > 0");
    if (!(m.duration_s >= 2.0 * m.dt_s)) throw ConfigError("duration_s must cover at least two steps");
    if (m.kind == "brownian" && !(m.D >= 0.0)) throw ConfigError("D_nm2_s must be >= 0");
    if (m.kind == "viscoelastic") {
      if (!(m.viscoelastic.alpha > 0.0 && m.viscoelastic.alpha <= 2.0)) throw ConfigError("alpha must be in (0, 2]");
      if (!(m.viscoelastic.K_alpha >= 0.0)) throw ConfigError("K_alpha must be >= 0");
    }
    if (m.kind == "glycerol") {
      if (!(m.radius_nm > 0.0)) throw ConfigError("radius_nm must be > 0");
      m.viscosity.validate();
    }
  });
  rethrow_as_config("tracker", [&] {
    if (!tracker.enabled) return;
    tracker.cfg.validate();
    if (!(tracker.brightness > 0.0)) throw ConfigError("brightness_cps must be > 0");
  });
  rethrow_as_config("odmr", [&] { if (odmr.enabled) odmr.cfg.validate(); });
  rethrow_as_config("schedule", [&] {
    if (!schedule.enabled) return;
    schedule.temperature.validate();
    if (!(schedule.timeline_s > 0.0)) throw ConfigError("timeline_s must be > 0");
    if (medium.kind == "glycerol")
      for (const auto& [t, T] : schedule.temperature.steps) viscosity_at(medium.viscosity, T);
  });
  rethrow_as_config("analysis", [&] {
    const auto& a = analysis;
    Axes::parse(a.axes);
    if (a.n_lags < 4) throw ConfigError("n_lags must be >= 4");
    if (a.fit_tau_min_s < 0.0 || a.fit_tau_max_s < 0.0) throw ConfigError("fit range must be >= 0");
    if (a.fit_tau_max_s > 0.0 && a.fit_tau_max_s < a.fit_tau_min_s) throw ConfigError("fit_tau_max_s < fit_tau_min_s");
    if (!(a.psd_window_s > 0.0)) throw ConfigError("psd_window_s must be > 0");
    if (a.radius_nm < 0.0) throw ConfigError("radius_nm must be >= 0");
    if (a.force && a.radius_nm <= 0.0) throw ConfigError("force output needs radius_nm");
    if (a.settle_s < 0.0) throw ConfigError("settle_s must be >= 0");
    const auto& s = a.segmentation;
    if (s.enabled) {
      if (s.window < 2) throw ConfigError("segmentation.window must be >= 2");
      if (s.dims < 1 || s.dims > 3) throw ConfigError("segmentation.dims must be 1, 2 or 3");
      if (!(s.confidence > 0.0 && s.confidence < 1.0)) throw ConfigError("segmentation.confidence must be in (0, 1)");
      if (!(s.min_length_nm >= 0.0)) throw ConfigError("segmentation.min_length_nm must be >= 0");
    }
  });
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(j, "");
  ExperimentConfig cfg;
  if (!root.has("schema_version")) throw ConfigError("config: schema_version is required");
  cfg.schema_version = static_cast<int>(root.integer("schema_version", 0));
  if (cfg.schema_version != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(cfg.schema_version));
  if (root.has("seed")) {
    const auto s = root.integer("seed", 0);
    if (s < 0) throw ConfigError("seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  cfg.output_dir = root.text("output_dir", "");
  if (auto s = root.child("medium")) parse_medium(*s, cfg.medium);
  if (auto s = root.child("tracker")) parse_tracker(*s, cfg.tracker);
  if (auto s = root.child("odmr")) parse_odmr(*s, cfg.odmr);
  if (auto s = root.child("schedule")) parse_schedule(*s, cfg.schedule);
  if (auto s = root.child("analysis")) parse_analysis(*s, cfg.analysis);
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ndsense::cli
