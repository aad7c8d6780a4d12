#include "ndsense/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/non_central_t.hpp>

#include "ndsense/error.hpp"

namespace ndsense {

namespace {
constexpr std::size_t kNullTable = 2048;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double path_ratio(const std::vector<Vec3>& pts, std::size_t first, std::size_t last, Axes axes, bool& defined) {
  double path = 0.0;
  for (std::size_t i = first; i < last; ++i) path += std::sqrt(norm2(pts[i + 1] - pts[i], axes));
  defined = path > 0.0;
  if (!defined) return kNaN;
  return std::min(1.0, std::sqrt(norm2(pts[last] - pts[first], axes)) / path);
}
}  // namespace

double GammaNull::pdf_at(double g) const {
  if (gamma.empty() || !(g > 0.0) || g > 1.0) return 0.0;
  if (g <= gamma.front()) return pdf.front() * g / gamma.front();
  auto it = std::lower_bound(gamma.begin(), gamma.end(), g);
  std::size_t j = static_cast<std::size_t>(it - gamma.begin());
  double u = (g - gamma[j - 1]) / (gamma[j] - gamma[j - 1]);
  return pdf[j - 1] + u * (pdf[j] - pdf[j - 1]);
}

double GammaNull::integral() const {
  double acc = 0.5 * gamma.front() * pdf.front();
  for (std::size_t i = 1; i < gamma.size(); ++i) acc += 0.5 * (pdf[i] + pdf[i - 1]) * (gamma[i] - gamma[i - 1]);
  return acc;
}

GammaNull gamma_null(int N, int M, double confidence) {
  if (N < 2) throw ValidationError("gamma_null: N must be >= 2");
  if (M < 1 || M > 3) throw ValidationError("gamma_null: M must be 1, 2 or 3");
  if (!(confidence > 0.0) || !(confidence < 1.0)) throw ValidationError("gamma_null: confidence must be in (0, 1)");
  GammaNull g;
  g.N = N;
  g.M = M;
  g.confidence = confidence;
  const double m = M;
  g.mu_chi = std::sqrt(2.0) * std::tgamma((m + 1.0) / 2.0) / std::tgamma(m / 2.0);
  g.sigma_chi = std::sqrt(m - g.mu_chi * g.mu_chi);
  g.noncentrality = std::sqrt(static_cast<double>(N)) * g.mu_chi / g.sigma_chi;
  // η = √M / (σ γ) follows a non-central t with M degrees of freedom.
  const double scale = std::sqrt(m) / g.sigma_chi;
  try {
    const boost::math::non_central_t dist(m, g.noncentrality);
    g.gamma.resize(kNullTable);
    g.pdf.resize(kNullTable);
    for (std::size_t i = 0; i < kNullTable; ++i) {
      const double x = static_cast<double>(i + 1) / static_cast<double>(kNullTable);
      const double eta = scale / x;
      g.gamma[i] = x;
      g.pdf[i] = boost::math::pdf(dist, eta) * scale / (x * x);
    }
    const double eta_q = boost::math::quantile(dist, 1.0 - confidence);
    if (!(eta_q > 0.0)) throw std::runtime_error("gamma_null: non-positive quantile");
    g.critical_gamma = scale / eta_q;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("gamma_null: numerical evaluation failed: ") + e.what());
  }
  if (!(g.critical_gamma > 0.0 && g.critical_gamma < 1.0))
    throw std::runtime_error("gamma_null: critical value outside (0, 1)");
  return g;
}

Axes axes_for_dims(int M) {
  switch (M) {
    case 1: return Axes::only_x();
    case 2: return Axes::xy();
    case 3: return Axes::xyz();
    default: throw ValidationError("axes_for_dims: M must be 1, 2 or 3");
  }
}

std::optional<double> directionality_ratio(const std::vector<Vec3>& window, Axes axes) {
  if (window.size() < 2) throw ValidationError("directionality_ratio: window needs >= 2 points");
  if (axes.count() == 0) throw ValidationError("directionality_ratio: no axes selected");
  bool defined = false;
  double g = path_ratio(window, 0, window.size() - 1, axes, defined);
  if (!defined) return std::nullopt;
  return g;
}

std::string class_name(MotionClass c) { return c == MotionClass::directed ? "directed" : "non-directed"; }

std::size_t Segmentation::n_directed() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const SegmentLabel& l) {
    return l.cls == MotionClass::directed;
  }));
}

std::optional<double> segment_alpha(const Trajectory& traj, std::size_t start, std::size_t end, Axes axes) {
  if (end <= start || end >= traj.size()) return std::nullopt;
  const std::size_t steps = end - start;
  const std::size_t max_lag = std::max<std::size_t>(4, steps / 4);
  if (max_lag >= steps) return std::nullopt;
  const Trajectory part = traj.slice(start, end + 1);
  try {
    // Log-spaced lags keep long spans linear in their length.
    const MsdCurve c = msd(part, axes, log_spaced_lags(max_lag, std::min<std::size_t>(max_lag, 24)));
    return anomalous_exponent(c, 0.0, INFINITY).alpha;
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

Segmentation segment(const Trajectory& traj, const GammaNull& null, const SegmentOptions& opts) {
  traj.validate(2);
  const std::size_t N = opts.window;
  if (N < 1) throw ValidationError("segment: window must be >= 1 step");
  if (traj.size() < N + 1) throw ValidationError("segment: trajectory shorter than one window");
  if (!(opts.min_length >= 0.0)) throw ValidationError("segment: min_length must be >= 0");
  const Axes axes = axes_for_dims(null.M);
  const auto& pts = traj.points;

  // Prefix sums of step lengths make every window O(1).
  std::vector<double> path(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) path[i] = path[i - 1] + std::sqrt(norm2(pts[i] - pts[i - 1], axes));

  Segmentation out;
  out.n_windows = pts.size() - N;
  out.window_gamma.assign(out.n_windows, kNaN);
  struct Run {
    std::size_t start, end;
    double gmax;
  };
  std::vector<Run> runs;
  for (std::size_t w = 0; w < out.n_windows; ++w) {
    const double l = path[w + N] - path[w];
    if (!(l > 0.0)) {
      ++out.n_undefined;
      continue;
    }
    const double g = std::min(1.0, std::sqrt(norm2(pts[w + N] - pts[w], axes)) / l);
    out.window_gamma[w] = g;
    if (!(g > null.critical_gamma)) continue;
    ++out.n_supra;
    if (!runs.empty() && w <= runs.back().end) {
      runs.back().end = w + N;
      runs.back().gmax = std::max(runs.back().gmax, g);
    } else {
      runs.push_back({w, w + N, g});
    }
  }

  auto add_label = [&](std::size_t s, std::size_t e, MotionClass cls, double gamma) {
    if (e <= s) return;
    SegmentLabel lab;
    lab.start = s;
    lab.end = e;
    lab.cls = cls;
    lab.displacement = std::sqrt(norm2(pts[e] - pts[s], axes));
    if (cls == MotionClass::directed) {
      lab.gamma = gamma;
    } else {
      bool defined = false;
      lab.gamma = path_ratio(pts, s, e, axes, defined);
    }
    if (opts.fit_alpha) lab.alpha = segment_alpha(traj, s, e, axes);
    out.labels.push_back(lab);
  };

  std::size_t cursor = 0;
  for (const auto& r : runs) {
    const double disp = std::sqrt(norm2(pts[r.end] - pts[r.start], axes));
    if (disp < opts.min_length) {
      ++out.n_rejected_short;
      continue;
    }
    add_label(cursor, r.start, MotionClass::non_directed, 0.0);
    add_label(r.start, r.end, MotionClass::directed, r.gmax);
    cursor = r.end;
  }
  add_label(cursor, pts.size() - 1, MotionClass::non_directed, 0.0);
  return out;
}

ClassExponents class_exponents(const Trajectory& traj, const std::vector<SegmentLabel>& labels, Axes axes) {
  traj.validate(2);
  constexpr std::size_t kMinPoints = 8;
  constexpr std::size_t kLagLo = 2, kLagHi = 20;
  ClassExponents out;
  for (MotionClass cls : {MotionClass::non_directed, MotionClass::directed}) {
    ClassSummary sum;
    sum.cls = cls;
    std::vector<double> acc(kLagHi - kLagLo + 1, 0.0);
    std::vector<std::size_t> cnt(acc.size(), 0);
    for (const auto& lab : labels) {
      if (lab.cls != cls || lab.end >= traj.size() || lab.end < lab.start) continue;
      if (lab.end - lab.start + 1 < kMinPoints) continue;
      auto a = lab.alpha ? lab.alpha : segment_alpha(traj, lab.start, lab.end, axes);
      if (!a) continue;
      sum.alphas.push_back(*a);
      const std::size_t steps = lab.end - lab.start;
      const std::size_t hi = std::min(kLagHi, steps - 1);
      if (hi < kLagLo) continue;
      const MsdCurve c = msd(traj.slice(lab.start, lab.end + 1), axes, linear_lags(kLagLo, hi));
      for (std::size_t j = 0; j < c.size(); ++j) {
        acc[j] += c.msd[j];
        ++cnt[j];
      }
    }
    if (sum.alphas.empty()) {
      out.notices.push_back(class_name(cls) + ": no segment with >= 8 points, class omitted");
      continue;
    }
    const double n = static_cast<double>(sum.alphas.size());
    for (double a : sum.alphas) sum.mean += a;
    sum.mean /= n;
    if (sum.alphas.size() == 1) {
      sum.degenerate = true;
    } else {
      double ss = 0.0;
      for (double a : sum.alphas) ss += (a - sum.mean) * (a - sum.mean);
      sum.sd = std::sqrt(ss / (n - 1.0));
    }
    MsdCurve ens;
    ens.axes = axes;
    ens.dims = axes.count();
    for (std::size_t j = 0; j < acc.size(); ++j) {
      if (cnt[j] == 0) continue;
      const double tau = traj.dt * static_cast<double>(kLagLo + j);
      sum.taus.push_back(tau);
      sum.ensemble_msd.push_back(acc[j] / static_cast<double>(cnt[j]));
      ens.taus.push_back(tau);
      ens.lags.push_back(kLagLo + j);
      ens.msd.push_back(acc[j] / static_cast<double>(cnt[j]));
      ens.var.push_back(0.0);
      ens.k.push_back(cnt[j]);
    }
    if (ens.size() >= 4) {
      try {
        // Equal weights: var = 0 gives every lag the same relative weight floor.
        sum.ensemble_alpha = anomalous_exponent(ens, 0.0, INFINITY).alpha;
      } catch (const ValidationError&) {
      }
    }
    out.classes.push_back(std::move(sum));
  }
  return out;
}

}  // namespace ndsense
