#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ndsense/error.hpp"
#include "ndsense/odmr.hpp"

namespace ndsense {

KappaCalibration calibrate_kappa(const std::vector<double>& setpoints_c, const std::vector<double>& shifts_hz,
                                 double base_frequency_hz) {
  if (setpoints_c.size() != shifts_hz.size()) throw ValidationError("calibrate_kappa: series lengths differ");
  std::map<double, std::vector<double>> levels;
  for (std::size_t i = 0; i < setpoints_c.size(); ++i) {
    if (!std::isfinite(setpoints_c[i]) || !std::isfinite(shifts_hz[i]))
      throw ValidationError("calibrate_kappa: non-finite sample");
    levels[setpoints_c[i]].push_back(shifts_hz[i]);
  }
  if (levels.size() < 3) throw ValidationError("calibrate_kappa: need at least 3 distinct temperature levels");

  std::vector<double> T, y, se;
  bool weighted = true;
  for (const auto& [temp, v] : levels) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double s : v) mean += s;
    mean /= n;
    double ss = 0.0;
    for (double s : v) ss += (s - mean) * (s - mean);
    double e = v.size() >= 2 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    if (!(e > 0.0)) weighted = false;
    T.push_back(temp);
    y.push_back(mean);
    se.push_back(e);
  }
  double sw = 0.0, st = 0.0, sy = 0.0;
  std::vector<double> w(T.size());
  for (std::size_t i = 0; i < T.size(); ++i) {
    w[i] = weighted ? 1.0 / (se[i] * se[i]) : 1.0;
    sw += w[i];
    st += w[i] * T[i];
    sy += w[i] * y[i];
  }
  const double tbar = st / sw, ybar = sy / sw;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    stt += w[i] * (T[i] - tbar) * (T[i] - tbar);
    sty += w[i] * (T[i] - tbar) * (y[i] - ybar);
  }
  const double slope = sty / stt;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    double r = y[i] - ybar - slope * (T[i] - tbar);
    chi2 += w[i] * r * r;
  }
  const double red = chi2 / static_cast<double>(T.size() - 2);
  const double var = weighted ? std::max(1.0, red) / stt : red / stt;

  KappaCalibration cal;
  cal.kappa = slope / 1e3;
  cal.sigma_kappa = std::sqrt(var) / 1e3;
  cal.T_ref = tbar;
  cal.f0_hz = base_frequency_hz + ybar;
  return cal;
}

namespace {

// Draws the population mean of one group: τ from its gridded marginal posterior,
// then the mean from its normal conditional.
class GroupSampler {
 public:
  explicit GroupSampler(const std::vector<KappaMeasurement>& group) : group_(group) {
    if (group.size() < 2) throw ValidationError("kappa_shift_posterior: each group needs >= 2 entries");
    double lo = INFINITY, hi = -INFINITY, smax = 0.0;
    for (const auto& m : group) {
      if (!std::isfinite(m.kappa) || !std::isfinite(m.sigma) || !(m.sigma > 0.0))
        throw ValidationError("kappa_shift_posterior: every sigma must be finite and > 0");
      lo = std::min(lo, m.kappa);
      hi = std::max(hi, m.kappa);
      smax = std::max(smax, m.sigma);
    }
    tau_max_ = 10.0 * (hi - lo + smax);
    cell_ = tau_max_ / kGrid;
    std::vector<double> logp(kGrid);
    for (std::size_t i = 0; i < kGrid; ++i) {
      double tau = (static_cast<double>(i) + 0.5) * cell_;
      auto [mhat, vm] = conditional(tau);
      double lp = 0.5 * std::log(vm);
      for (const auto& m : group_) {
        double v = m.sigma * m.sigma + tau * tau;
        lp += -0.5 * std::log(v) - 0.5 * (m.kappa - mhat) * (m.kappa - mhat) / v;
      }
      logp[i] = lp;
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    cdf_.resize(kGrid);
    double acc = 0.0;
    for (std::size_t i = 0; i < kGrid; ++i) {
      acc += std::exp(logp[i] - top);
      cdf_[i] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }

  double draw(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u(rng));
    auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), kGrid - 1));
    double tau = (static_cast<double>(i) + u(rng)) * cell_;
    auto [mhat, vm] = conditional(tau);
    std::normal_distribution<double> n(mhat, std::sqrt(vm));
    return n(rng);
  }

 private:
  static constexpr std::size_t kGrid = 4000;

  std::pair<double, double> conditional(double tau) const {
    double sw = 0.0, swy = 0.0;
    for (const auto& m : group_) {
      double w = 1.0 / (m.sigma * m.sigma + tau * tau);
      sw += w;
      swy += w * m.kappa;
    }
    return {swy / sw, 1.0 / sw};
  }

  const std::vector<KappaMeasurement>& group_;
  double tau_max_ = 0.0;
  double cell_ = 0.0;
  std::vector<double> cdf_;
};

}  // namespace

PosteriorSummary kappa_shift_posterior(const std::vector<KappaMeasurement>& live,
                                       const std::vector<KappaMeasurement>& dry, std::size_t n_samples,
                                       std::uint64_t seed) {
  if (n_samples < 10) throw ValidationError("kappa_shift_posterior: need at least 10 samples");
  const GroupSampler a(live), b(dry);
  Rng rng = make_rng(seed);
  PosteriorSummary s;
  s.samples.reserve(n_samples);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    double d = a.draw(rng) - b.draw(rng);
    s.samples.push_back(d);
    sum += d;
  }
  const double n = static_cast<double>(n_samples);
  s.mean = sum / n;
  double ss = 0.0;
  for (double d : s.samples) ss += (d - s.mean) * (d - s.mean);
  s.sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> sorted(s.samples);
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    double pos = q * (n - 1.0);
    auto i = static_cast<std::size_t>(pos);
    double f = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - f) + sorted[i + 1] * f : sorted.back();
  };
  s.q025 = quantile(0.025);
  s.q975 = quantile(0.975);
  return s;
}

}  // namespace ndsense
