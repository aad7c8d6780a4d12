#include "ndsense/odmr.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "ndsense/csv.hpp"
#include "ndsense/error.hpp"

namespace ndsense {

void OdmrScan::validate() const {
  if (freqs.size() < 3 || freqs.size() != counts.size())
    throw ValidationError("odmr scan: need >= 3 points with matching counts");
  if (n_scans < 1) throw ValidationError("odmr scan: n_scans must be >= 1");
  const double step = (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
  if (!(step > 0.0)) throw ValidationError("odmr scan: frequencies must increase");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!std::isfinite(freqs[i]) || !std::isfinite(counts[i])) throw ValidationError("odmr scan: non-finite value");
    if (counts[i] < 0.0) throw ValidationError("odmr scan: counts must be >= 0");
    double expected = freqs.front() + step * static_cast<double>(i);
    if (std::abs(freqs[i] - expected) > 1e-6 * step) throw ValidationError("odmr scan: frequency grid not uniform");
  }
}

OdmrScan synthesize_scan(const Lineshape& shape, const std::vector<double>& freqs, double lambda0, double shift_hz,
                         Rng& rng, int n_scans) {
  if (!std::isfinite(lambda0) || !(lambda0 > 0.0)) throw ValidationError("synthesize_scan: lambda0 must be > 0");
  if (!std::isfinite(shift_hz)) throw ValidationError("synthesize_scan: shift must be finite");
  if (n_scans < 1) throw ValidationError("synthesize_scan: n_scans must be >= 1");
  if (freqs.size() < 3) throw ValidationError("synthesize_scan: need >= 3 frequencies");
  OdmrScan s;
  s.freqs = freqs;
  s.n_scans = n_scans;
  s.counts.reserve(freqs.size());
  const double scale = lambda0 * n_scans;
  for (double f : freqs) s.counts.push_back(poisson(rng, scale * shape.value(f - shift_hz)));
  const double dip = shape.dip_center() + shift_hz;
  s.outside_grid = dip < freqs.front() || dip > freqs.back();
  return s;
}

OdmrScan synthesize_scan(const Lineshape& shape, const std::vector<double>& freqs, double lambda0, double shift_hz,
                         std::uint64_t seed, int n_scans) {
  Rng rng = make_rng(seed);
  return synthesize_scan(shape, freqs, lambda0, shift_hz, rng, n_scans);
}

Lineshape build_interpolation(const std::vector<OdmrScan>& scans) {
  if (scans.empty()) throw ValidationError("build_interpolation: no scans");
  const auto& freqs = scans.front().freqs;
  std::vector<double> mean(freqs.size(), 0.0);
  double total_scans = 0.0;
  for (const auto& s : scans) {
    s.validate();
    if (s.freqs != freqs) throw ValidationError("build_interpolation: scans use different grids");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.counts[i];
    total_scans += s.n_scans;
  }
  for (auto& v : mean) {
    v /= total_scans;
    if (!(v > 0.0)) throw ValidationError("build_interpolation: mean counts must be > 0 at every point");
  }
  std::vector<double> sorted(mean);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t top = std::max<std::size_t>(1, sorted.size() / 10);
  std::vector<double> decile(sorted.end() - static_cast<std::ptrdiff_t>(top), sorted.end());
  const std::size_t mid = decile.size() / 2;
  const double plateau = decile.size() % 2 ? decile[mid] : 0.5 * (decile[mid - 1] + decile[mid]);
  for (auto& v : mean) v /= plateau;
  return Lineshape::interpolation(freqs, std::move(mean));
}

namespace {

struct Profile {
  double lambda = 0.0;
  double rss = 0.0;
};

Profile profile(const OdmrScan& scan, const Lineshape& shape, double shift) {
  double a = 0.0, b = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < scan.freqs.size(); ++i) {
    double l = shape.value(scan.freqs[i] - shift);
    a += scan.counts[i] * l;
    b += l * l;
    yy += scan.counts[i] * scan.counts[i];
  }
  Profile p;
  p.lambda = a / b;
  p.rss = std::max(0.0, yy - a * a / b);
  return p;
}

}  // namespace

ShiftFit fit_shift(const OdmrScan& scan, const Lineshape& shape, const ShiftFitOptions& opts) {
  scan.validate();
  const double span = scan.freqs.back() - scan.freqs.front();
  const double spacing = span / static_cast<double>(scan.freqs.size() - 1);
  const double range = opts.max_shift_hz > 0.0 ? opts.max_shift_hz : span / 4.0;
  if (!(opts.tolerance_hz > 0.0)) throw ValidationError("fit_shift: tolerance must be > 0");

  // Coarse linear search, then golden-section refinement around the best node.
  const double step = std::min(spacing / 2.0, range / 20.0);
  const auto n_coarse = static_cast<std::size_t>(std::ceil(2.0 * range / step));
  std::size_t best = 0;
  double best_rss = INFINITY;
  for (std::size_t k = 0; k <= n_coarse; ++k) {
    double d = -range + 2.0 * range * static_cast<double>(k) / static_cast<double>(n_coarse);
    double rss = profile(scan, shape, d).rss;
    if (rss < best_rss) {
      best_rss = rss;
      best = k;
    }
  }
  auto node = [&](std::size_t k) {
    return -range + 2.0 * range * static_cast<double>(k) / static_cast<double>(n_coarse);
  };
  double lo = node(best == 0 ? 0 : best - 1);
  double hi = node(std::min(best + 1, n_coarse));
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = profile(scan, shape, x1).rss, f2 = profile(scan, shape, x2).rss;
  int iter = 0;
  while (hi - lo > opts.tolerance_hz && iter < opts.max_iterations) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = profile(scan, shape, x1).rss;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = profile(scan, shape, x2).rss;
    }
    ++iter;
  }
  ShiftFit fit;
  fit.shift = 0.5 * (lo + hi);
  const Profile p = profile(scan, shape, fit.shift);
  fit.lambda0 = p.lambda;
  const bool at_edge = best == 0 || best == n_coarse;
  fit.converged = hi - lo <= opts.tolerance_hz && !at_edge && p.lambda > 0.0 && std::isfinite(p.lambda);

  const std::size_t n = scan.freqs.size();
  double jll = 0.0, jld = 0.0, jdd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double l = shape.value(scan.freqs[i] - fit.shift);
    double d = -p.lambda * shape.slope(scan.freqs[i] - fit.shift);
    jll += l * l;
    jld += l * d;
    jdd += d * d;
  }
  const double det = jll * jdd - jld * jld;
  const double s2 = p.rss / static_cast<double>(n - 2);
  if (det > 0.0) {
    fit.sigma = std::sqrt(s2 * jll / det);
  } else {
    fit.sigma = INFINITY;
    fit.converged = false;
  }
  return fit;
}

std::vector<AveragedShift> average_shifts(const std::vector<ShiftFit>& fits, std::size_t n_f) {
  if (n_f < 1) throw ValidationError("average_shifts: n_f must be >= 1");
  std::vector<AveragedShift> out;
  for (std::size_t start = 0; start + n_f <= fits.size(); start += n_f) {
    AveragedShift a;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = start; i < start + n_f; ++i) {
      if (!fits[i].converged) {
        ++a.n_rejected;
        continue;
      }
      sum += fits[i].shift;
      ++a.n_used;
    }
    if (a.n_used < 2) continue;
    const double nu = static_cast<double>(a.n_used);
    a.shift = sum / nu;
    for (std::size_t i = start; i < start + n_f; ++i)
      if (fits[i].converged) sum2 += (fits[i].shift - a.shift) * (fits[i].shift - a.shift);
    a.sem = std::sqrt(sum2 / (nu - 1.0) / nu);
    out.push_back(a);
  }
  return out;
}

namespace {

// Parameters are rescaled to O(1): amplitude relative to its start, widths and centres in MHz.
struct LorentzianFunctor : Eigen::DenseFunctor<double> {
  const OdmrScan* scan;
  Lineshape::Kind kind;
  std::size_t peaks;
  double lambda_ref, f_ref;

  LorentzianFunctor(const OdmrScan& s, Lineshape::Kind k, std::size_t np, double lref, double fref)
      : DenseFunctor(static_cast<int>(1 + 3 * np), static_cast<int>(s.freqs.size())),
        scan(&s),
        kind(k),
        peaks(np),
        lambda_ref(lref),
        f_ref(fref) {}

  int operator()(const InputType& x, ValueType& fvec) const {
    for (std::size_t i = 0; i < scan->freqs.size(); ++i) {
      double l = 1.0;
      for (std::size_t k = 0; k < peaks; ++k) {
        double w = x(1 + peaks + k) * 1e6;
        double u = (scan->freqs[i] - f_ref - x(1 + 2 * peaks + k) * 1e6) / w;
        l -= x(1 + k) / (1.0 + u * u);
      }
      fvec(static_cast<Eigen::Index>(i)) = x(0) * lambda_ref * l - scan->counts[i];
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& jac) const {
    for (std::size_t i = 0; i < scan->freqs.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      double l = 1.0;
      const double amp = x(0) * lambda_ref;
      for (std::size_t k = 0; k < peaks; ++k) {
        double c = x(1 + k);
        double w = x(1 + peaks + k) * 1e6;
        double u = (scan->freqs[i] - f_ref - x(1 + 2 * peaks + k) * 1e6) / w;
        double q = 1.0 + u * u;
        l -= c / q;
        jac(row, static_cast<Eigen::Index>(1 + k)) = -amp / q;
        jac(row, static_cast<Eigen::Index>(1 + peaks + k)) = -amp * 2.0 * c * u * u / (w * q * q) * 1e6;
        jac(row, static_cast<Eigen::Index>(1 + 2 * peaks + k)) = -amp * 2.0 * c * u / (w * q * q) * 1e6;
      }
      jac(row, 0) = lambda_ref * l;
    }
    return 0;
  }
};

}  // namespace

LorentzianFit fit_lorentzian(const OdmrScan& scan, const Lineshape& initial, double lambda0_initial) {
  scan.validate();
  if (initial.kind() == Lineshape::Kind::interpolation)
    throw ValidationError("fit_lorentzian: initial shape must be a Lorentzian");
  if (!(lambda0_initial > 0.0)) throw ValidationError("fit_lorentzian: initial lambda0 must be > 0");
  const std::size_t np = initial.peaks().size();
  const double f_ref = 0.5 * (scan.freqs.front() + scan.freqs.back());
  LorentzianFunctor functor(scan, initial.kind(), np, lambda0_initial, f_ref);
  Eigen::VectorXd x(static_cast<Eigen::Index>(1 + 3 * np));
  x(0) = 1.0;
  for (std::size_t k = 0; k < np; ++k) {
    const auto& p = initial.peaks()[k];
    x(static_cast<Eigen::Index>(1 + k)) = p.contrast;
    x(static_cast<Eigen::Index>(1 + np + k)) = p.hwhm / 1e6;
    x(static_cast<Eigen::Index>(1 + 2 * np + k)) = (p.center - f_ref) / 1e6;
  }
  Eigen::LevenbergMarquardt<LorentzianFunctor> lm(functor);
  lm.setMaxfev(400);
  const auto status = lm.minimize(x);

  LorentzianFit fit;
  fit.iterations = static_cast<int>(lm.iterations());
  fit.converged = status >= Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall &&
                  status <= Eigen::LevenbergMarquardtSpace::CosinusTooSmall && x.allFinite();
  std::vector<double> p(3 * np);
  for (std::size_t k = 0; k < np; ++k) {
    p[k] = x(static_cast<Eigen::Index>(1 + k));
    p[np + k] = std::abs(x(static_cast<Eigen::Index>(1 + np + k))) * 1e6;
    p[2 * np + k] = x(static_cast<Eigen::Index>(1 + 2 * np + k)) * 1e6 + f_ref;
  }
  try {
    fit.shape = Lineshape::from_params(initial.kind(), p);
  } catch (const ValidationError&) {
    fit.shape = initial;
    fit.converged = false;
  }
  fit.lambda0 = x(0) * lambda0_initial;
  double c = 0.0;
  for (std::size_t k = 0; k < np; ++k) c += p[2 * np + k];
  fit.center = c / static_cast<double>(np);
  return fit;
}

Estimate shift_to_temperature(double shift_hz, double sigma_hz, const KappaCalibration& cal) {
  if (!std::isfinite(cal.kappa) || cal.kappa == 0.0) throw ValidationError("shift_to_temperature: kappa must be non-zero");
  if (!std::isfinite(shift_hz) || !(sigma_hz >= 0.0)) throw ValidationError("shift_to_temperature: invalid shift");
  const double k = cal.kappa * 1e3;
  Estimate e;
  e.value = shift_hz / k;
  const double a = sigma_hz / k;
  const double b = shift_hz * cal.sigma_kappa * 1e3 / (k * k);
  e.sigma = std::hypot(a, b);
  return e;
}

CrbResult crb(const Lineshape& shape, double lambda0, const std::vector<double>& freqs, CrbParams params) {
  if (!std::isfinite(lambda0) || !(lambda0 > 0.0)) throw ValidationError("crb: lambda0 must be > 0");
  if (freqs.empty()) throw ValidationError("crb: empty frequency grid");
  const bool lorentz = shape.kind() != Lineshape::Kind::interpolation;
  CrbResult r;
  std::size_t np = 0;
  if (params == CrbParams::shift) {
    r.names = {"shift"};
    np = 1;
  } else if (params == CrbParams::amplitude_shift || !lorentz) {
    r.names = {"lambda0", "shift"};
    np = 2;
  } else {
    r.names = {"lambda0"};
    const std::size_t k = shape.peaks().size();
    for (std::size_t i = 0; i < k; ++i) r.names.push_back("contrast" + std::to_string(i + 1));
    for (std::size_t i = 0; i < k; ++i) r.names.push_back("hwhm" + std::to_string(i + 1));
    for (std::size_t i = 0; i < k; ++i) r.names.push_back("center" + std::to_string(i + 1));
    np = 1 + 3 * k;
  }
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
  Eigen::VectorXd g(static_cast<Eigen::Index>(np));
  for (double f : freqs) {
    const double l = shape.value(f);
    if (!(l > 0.0)) throw ValidationError("crb: lineshape must be > 0 on the grid");
    const double mu = lambda0 * l;
    if (np == 1) {
      g(0) = -lambda0 * shape.slope_smooth(f);
    } else if (np == 2) {
      g(0) = l;
      g(1) = -lambda0 * shape.slope_smooth(f);
    } else {
      g(0) = l;
      const auto pg = shape.param_gradient(f);
      for (std::size_t i = 0; i < pg.size(); ++i) g(static_cast<Eigen::Index>(1 + i)) = lambda0 * pg[i];
    }
    F.noalias() += g * g.transpose() / mu;
  }
  // Scale to unit diagonal so the singularity test does not depend on parameter units.
  Eigen::VectorXd d = F.diagonal();
  if ((d.array() <= 0.0).any() || !d.allFinite()) throw SingularError("crb: information matrix is singular");
  Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd Fn = s.asDiagonal() * F * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Fn);
  if (eig.eigenvalues().minCoeff() < 1e-12 * eig.eigenvalues().maxCoeff())
    throw SingularError("crb: information matrix is singular");
  r.fisher = F;
  r.covariance = s.asDiagonal() * eig.operatorInverseSqrt() * eig.operatorInverseSqrt() * s.asDiagonal();
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
  if (np <= 2) {
    r.shift_variance = r.covariance(static_cast<Eigen::Index>(np - 1), static_cast<Eigen::Index>(np - 1));
  } else {
    const std::size_t k = shape.peaks().size();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np));
    for (std::size_t i = 0; i < k; ++i) v(static_cast<Eigen::Index>(1 + 2 * k + i)) = 1.0 / static_cast<double>(k);
    r.shift_variance = v.dot(r.covariance * v);
  }
  return r;
}

double crb_temperature_sensitivity(const Lineshape& shape, double lambda0, const std::vector<double>& freqs,
                                   double kappa_khz_per_c, const ScanTiming& timing, CrbParams params) {
  if (!std::isfinite(kappa_khz_per_c) || kappa_khz_per_c == 0.0)
    throw ValidationError("crb_temperature_sensitivity: kappa must be non-zero");
  if (!(timing.scan_s > 0.0) || !(timing.duty > 0.0) || timing.duty > 1.0)
    throw ValidationError("crb_temperature_sensitivity: scan time must be > 0 and duty in (0, 1]");
  const CrbResult r = crb(shape, lambda0, freqs, params);
  return std::sqrt(r.shift_variance * timing.scan_s / timing.duty) / std::abs(kappa_khz_per_c * 1e3);
}

std::vector<OdmrScan> read_odmr(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t cf = t.column("f_hz");
  const std::size_t cc = t.column("counts");
  int n_scans = 1;
  if (const auto* v = t.meta_value("n_scans")) n_scans = static_cast<int>(parse_double(*v, 0));
  std::vector<OdmrScan> scans;
  std::map<std::string, std::size_t> by_id;
  const bool long_form = t.has_column("scan_id");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t idx;
    if (long_form) {
      const std::string& id = t.rows[r][t.column("scan_id")];
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        idx = scans.size();
        by_id.emplace(id, idx);
        scans.emplace_back();
      } else {
        idx = it->second;
      }
    } else {
      idx = t.block[r];
      while (scans.size() <= idx) scans.emplace_back();
    }
    const double counts = t.number(r, cc);
    if (counts < 0.0) throw ParseError(t.line_numbers[r], "counts must be >= 0");
    scans[idx].freqs.push_back(t.number(r, cf));
    scans[idx].counts.push_back(counts);
  }
  if (scans.empty()) throw ValidationError("odmr: no data rows");
  for (auto& s : scans) {
    s.n_scans = n_scans;
    s.validate();
  }
  return scans;
}

void write_odmr(std::ostream& out, const std::vector<OdmrScan>& scans) {
  if (scans.empty()) throw ValidationError("write_odmr: no scans");
  for (const auto& s : scans)
    if (s.n_scans != scans.front().n_scans) throw ValidationError("write_odmr: scans differ in n_scans");
  CsvWriter w(out, "odmr", {"f_hz", "counts"}, {{"n_scans", std::to_string(scans.front().n_scans)}});
  for (std::size_t k = 0; k < scans.size(); ++k) {
    if (k > 0) w.blank_line();
    for (std::size_t i = 0; i < scans[k].freqs.size(); ++i) w.row({scans[k].freqs[i], scans[k].counts[i]});
  }
}

}  // namespace ndsense
