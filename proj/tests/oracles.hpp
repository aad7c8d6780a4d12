#pragma once

// Brute-force reference implementations. They share no code with the library and favour
// obviousness over speed.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// Direct double loop: mean of (x[i+lag] − x[i])² over all i.
inline double msd_1d(const std::vector<double>& x, std::size_t lag) {
  double s = 0.0;
  const std::size_t k = x.size() - lag;
  for (std::size_t i = 0; i < k; ++i) s += (x[i + lag] - x[i]) * (x[i + lag] - x[i]);
  return s / static_cast<double>(k);
}

/// Overlapping Allan deviation from explicit block averages.
inline double allan(const std::vector<double>& y, std::size_t m) {
  const std::size_t n = y.size();
  double acc = 0.0;
  std::size_t terms = 0;
  for (std::size_t j = 0; j + 2 * m <= n; ++j) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      a += y[j + i];
      b += y[j + m + i];
    }
    const double d = (b - a) / static_cast<double>(m);
    acc += d * d;
    ++terms;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(terms)));
}

/// Welch PSD by explicit DFT: Hann (periodic) window, 50% overlap, mean removed per segment,
/// one-sided density.
inline std::vector<double> welch(const std::vector<double>& x, std::size_t nseg, double dt) {
  const double pi = 3.14159265358979323846;
  std::vector<double> w(nseg);
  double wss = 0.0;
  for (std::size_t i = 0; i < nseg; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(nseg));
    wss += w[i] * w[i];
  }
  const std::size_t hop = nseg / 2;
  std::vector<double> out(nseg / 2 + 1, 0.0);
  std::size_t count = 0;
  for (std::size_t start = 0; start + nseg <= x.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) mean += x[start + i];
    mean /= static_cast<double>(nseg);
    for (std::size_t k = 0; k < out.size(); ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < nseg; ++i)
        acc += w[i] * (x[start + i] - mean) *
               std::polar(1.0, -2.0 * pi * static_cast<double>(k * i) / static_cast<double>(nseg));
      double p = std::norm(acc) * dt / wss;
      if (k != 0 && !(nseg % 2 == 0 && k == nseg / 2)) p *= 2.0;
      out[k] += p;
    }
    ++count;
  }
  for (auto& v : out) v /= static_cast<double>(count);
  return out;
}

/// Composite Simpson integral of f on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Laplace transform at real s of a function sampled as log-log pieces, evaluated by
/// substitution t = e^u and Simpson quadrature over a wide u range.
inline double laplace(const std::function<double(double)>& g, double s) {
  auto integrand = [&](double u) {
    const double t = std::exp(u);
    return g(t) * std::exp(-s * t) * t;
  };
  const double u0 = std::log(1e-6 / s), u1 = std::log(60.0 / s);
  return simpson(integrand, u0, u1, 20000);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Ordinary least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
