#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ndsense/rheology.hpp"
#include "ndsense/trajectory.hpp"
#include "ndsense/types.hpp"

namespace ndsense {

/// Null distribution of the directionality ratio for N-step Brownian windows in M dimensions.
struct GammaNull {
  int N = 75;
  int M = 2;
  double confidence = 0.95;
  double mu_chi = 0.0;     // mean step length in units of the per-axis step sd
  double sigma_chi = 0.0;  // sd of the step length, same units
  double noncentrality = 0.0;
  std::vector<double> gamma;  // table abscissae on (0, 1]
  std::vector<double> pdf;
  double critical_gamma = 0.0;

  /// Linear interpolation of the tabulated density; 0 outside (0, 1].
  double pdf_at(double g) const;
  /// Trapezoidal integral of the table.
  double integral() const;
};

/// N >= 2, M in {1, 2, 3}, confidence in (0, 1). Tabulates 2048 points.
GammaNull gamma_null(int N, int M, double confidence = 0.95);

/// Axes used for an M-dimensional test: x, xy or xyz.
Axes axes_for_dims(int M);

/// |end − start| / Σ|step| over the chosen axes; nullopt when the path length is zero.
std::optional<double> directionality_ratio(const std::vector<Vec3>& window, Axes axes = Axes::xy());

enum class MotionClass { directed, non_directed };
std::string class_name(MotionClass c);

struct SegmentLabel {
  std::size_t start = 0;  // point index, inclusive
  std::size_t end = 0;    // point index, inclusive
  double gamma = 0.0;     // directed: largest window γ; otherwise γ of the whole span (NaN if undefined)
  MotionClass cls = MotionClass::non_directed;
  double displacement = 0.0;  // nm, end-to-start over the tested axes
  std::optional<double> alpha;
};

struct SegmentOptions {
  std::size_t window = 75;    // steps
  double min_length = 500.0;  // nm
  bool fit_alpha = true;
};

struct Segmentation {
  std::vector<SegmentLabel> labels;     // contiguous, sharing boundary points
  std::vector<double> window_gamma;     // per start index, NaN when undefined
  std::size_t n_windows = 0;
  std::size_t n_supra = 0;              // windows above the critical value
  std::size_t n_undefined = 0;          // zero-path windows
  std::size_t n_rejected_short = 0;     // supra-threshold runs failing the length gate

  double supra_fraction() const { return n_windows ? static_cast<double>(n_supra) / n_windows : 0.0; }
  std::size_t n_directed() const;
};

/// Stride-1 windows; overlapping supra-threshold windows are merged, and a merged run is
/// directed only if its end-to-end displacement reaches min_length.
Segmentation segment(const Trajectory& traj, const GammaNull& null, const SegmentOptions& opts = {});

/// Exponent of one span, fitted on up to 24 log-spaced lags in 1..max(4, steps/4).
std::optional<double> segment_alpha(const Trajectory& traj, std::size_t start, std::size_t end, Axes axes);

struct ClassSummary {
  MotionClass cls = MotionClass::non_directed;
  std::vector<double> alphas;
  double mean = 0.0;
  double sd = 0.0;
  bool degenerate = false;  // a single segment: sd is 0 by construction
  std::vector<double> taus;
  std::vector<double> ensemble_msd;  // mean over segments covering each lag
  std::optional<double> ensemble_alpha;
};

struct ClassExponents {
  std::vector<ClassSummary> classes;
  std::vector<std::string> notices;  // classes omitted for lack of segments
};

/// Per-class α distribution (segments of >= 8 points) with a normal fit, and the
/// ensemble MSD over lags 2..20 samples.
ClassExponents class_exponents(const Trajectory& traj, const std::vector<SegmentLabel>& labels, Axes axes);

}  // namespace ndsense
