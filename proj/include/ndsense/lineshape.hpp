#pragma once

#include <string>
#include <vector>

namespace ndsense {

/// One Lorentzian dip: contrast (fractional depth), half width at half maximum (Hz), centre (Hz).
struct Lorentzian {
  double contrast = 0.0;
  double hwhm = 1.0;
  double center = 0.0;
};

/// Normalized ODMR lineshape L(f), equal to 1 off resonance.
class Lineshape {
 public:
  enum class Kind { double_lorentzian, single_lorentzian, interpolation };

  static Lineshape double_lorentzian(const Lorentzian& a, const Lorentzian& b);
  static Lineshape single_lorentzian(const Lorentzian& a);
  /// Piecewise-linear table; frequencies strictly increasing, levels > 0.
  /// Outside the table the shape is 1.
  static Lineshape interpolation(std::vector<double> freqs, std::vector<double> levels);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  const std::vector<Lorentzian>& peaks() const { return peaks_; }
  const std::vector<double>& table_freqs() const { return table_f_; }
  const std::vector<double>& table_levels() const { return table_l_; }

  double value(double f) const;
  /// dL/df; for tables the slope of the containing segment (0 outside).
  double slope(double f) const;
  /// dL/df for information bounds; at table nodes the mean of the adjacent segment slopes.
  double slope_smooth(double f) const;

  /// Number of shape parameters (6 double, 3 single, 0 table).
  int n_params() const;
  /// Flattened parameters: contrasts, widths, then centres.
  std::vector<double> params() const;
  static Lineshape from_params(Kind kind, const std::vector<double>& p);
  /// dL/dp for each shape parameter, same order as params().
  std::vector<double> param_gradient(double f) const;

  /// Frequency of the deepest point (table node or Lorentzian centre).
  double dip_center() const;
  /// Copy with every centre (or the table) displaced by df.
  Lineshape shifted(double df) const;

 private:
  Kind kind_ = Kind::single_lorentzian;
  std::vector<Lorentzian> peaks_;
  std::vector<double> table_f_, table_l_;
};

/// Uniform grid of n points from f_start to f_stop inclusive.
std::vector<double> frequency_grid(double f_start, double f_stop, int n);

/// Default synthetic nanodiamond spectrum: two strain-split Lorentzians about 2.87 GHz.
struct DefaultLineshapeSpec {
  double center_hz = 2.87e9;
  double splitting_hz = 6e6;
  double contrast_low = 0.16;
  double contrast_high = 0.096;
  double hwhm_low_hz = 3.5e6;
  double hwhm_high_hz = 4.2e6;
  double span_hz = 40e6;
  int n_points = 200;
};
Lineshape default_lineshape(const DefaultLineshapeSpec& spec = {});
std::vector<double> default_grid(const DefaultLineshapeSpec& spec = {});

}  // namespace ndsense
