#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hardy {

/// Uniform grid in s = ln r.
class LogGrid {
 public:
  LogGrid() = default;
  /// Throws PreconditionViolated unless count >= 2 and s_min < s_max.
  LogGrid(double s_min, double s_max, std::size_t count);

  static LogGrid from_radii(double r_min, double r_max, std::size_t count);

  double s_min() const { return s_min_; }
  double s_max() const { return s_max_; }
  std::size_t size() const { return count_; }
  double h() const { return h_; }
  double s(std::size_t i) const { return s_min_ + h_ * static_cast<double>(i); }
  double r(std::size_t i) const;
  double r_min() const;
  double r_max() const;
  std::vector<double> nodes() const;

  /// Same span, (count-1)*factor+1 nodes; keeps every original node.
  LogGrid refined(std::size_t factor) const;

  bool operator==(const LogGrid&) const = default;

 private:
  double s_min_ = 0.0;
  double s_max_ = 1.0;
  std::size_t count_ = 2;
  double h_ = 1.0;
};

/// Samples u(e^s) on a LogGrid with optional power-law tags at both ends.
struct RadialFunction {
  LogGrid grid;
  std::vector<double> values;
  std::optional<double> origin_exponent;
  std::optional<double> infinity_exponent;

  static RadialFunction sample(const LogGrid& grid, const std::function<double(double)>& u_of_r);

  std::size_t size() const { return values.size(); }
  double r(std::size_t i) const { return grid.r(i); }
  /// Sixth-order Lagrange interpolation in s; throws RadiusOutOfRange off-grid.
  double at_s(double s) const;
  double at(double r) const;
  double min_value() const;
  double max_abs() const;
};

RadialFunction operator*(double a, const RadialFunction& f);
RadialFunction operator+(const RadialFunction& a, const RadialFunction& b);

/// Least-squares slope of ln|y| against s over the given nodes.
struct LogSlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};
LogSlopeFit fit_log_slope(std::span<const double> s, std::span<const double> ln_y);

/// Fits power-law exponents over the first/last `window` nodes (positive
/// samples only) and stores them in the exponent tags.
void tag_exponents(RadialFunction& f, std::size_t window = 8);

}  // namespace hardy
