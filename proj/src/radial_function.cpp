#include "hardy/radial_function.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hardy/error.hpp"

namespace hardy {

LogGrid::LogGrid(double s_min, double s_max, std::size_t count)
    : s_min_(s_min), s_max_(s_max), count_(count) {
  if (count < 2 || !(s_max > s_min) || !std::isfinite(s_min) || !std::isfinite(s_max)) {
    throw Error(ErrorKind::PreconditionViolated, "log grid needs count >= 2 and s_min < s_max");
  }
  h_ = (s_max - s_min) / static_cast<double>(count - 1);
}

LogGrid LogGrid::from_radii(double r_min, double r_max, std::size_t count) {
  if (!(r_min > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "r_min = " + std::to_string(r_min));
  return LogGrid(std::log(r_min), std::log(r_max), count);
}

double LogGrid::r(std::size_t i) const { return std::exp(s(i)); }
double LogGrid::r_min() const { return std::exp(s_min_); }
double LogGrid::r_max() const { return std::exp(s_max_); }

std::vector<double> LogGrid::nodes() const {
  std::vector<double> out(count_);
  for (std::size_t i = 0; i < count_; ++i) out[i] = s(i);
  return out;
}

LogGrid LogGrid::refined(std::size_t factor) const {
  return LogGrid(s_min_, s_max_, (count_ - 1) * factor + 1);
}

RadialFunction RadialFunction::sample(const LogGrid& grid, const std::function<double(double)>& u_of_r) {
  RadialFunction f;
  f.grid = grid;
  f.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = u_of_r(grid.r(i));
  return f;
}

double RadialFunction::at_s(double s) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(s));
  if (s < grid.s_min() - tol || s > grid.s_max() + tol) {
    throw Error(ErrorKind::RadiusOutOfRange, "s = " + std::to_string(s) + " outside grid");
  }
  const std::size_t n = values.size();
  const double x = (s - grid.s_min()) / grid.h();
  const double xi = std::round(x);
  if (std::abs(x - xi) < 1e-12) return values[static_cast<std::size_t>(std::clamp(xi, 0.0, double(n - 1)))];

  constexpr std::size_t stencil = 6;
  const std::size_t m = std::min(stencil, n);
  auto base = static_cast<long>(std::floor(x)) - static_cast<long>(m / 2) + 1;
  base = std::clamp<long>(base, 0, static_cast<long>(n - m));
  double result = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double xj = static_cast<double>(base) + static_cast<double>(j);
    double w = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == j) continue;
      const double xk = static_cast<double>(base) + static_cast<double>(k);
      w *= (x - xk) / (xj - xk);
    }
    result += w * values[static_cast<std::size_t>(base) + j];
  }
  return result;
}

double RadialFunction::at(double r) const {
  if (!(r > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "r = " + std::to_string(r));
  return at_s(std::log(r));
}

double RadialFunction::min_value() const { return *std::min_element(values.begin(), values.end()); }

double RadialFunction::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

RadialFunction operator*(double a, const RadialFunction& f) {
  RadialFunction out = f;
  for (double& v : out.values) v *= a;
  return out;
}

RadialFunction operator+(const RadialFunction& a, const RadialFunction& b) {
  if (!(a.grid == b.grid)) throw Error(ErrorKind::PreconditionViolated, "grid mismatch in sum");
  RadialFunction out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  out.origin_exponent.reset();
  out.infinity_exponent.reset();
  return out;
}

LogSlopeFit fit_log_slope(std::span<const double> s, std::span<const double> ln_y) {
  const std::size_t n = s.size();
  if (n < 2 || ln_y.size() != n) throw Error(ErrorKind::WindowTooSmall, "need at least two points");
  double sm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sm += s[i];
    ym += ln_y[i];
  }
  sm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (s[i] - sm) * (s[i] - sm);
    sxy += (s[i] - sm) * (ln_y[i] - ym);
  }
  LogSlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * sm;
  for (std::size_t i = 0; i < n; ++i) {
    fit.max_residual = std::max(fit.max_residual, std::abs(ln_y[i] - fit.intercept - fit.slope * s[i]));
  }
  return fit;
}

void tag_exponents(RadialFunction& f, std::size_t window) {
  const std::size_t n = f.size();
  window = std::min(window, n);
  auto fit_range = [&](std::size_t first) -> std::optional<double> {
    std::vector<double> s, ly;
    for (std::size_t i = first; i < first + window; ++i) {
      if (!(f.values[i] > 0.0)) return std::nullopt;
      s.push_back(f.grid.s(i));
      ly.push_back(std::log(f.values[i]));
    }
    return fit_log_slope(s, ly).slope;
  };
  f.origin_exponent = fit_range(0);
  f.infinity_exponent = fit_range(n - window);
}

}  // namespace hardy
