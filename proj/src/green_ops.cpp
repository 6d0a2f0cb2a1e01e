#include "hardy/green_ops.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "hardy/error.hpp"
#include "hardy/quadrature.hpp"

namespace hardy {

namespace {

constexpr std::size_t kTailWindow = 8;

struct EndBehaviour {
  bool zero = false;
  std::optional<double> exponent;
};

// Power-law exponent of |f| over `window` nodes starting at `first`; zero
// tails need no closure.
EndBehaviour end_behaviour(const RadialFunction& f, std::size_t first, std::size_t window,
                           std::optional<double> tag) {
  EndBehaviour e;
  bool all_zero = true, pos = true, neg = true;
  for (std::size_t i = first; i < first + window; ++i) {
    const double v = f.values[i];
    if (v != 0.0) all_zero = false;
    if (!(v > 0.0)) pos = false;
    if (!(v < 0.0)) neg = false;
  }
  const double end_value = f.values[first == 0 ? 0 : f.size() - 1];
  if (all_zero || end_value == 0.0) {
    e.zero = true;
    return e;
  }
  if (tag) {
    e.exponent = tag;
    return e;
  }
  if (!pos && !neg) return e;  // oscillating end: no power-law closure
  std::vector<double> s, ly;
  for (std::size_t i = first; i < first + window; ++i) {
    s.push_back(f.grid.s(i));
    ly.push_back(std::log(std::abs(f.values[i])));
  }
  e.exponent = fit_log_slope(s, ly).slope;
  return e;
}

}  // namespace

double phi_weight(const MuParams& params, double r) {
  if (!params.critical()) return phi_mu(params, r);
  return power_law(params.taus.tau_minus, r) * (1.0 + std::abs(std::log(r)));
}

RadialFunction newtonian_radial(const RadialFunction& f, const DimensionParams& dim) {
  const std::size_t n = f.size();
  if (n < kTailWindow) throw Error(ErrorKind::WindowTooSmall, "newtonian_radial needs at least 8 nodes");
  const int N = dim.N;
  const LogGrid& g = f.grid;
  const double h = g.h();

  const auto origin = end_behaviour(f, 0, kTailWindow, f.origin_exponent);
  const auto infinity = end_behaviour(f, n - kTailWindow, kTailWindow, f.infinity_exponent);

  double tail_A = 0.0;
  if (!origin.zero && origin.exponent) {
    const double p0 = *origin.exponent;
    if (p0 + N <= 0.0) {
      throw Error(ErrorKind::OriginDivergence,
                  "origin exponent " + std::to_string(p0) + " <= -N: f s^{N-1} not integrable at 0");
    }
    tail_A = f.values[0] * std::exp(N * g.s_min()) / (p0 + N);
  }
  double tail_B = 0.0;
  if (!infinity.zero && infinity.exponent) {
    const double pinf = *infinity.exponent;
    if (pinf >= -2.0) {
      throw Error(ErrorKind::TailDivergence,
                  "infinity exponent " + std::to_string(pinf) + " >= -2: f s not integrable at infinity");
    }
    tail_B = f.values[n - 1] * std::exp(2.0 * g.s_max()) / -(pinf + 2.0);
  }

  std::vector<double> yA(n), yB(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = g.s(i);
    yA[i] = f.values[i] * std::exp(N * s);
    yB[i] = f.values[i] * std::exp(2.0 * s);
  }
  const auto A = quad::cumulative_from_left(yA, h);
  const auto B = quad::cumulative_from_right(yB, h);

  RadialFunction u;
  u.grid = g;
  u.values.resize(n);
  const double inv = 1.0 / (N - 2);
  for (std::size_t i = 0; i < n; ++i) {
    u.values[i] = inv * (std::exp((2 - N) * g.s(i)) * (tail_A + A[i]) + tail_B + B[i]);
  }
  tag_exponents(u);
  return u;
}

RadialFunction apply_green_potential(const RadialFunction& u, const PotentialSpec& potential,
                                     const MuParams& params) {
  RadialFunction f;
  f.grid = u.grid;
  f.values.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) f.values[i] = params.mu * potential.value(u.r(i)) * u.values[i];
  return newtonian_radial(f, params.dim);
}

IterationTrace picard_iterate(const PotentialSpec& potential, const MuParams& params, double k, const LogGrid& grid,
                              const PicardConfig& cfg) {
  if (!(k > 0.0)) throw Error(ErrorKind::PreconditionViolated, "picard_iterate needs k > 0");
  if (!std::isfinite(potential.infinity_limit())) {
    throw Error(ErrorKind::PreconditionViolated, "potential needs a finite limit at infinity");
  }
  const std::size_t n = grid.size();
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = 1.0 / phi_weight(params, grid.r(i));

  IterationTrace trace;
  RadialFunction w = RadialFunction::sample(grid, [&](double r) { return k * phi_mu(params, r); });
  tag_exponents(w);
  const double probe_cap = cfg.divergence_factor * k * std::abs(phi_mu(params, cfg.probe_r));
  trace.probe_values.push_back(w.at(cfg.probe_r));
  if (cfg.keep_iterates) trace.iterates.push_back(w);

  // μG[r^{-2} kΦ_μ] = kΦ_μ exactly, so each step is evaluated as
  // kΦ_μ + μG[V w - r^{-2} kΦ_μ]. The remainder is o(Φ_μ) at the origin and
  // its tail closure cannot leak into the mass k.
  std::vector<double> seed(n);
  for (std::size_t i = 0; i < n; ++i) seed[i] = k * phi_mu(params, grid.r(i));
  RadialFunction f;
  f.grid = grid;
  f.values.resize(n);

  for (int it = 0; it < cfg.max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = grid.r(i);
      f.values[i] = params.mu * (potential.deviation(r) / (r * r) * w.values[i] +
                                 (w.values[i] - seed[i]) / (r * r));
    }
    RadialFunction next = newtonian_radial(f, params.dim);
    for (std::size_t i = 0; i < n; ++i) next.values[i] += seed[i];
    tag_exponents(next);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = next.values[i] - w.values[i];
      res = std::max(res, std::abs(d) * std::abs(weight[i]));
      if (d < -1e-10 * std::abs(next.values[i])) trace.monotone = false;
    }
    trace.residuals.push_back(res);
    trace.probe_values.push_back(next.at(cfg.probe_r));
    if (cfg.keep_iterates) trace.iterates.push_back(next);
    w = std::move(next);

    if (res < cfg.tol_fp) {
      trace.verdict = PicardVerdict::FixedPoint;
      trace.last = std::move(w);
      return trace;
    }
    const std::size_t m = trace.residuals.size();
    if (m >= 6 && trace.probe_values.back() > probe_cap) {
      bool increasing = true;
      for (std::size_t j = m - 5; j < m; ++j) increasing = increasing && trace.residuals[j] > trace.residuals[j - 1];
      if (increasing) {
        trace.verdict = PicardVerdict::Diverging;
        trace.last = std::move(w);
        return trace;
      }
    }
  }
  trace.verdict = PicardVerdict::MaxIters;
  trace.last = std::move(w);
  return trace;
}

double fixed_point_residual(const RadialFunction& u, const PotentialSpec& potential, const MuParams& params) {
  const auto Tu = apply_green_potential(u, potential, params);
  double res = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    res = std::max(res, std::abs(u.values[i] - Tu.values[i]) / std::abs(phi_weight(params, u.r(i))));
  }
  return res;
}

std::string to_string(PicardVerdict v) {
  switch (v) {
    case PicardVerdict::FixedPoint:
      return "FixedPoint";
    case PicardVerdict::Diverging:
      return "Diverging";
    case PicardVerdict::MaxIters:
      return "MaxIters";
  }
  return "MaxIters";
}

}  // namespace hardy
