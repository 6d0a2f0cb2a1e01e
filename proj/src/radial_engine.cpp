#include "hardy/radial_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

namespace hardy {

namespace odeint = boost::numeric::odeint;

LogGrid default_grid() { return LogGrid::from_radii(1e-6, 1e6, 4001); }

std::vector<double> default_radius_schedule() {
  std::vector<double> radii;
  for (int j = 1; j <= 120; ++j) radii.push_back(std::pow(10.0, 0.5 * j));
  return radii;
}

double ode_coefficient(const PotentialSpec& potential, double mu, double s) {
  return mu * potential.scaled(std::exp(s));
}

namespace {

constexpr double kOverflow = 1e300;

struct OverflowSignal {
  double s;
};

// Integrates g'' + damping g' + c(s) g = 0 and reports (g, g') at outputs.
void integrate_factored(double damping, const std::function<double(double)>& c, double g0, double dg0,
                        double s0, std::span<const double> outputs, double tol, double tau,
                        std::vector<double>& g_out, std::vector<double>& dg_out) {
  using State = std::array<double, 2>;
  g_out.assign(outputs.size(), 0.0);
  dg_out.assign(outputs.size(), 0.0);
  if (outputs.empty()) return;

  std::vector<double> times;
  times.reserve(outputs.size() + 1);
  const bool prepend = outputs.front() > s0;
  if (prepend) times.push_back(s0);
  times.insert(times.end(), outputs.begin(), outputs.end());

  auto rhs = [&](const State& x, State& dxdt, double s) {
    dxdt[0] = x[1];
    dxdt[1] = -damping * x[1] - c(s) * x[0];
  };

  std::size_t index = 0;
  double last_valid = s0;
  auto observer = [&](const State& x, double s) {
    if (prepend && index == 0) {
      ++index;
      return;
    }
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || std::abs(x[0]) * std::exp(tau * s) > kOverflow) {
      throw OverflowSignal{last_valid};
    }
    const std::size_t k = index - (prepend ? 1 : 0);
    g_out[k] = x[0];
    dg_out[k] = x[1];
    last_valid = s;
    ++index;
  };

  State x{g0, dg0};
  auto stepper = odeint::make_controlled(tol * 1e-3, tol, odeint::runge_kutta_fehlberg78<State>());
  double dt0 = times.size() > 1 ? std::min(0.01, times[1] - times[0]) : 0.01;
  if (!(dt0 > 0.0)) dt0 = 1e-3;
  try {
    odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, observer);
  } catch (const OverflowSignal& sig) {
    throw Error(ErrorKind::Overflow, "|w| exceeded 1e300 after s = " + std::to_string(sig.s));
  } catch (const std::exception& e) {
    throw Error(ErrorKind::StepFailure, std::string("adaptive stepper gave up: ") + e.what());
  }
}

double pick_factor_exponent(const MuParams& params, InitialValue init) {
  if (params.critical()) return params.taus.tau_minus;
  if (init.u == 0.0) return params.taus.tau_plus;
  const double slope = init.du_ds / init.u;
  return std::abs(slope - params.taus.tau_minus) < std::abs(slope - params.taus.tau_plus)
             ? params.taus.tau_minus
             : params.taus.tau_plus;
}

// Integrates a branch of L_{μV} w = 0 in factored form w = e^{τ s} g.
OdeSamples integrate_branch(const PotentialSpec& potential, const MuParams& params, InitialValue init, double s0,
                            std::span<const double> outputs, double tol) {
  const double tau = pick_factor_exponent(params, init);
  const int N = params.dim.N;
  const double mu = params.mu;
  // τ is an indicial root, so μ + τ(τ+N-2) vanishes; only the deviation of
  // V r^2 from 1 drives g. Keeping the rounding residual would seed the
  // dominant mode and spoil the singular branch of the model case.
  const bool exact = potential.is_inverse_square();
  auto coeff = [&](double s) { return exact ? 0.0 : mu * potential.deviation(std::exp(s)); };

  const double e0 = std::exp(-tau * s0);
  const double g0 = init.u * e0;
  const double dg0 = (init.du_ds - tau * init.u) * e0;
  std::vector<double> g, dg;
  integrate_factored(2.0 * tau + N - 2, coeff, g0, dg0, s0, outputs, tol, tau, g, dg);

  OdeSamples out;
  out.w.resize(outputs.size());
  out.dw.resize(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double e = std::exp(tau * outputs[i]);
    out.w[i] = e * g[i];
    out.dw[i] = e * (dg[i] + tau * g[i]);
  }
  return out;
}

int usable_order(const PotentialSpec& potential, int requested) {
  if (requested <= 0) return 0;
  return potential.deviation_series(1).has_value() ? requested : 0;
}

// Sample points shared by both branches: grid nodes, sign-scan nodes beyond
// the grid, and any extra points (ball radii, probe).
struct SamplePlan {
  std::vector<double> s;
  std::vector<std::size_t> grid_index;  // grid node i -> s index (npos past end)
  std::vector<std::size_t> extra_index;
};

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

SamplePlan make_plan(const LogGrid& grid, double s_end, std::span<const double> extra, double ext_step) {
  std::vector<double> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.s(i) <= s_end + 1e-12) pts.push_back(grid.s(i));
  }
  for (double s = grid.s_max() + ext_step; s < s_end; s += ext_step) pts.push_back(s);
  for (double e : extra) pts.push_back(e);
  std::sort(pts.begin(), pts.end());
  SamplePlan plan;
  for (double p : pts) {
    if (plan.s.empty() || p - plan.s.back() > 1e-12 * std::max(1.0, std::abs(p))) plan.s.push_back(p);
  }
  auto locate = [&](double v) {
    auto it = std::lower_bound(plan.s.begin(), plan.s.end(), v - 1e-12 * std::max(1.0, std::abs(v)));
    return static_cast<std::size_t>(it - plan.s.begin());
  };
  plan.grid_index.assign(grid.size(), npos);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.s(i) <= s_end + 1e-12) plan.grid_index[i] = locate(grid.s(i));
  }
  for (double e : extra) plan.extra_index.push_back(locate(e));
  return plan;
}

struct BranchPair {
  SamplePlan plan;
  std::vector<double> sing;
  std::vector<double> reg;
};

BranchPair sample_branches(const PotentialSpec& potential, const MuParams& params, const LogGrid& grid,
                           double s_end, std::span<const double> extra, const EngineConfig& cfg) {
  BranchPair bp;
  bp.plan = make_plan(grid, s_end, extra, cfg.extension_step);
  const double r_min = grid.r_min();
  const int order = usable_order(potential, cfg.frobenius_order);
  const auto fs = frobenius_init(potential, params, Branch::Singular, r_min, order);
  const auto fr = frobenius_init(potential, params, Branch::Regular, r_min, order);
  bp.sing = integrate_branch(potential, params, {fs.u, fs.du_ds}, grid.s_min(), bp.plan.s, cfg.tol_ode).w;
  bp.reg = integrate_branch(potential, params, {fr.u, fr.du_ds}, grid.s_min(), bp.plan.s, cfg.tol_ode).w;
  return bp;
}

// |u_reg(R)| is compared with the branch size over the last unit of s
// before R. A global maximum would be dominated by the origin, where u_reg
// can exceed its far-field size by many decades without any zero.
bool regular_branch_vanishes(const BranchPair& bp, std::size_t iR) {
  const double s_R = bp.plan.s[iR];
  double scale = 0.0;
  for (std::size_t i = iR + 1; i-- > 0 && bp.plan.s[i] >= s_R - 1.0;) scale = std::max(scale, std::abs(bp.reg[i]));
  return std::abs(bp.reg[iR]) < 1e-14 * scale;
}

RadialFunction zero_function(const LogGrid& grid) {
  RadialFunction u;
  u.grid = grid;
  u.values.assign(grid.size(), 0.0);
  return u;
}

}  // namespace

FrobeniusInit frobenius_init(const PotentialSpec& potential, const MuParams& params, Branch branch, double r_min,
                             int order) {
  if (!(r_min > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "r_min = " + std::to_string(r_min));
  if (order < 0 || order > 2) throw Error(ErrorKind::PreconditionViolated, "series order must be 0, 1 or 2");
  for (double f : {1.0, 0.5, 0.1, 0.01}) {
    if (std::abs(potential.deviation(r_min * f)) > 0.5) {
      throw Error(ErrorKind::RminTooLarge, "|V r^2 - 1| > 0.5 near r_min = " + std::to_string(r_min));
    }
  }
  const auto series = potential.deviation_series(order + 1);
  if (order > 0 && !series) {
    throw Error(ErrorKind::SeriesNotApplicable,
                "potential '" + potential.name() + "' has no analytic deviation series; use order 0");
  }
  const int N = params.dim.N;
  const double mu = params.mu;
  const double s = std::log(r_min);
  const double r2 = r_min * r_min;

  FrobeniusInit out;
  if (branch == Branch::Singular && params.critical()) {
    // u = r^τ [ℓ + A r^2 (ℓ + 1)], ℓ = -ln r, A = -μ0 d1 / 4.
    const double tau = params.taus.tau_minus;
    const double ell = -s;
    const double A = (order >= 1 && series) ? -mu * (*series)[0] / 4.0 : 0.0;
    const double g = ell + A * r2 * (ell + 1.0);
    const double dg = -1.0 + A * r2 * (2.0 * ell + 1.0);
    const double e = std::exp(tau * s);
    out.exponent = tau;
    out.u = e * g;
    out.du_ds = e * (dg + tau * g);
    const double d1 = series ? std::abs((*series)[0]) : std::abs(potential.deviation(r_min)) / r2;
    out.trunc_error = order >= 1 ? std::pow(mu * d1 * r2, 2) : mu * d1 * r2 / 4.0 * (1.0 + 1.0 / ell);
    return out;
  }

  const double tau = branch == Branch::Singular ? params.taus.tau_minus : params.taus.tau_plus;
  std::vector<double> a{1.0};
  auto coefficient = [&](int j) -> std::optional<double> {
    const double D = (tau + 2 * j) * (tau + 2 * j + N - 2) + mu;
    double acc = 0.0;
    for (int i = 1; i <= j; ++i) acc += (*series)[static_cast<std::size_t>(i - 1)] * a[static_cast<std::size_t>(j - i)];
    if (acc == 0.0) return 0.0;
    if (std::abs(D) < 1e-10) return std::nullopt;  // resonant roots: log terms appear
    return -mu * acc / D;
  };
  for (int j = 1; j <= order; ++j) {
    const auto aj = coefficient(j);
    if (!aj) {
      throw Error(ErrorKind::SeriesNotApplicable, "indicial roots differ by an even integer at order " +
                                                      std::to_string(j));
    }
    a.push_back(*aj);
  }
  double g = 0.0, dg = 0.0, rp = 1.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    g += a[j] * rp;
    dg += 2.0 * static_cast<double>(j) * a[j] * rp;
    rp *= r2;
  }
  const double e = std::exp(tau * s);
  out.exponent = tau;
  out.u = e * g;
  out.du_ds = e * (dg + tau * g);
  if (series) {
    const auto next = coefficient(order + 1);
    out.trunc_error = next ? std::abs(*next) * rp / std::abs(g) : rp;
  } else {
    out.trunc_error = std::abs(potential.deviation(r_min));
  }
  return out;
}

OdeSamples integrate_log_radial(double damping, const std::function<double(double)>& coefficient, InitialValue init,
                                double s0, std::span<const double> outputs, double tol,
                                std::optional<double> factor_exponent) {
  const double tau = factor_exponent.value_or(0.0);
  auto c = [&](double s) { return coefficient(s) + tau * (tau + damping); };
  const double e0 = std::exp(-tau * s0);
  std::vector<double> g, dg;
  integrate_factored(2.0 * tau + damping, c, init.u * e0, (init.du_ds - tau * init.u) * e0, s0, outputs, tol, tau,
                     g, dg);
  OdeSamples out;
  out.w.resize(outputs.size());
  out.dw.resize(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double e = std::exp(tau * outputs[i]);
    out.w[i] = e * g[i];
    out.dw[i] = e * (dg[i] + tau * g[i]);
  }
  return out;
}

RadialFunction integrate(const PotentialSpec& potential, const MuParams& params, InitialValue init,
                         const LogGrid& grid, const EngineConfig& cfg) {
  const auto nodes = grid.nodes();
  auto samples = integrate_branch(potential, params, init, grid.s_min(), nodes, cfg.tol_ode);
  RadialFunction f;
  f.grid = grid;
  f.values = std::move(samples.w);
  return f;
}

BallSolution solve_ball_bvp(const PotentialSpec& potential, const MuParams& params, double k, double R,
                            const LogGrid& grid, const EngineConfig& cfg) {
  if (k < 0.0) throw Error(ErrorKind::PreconditionViolated, "k must be >= 0");
  if (!(R > grid.r_min())) throw Error(ErrorKind::RadiusOutOfRange, "R must exceed the grid floor");
  BallSolution sol;
  sol.R = R;
  sol.k = k;
  if (k == 0.0) {
    sol.u = zero_function(grid);
    return sol;
  }
  const double s_R = std::log(R);
  const std::array<double, 1> extra{s_R};
  const auto bp = sample_branches(potential, params, grid, s_R, extra, cfg);
  const std::size_t iR = bp.plan.extra_index[0];

  if (regular_branch_vanishes(bp, iR)) {
    throw Error(ErrorKind::RegularBranchVanishes, "regular branch vanishes at R = " + std::to_string(R));
  }
  const double c = -k * bp.sing[iR] / bp.reg[iR];
  sol.regular_multiplier = c;
  sol.boundary_residual = std::abs(k * bp.sing[iR] + c * bp.reg[iR]);

  sol.positive = true;
  for (std::size_t i = 0; i < iR; ++i) {
    if (bp.plan.s[i] >= s_R - 1e-12) break;
    if (!(k * bp.sing[i] + c * bp.reg[i] > 0.0)) {
      sol.positive = false;
      break;
    }
  }
  sol.u = zero_function(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t j = bp.plan.grid_index[i];
    if (j == npos || grid.s(i) >= s_R - 1e-12) continue;
    sol.u.values[i] = k * bp.sing[j] + c * bp.reg[j];
  }
  return sol;
}

MinimalSolutionResult minimal_solution(const PotentialSpec& potential, const MuParams& params, double k,
                                       std::span<const double> R_schedule, double probe_r, const LogGrid& grid,
                                       const EngineConfig& cfg) {
  if (R_schedule.empty()) throw Error(ErrorKind::PreconditionViolated, "empty R schedule");
  for (std::size_t i = 1; i < R_schedule.size(); ++i) {
    if (!(R_schedule[i] > R_schedule[i - 1])) {
      throw Error(ErrorKind::PreconditionViolated, "R schedule must be strictly increasing");
    }
  }
  if (!(probe_r < R_schedule.front()) || !(probe_r > grid.r_min())) {
    throw Error(ErrorKind::PreconditionViolated, "probe_r must lie in (r_min, R_schedule[0])");
  }
  if (k < 0.0) throw Error(ErrorKind::PreconditionViolated, "k must be >= 0");

  MinimalSolutionResult result;
  result.probe_point = probe_r;
  if (k == 0.0) {
    result.verdict = Converged{zero_function(grid)};
    return result;
  }

  std::vector<double> extra;
  extra.push_back(std::log(probe_r));
  for (double R : R_schedule) extra.push_back(std::log(R));
  const double s_end = std::log(R_schedule.back());
  const auto bp = sample_branches(potential, params, grid, s_end, extra, cfg);
  const std::size_t i_probe = bp.plan.extra_index[0];
  const double cap = cfg.divergence_factor * k * std::abs(phi_mu(params, probe_r));

  auto assemble = [&](double c) {
    RadialFunction u = zero_function(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::size_t j = bp.plan.grid_index[i];
      if (j != npos) u.values[i] = k * bp.sing[j] + c * bp.reg[j];
    }
    return u;
  };

  // sup over grid nodes of |dc reg| / |u|; infinite where u is not positive
  auto field_change = [&](double dc, double c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::size_t j = bp.plan.grid_index[i];
      if (j == npos) continue;
      const double u = k * bp.sing[j] + c * bp.reg[j];
      if (!(u > 0.0)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, std::abs(dc * bp.reg[j]) / u);
    }
    return worst;
  };

  int quiet_steps = 0;
  double prev_c = 0.0;
  for (std::size_t m = 0; m < R_schedule.size(); ++m) {
    const double R = R_schedule[m];
    const std::size_t iR = bp.plan.extra_index[m + 1];
    result.radii_used.push_back(R);

    if (regular_branch_vanishes(bp, iR)) {
      result.verdict = PositivityBreakdown{R};
      return result;
    }
    const double c = -k * bp.sing[iR] / bp.reg[iR];
    if (m > 0) prev_c = result.regular_multiplier;
    result.regular_multiplier = c;

    for (std::size_t i = 0; i < iR; ++i) {
      if (bp.plan.s[i] >= std::log(R) - 1e-12) break;
      if (!(k * bp.sing[i] + c * bp.reg[i] > 0.0)) {
        result.verdict = PositivityBreakdown{R};
        return result;
      }
    }

    const double probe = k * bp.sing[i_probe] + c * bp.reg[i_probe];
    if (!result.probe_trace.empty()) {
      const double prev = result.probe_trace.back();
      if (probe < prev - 1e-10 * std::abs(prev)) result.monotone = false;
    }
    result.probe_trace.push_back(probe);

    if (probe > cap) {
      result.verdict = Diverged{result.probe_trace};
      return result;
    }
    if (result.probe_trace.size() >= 2) {
      const double prev = result.probe_trace[result.probe_trace.size() - 2];
      double change = std::abs(probe - prev) / std::abs(probe);
      // the probe alone can settle while nodes near r_max still feel R
      if (change < cfg.tol_min) change = std::max(change, field_change(c - prev_c, c));
      quiet_steps = change < cfg.tol_min ? quiet_steps + 1 : 0;
      if (quiet_steps >= 2) {
        result.verdict = Converged{assemble(c)};
        return result;
      }
    }
  }
  throw ScheduleTooShortError(result.radii_used, result.probe_trace);
}

}  // namespace hardy
