#include "hardy/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "hardy/error.hpp"

namespace hardy {

namespace {

constexpr std::size_t kMinWindow = 8;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.max_residual = std::max(f.max_residual, std::abs(y[i] - (f.intercept + f.slope * x[i])));
  }
  return f;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// Fourth-order central first and second derivatives of g at s.
template <class G>
std::pair<double, double> fd_derivs(const G& g, double s, double h) {
  const double m2 = g(s - 2 * h), m1 = g(s - h), c = g(s), p1 = g(s + h), p2 = g(s + 2 * h);
  const double d1 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h);
  const double d2 = (-m2 + 16 * m1 - 30 * c + 16 * p1 - p2) / (12 * h * h);
  return {d1, d2};
}

}  // namespace

ExponentFit fit_exponent(const RadialFunction& u, double r_lo, double r_hi, bool allow_log) {
  std::vector<double> s, ly;
  const double slack = 1e-9;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u.r(i);
    if (r < r_lo * (1 - slack) || r > r_hi * (1 + slack)) continue;
    if (!(u.values[i] > 0.0)) {
      throw Error(ErrorKind::NonpositiveValues, "u(" + fmt(r) + ") = " + fmt(u.values[i]) + " in fit window");
    }
    s.push_back(u.grid.s(i));
    ly.push_back(std::log(u.values[i]));
  }
  if (s.size() < kMinWindow) {
    throw Error(ErrorKind::WindowTooSmall, std::to_string(s.size()) + " nodes in [" + fmt(r_lo) + ", " + fmt(r_hi) + "]");
  }
  const auto plain = fit_line(s, ly);
  ExponentFit out;
  out.exponent = plain.slope;
  out.intercept = plain.intercept;
  out.log_slope_residual = plain.max_residual;
  out.r_lo = std::exp(s.front());
  out.r_hi = std::exp(s.back());

  const bool straddles = s.front() <= 0.0 && s.back() >= 0.0;
  if (allow_log && !straddles) {
    std::vector<double> y2(ly.size());
    for (std::size_t i = 0; i < s.size(); ++i) y2[i] = ly[i] - std::log(std::abs(s[i]));
    const auto withlog = fit_line(s, y2);
    if (withlog.max_residual < plain.max_residual) {
      out.exponent = withlog.slope;
      out.intercept = withlog.intercept;
      out.log_slope_residual = withlog.max_residual;
      out.log_correction = true;
    }
  }
  return out;
}

LimitFit origin_ratio_limit(const RadialFunction& u, const MuParams& params) {
  constexpr std::size_t m = 5;
  if (u.size() < m) throw Error(ErrorKind::WindowTooSmall, "origin fit needs 5 nodes");
  std::vector<double> x(m), y(m);
  const double gap = params.taus.tau_plus - params.taus.tau_minus;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = u.r(i);
    x[i] = params.critical() ? 1.0 / -std::log(r) : std::pow(r, gap);
    y[i] = u.values[i] / phi_mu(params, r);
  }
  const auto f = fit_line(x, y);
  return {f.intercept, f.slope, f.max_residual};
}

bool check_lower_bound(const RadialFunction& u, const MuParams& params, double k) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double phi = phi_mu(params, u.r(i));
    if (u.values[i] < k * phi - 1e-6 * k * std::abs(phi)) return false;
  }
  return true;
}

EnvelopeCheck check_envelope(const RadialFunction& u, const MuParams& params, double k, double mu_prime) {
  if (!(mu_prime > params.mu && mu_prime < params.dim.mu0)) {
    throw Error(ErrorKind::MuPrimeOutOfRange, "mu' = " + fmt(mu_prime) + " not in (mu, mu0)");
  }
  const auto pp = make_mu_params(mu_prime, params.dim.N);
  EnvelopeCheck out;
  out.c1_est = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u.r(i);
    if (r < 1.0) continue;
    out.c1_est = std::max(out.c1_est, u.values[i] / phi_mu(pp, r));
  }
  out.holds = std::isfinite(out.c1_est) && check_lower_bound(u, params, k);
  return out;
}

IntegrabilityResult local_integrability(const PotentialSpec& potential, const DimensionParams& dim) {
  // In σ = ln r the integral is ∫_{-∞}^0 (V r^2 - 1)(e^σ) dσ; shell j covers
  // r ∈ [2^{-(j+1)}, 2^{-j}]. 2^{-991} is still a normal double.
  constexpr int kMaxShells = 990;
  const double ln2 = std::log(2.0);
  IntegrabilityResult out;
  std::vector<double> shells;
  double sum = 0.0;
  int quiet = 0;
  for (int j = 0; j < kMaxShells; ++j) {
    const double a = -(j + 1) * ln2, b = -j * ln2;
    const double I = boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double sg) { return potential.deviation(std::exp(sg)); }, a, b);
    shells.push_back(I);
    sum += I;
    if (I == 0.0 || std::abs(I) <= 1e-17 * std::abs(sum)) {
      if (++quiet >= 3) {
        out.finite = true;
        out.value = dim.sphere_area * sum;
        out.shells = j + 1;
        return out;
      }
    } else {
      quiet = 0;
    }
  }
  // Shells never died out: read off the decay rate of |I_j| from the
  // second half and decide summability.
  out.shells = kMaxShells;
  std::vector<double> lj, li;
  bool positive = true;
  for (int j = kMaxShells / 2; j < kMaxShells; ++j) {
    const double I = std::abs(shells[j]);
    if (!(I > 0.0)) {
      positive = false;
      break;
    }
    lj.push_back(std::log(static_cast<double>(j)));
    li.push_back(std::log(I));
  }
  if (!positive) {
    out.finite = true;
    out.value = dim.sphere_area * sum;
    return out;
  }
  const double a = -fit_line(lj, li).slope;
  out.decay_rate = a;
  if (a <= 1.05) {
    out.finite = false;
    out.value = dim.sphere_area * sum;
    return out;
  }
  const double J = kMaxShells - 1;
  out.finite = true;
  out.value = dim.sphere_area * (sum + shells.back() * J / (a - 1.0));
  return out;
}

double scaled_fd_residual(const std::function<double(double)>& u, const PotentialSpec& potential, double mu, int N,
                          double r, double h) {
  const double s = std::log(r);
  auto g = [&](double x) { return u(std::exp(x)); };
  const auto [d1, d2] = fd_derivs(g, s, h);
  const double w = u(r);
  return (-(d2 + (N - 2) * d1) - mu * potential.scaled(r) * w) / std::abs(w);
}

SupersolutionCertificate supersolution_certificate(const PotentialSpec& potential, const MuParams& params,
                                                   double mu_prime, double tol_cert, const LogGrid& grid) {
  const double mu = params.mu, mu0 = params.dim.mu0;
  const double alpha = potential.infinity_limit();
  if (!(mu_prime > alpha * mu && mu_prime < mu0)) {
    throw Error(ErrorKind::NoAdmissibleMuPrime,
                "mu' = " + fmt(mu_prime) + " not in (alpha mu, mu0) = (" + fmt(alpha * mu) + ", " + fmt(mu0) + ")");
  }
  const int N = params.dim.N;
  const double c0 = potential.c0();
  if (!std::isfinite(c0)) throw Error(ErrorKind::PreconditionViolated, "potential has no finite c0");
  const auto pp = make_mu_params(mu_prime, N);

  SupersolutionCertificate cert;
  cert.mu_prime = mu_prime;
  auto& K = cert.constants;
  K.r_prime = c0 > 0.0 ? std::min(std::sqrt((mu_prime - mu) / (2.0 * c0 * mu)), 1.0) : 1.0;
  // Φ_μ/Φ_μ' = r^{-Δ}; the comparability constants are the ratio's values at
  // the region boundary r'.
  const double delta = std::sqrt(mu0 - mu) - std::sqrt(mu0 - mu_prime);
  if (2.0 - delta < 0.0) throw Error(ErrorKind::CertificateFailed, "exponent gap exceeds 2");
  K.iota = std::pow(K.r_prime, 2.0 - delta);
  K.iota_prime = std::pow(K.r_prime, delta);
  K.alpha_prime = 0.5 * (alpha + mu_prime / mu);
  K.k0 = 2.0 * c0 * mu * K.iota / (mu_prime - mu);
  K.k1 = (K.alpha_prime - 1.0) * mu / ((mu_prime - K.alpha_prime * mu) * K.iota_prime);
  double k_star = std::max(K.k0, K.k1);

  for (int attempt = 1; attempt <= 2; ++attempt) {
    cert.attempts = attempt;
    cert.k_star = k_star;
    auto ubar = [&](double r) { return phi_mu(params, r) + k_star * phi_mu(pp, r); };
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      worst = std::min(worst, scaled_fd_residual(ubar, potential, mu, N, grid.r(i)));
    }
    cert.grid_min_residual = worst;
    if (worst >= -tol_cert) {
      cert.valid = true;
      return cert;
    }
    k_star *= 2.0;
  }
  throw Error(ErrorKind::CertificateFailed, "min scaled residual " + fmt(cert.grid_min_residual) + " with k* = " +
                                                fmt(cert.k_star));
}

BarrierParams barrier_params(const MuParams& params, double c5) {
  if (!(c5 >= 0.0)) throw Error(ErrorKind::PreconditionViolated, "c5 must be >= 0");
  BarrierParams b;
  if (params.critical()) {
    b.t = std::max(2.0, 8.0 * c5 * params.dim.mu0);
    b.r_t = 0.25;
  } else {
    const double split = std::sqrt(params.dim.mu0 - params.mu);
    b.t = std::max(1.0, c5 * params.mu / (params.dim.mu0 - params.mu));
    b.r_t = std::pow(b.t, -1.0 / split);
  }
  return b;
}

namespace {

// The subtracted barrier term t r^{-(N-2)/2} (times (-ln r)^{1/2} at μ0).
double barrier_correction(const MuParams& params, double t, double r) {
  const double base = t * power_law(-params.half_gap(), r);
  return params.critical() ? base * std::sqrt(-std::log(r)) : base;
}

}  // namespace

double barrier_wt(const MuParams& params, double c5, double r) {
  if (!(r > 0.0) || (params.critical() && !(r < 1.0))) {
    throw Error(ErrorKind::RadiusOutOfRange, "barrier undefined at r = " + fmt(r));
  }
  const auto b = barrier_params(params, c5);
  return phi_mu(params, r) - barrier_correction(params, b.t, r);
}

BarrierCheck check_barrier(const MuParams& params, double c5, const PotentialSpec& potential, double tol,
                           int samples) {
  const auto b = barrier_params(params, c5);
  const int N = params.dim.N;
  const double mu = params.mu, h = 1e-3;
  BarrierCheck out;
  out.samples = samples;
  out.max_scaled_residual = -std::numeric_limits<double>::infinity();
  const double s_hi = std::log(b.r_t) - 3 * h, s_lo = std::log(b.r_t) - std::log(1e10);
  for (int i = 0; i < samples; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / (samples - 1);
    const double r = std::exp(s);
    const double dev = potential.deviation(r);
    if (dev > 1e-15 || dev < -c5 * r * r * (1 + 1e-12) - 1e-15) {
      throw Error(ErrorKind::PreconditionViolated, "V outside [r^-2 - c5, r^-2] at r = " + fmt(r));
    }
    // L applied to each piece separately, so neither cancels against the other
    auto lap = [&](auto&& f) {
      const auto [d1, d2] = fd_derivs([&](double x) { return f(std::exp(x)); }, s, h);
      return -(d2 + (N - 2) * d1) - mu * potential.scaled(r) * f(r);
    };
    const double t = b.t;
    const double Lphi = lap([&](double x) { return phi_mu(params, x); });
    const double Lcorr = lap([&](double x) { return barrier_correction(params, t, x); });
    const double scale = std::abs(phi_mu(params, r)) + barrier_correction(params, t, r);
    out.max_scaled_residual = std::max(out.max_scaled_residual, (Lphi - Lcorr) / scale);
  }
  out.passes = out.max_scaled_residual <= tol;
  return out;
}

double eta0(double t) {
  const double x = std::clamp(t - 1.0, 0.0, 1.0);
  return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

namespace {

struct CriticalForm {
  MuParams p;
  double r_prime, gamma, varrho2, k1, k2;

  // r^2 L_{μ0 V} ū and ū, from closed-form derivatives.
  std::pair<double, double> scaled_apply(const PotentialSpec& V, double r) const {
    const int N = p.dim.N;
    const double mu0 = p.dim.mu0, q = V.scaled(r);
    const double x = std::clamp(r / r_prime - 1.0, 0.0, 1.0);
    const double psi = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    const double dpsi = 30.0 * x * x * (x - 1.0) * (x - 1.0) / r_prime;
    const double d2psi = 60.0 * x * (2.0 * x - 1.0) * (x - 1.0) / (r_prime * r_prime);
    const double phi = phi_mu(p, r), gam = gamma_mu(p, r), G = power_law(gamma, r);
    const double lam = psi * G;
    const double Llam = psi * (varrho2 * mu0 - mu0 * q) * G - 2.0 * r * dpsi * gamma * G -
                        G * (r * r * d2psi + (N - 1) * r * dpsi);
    const double Lu = mu0 * (1.0 - q) * (phi + k1 * gam) + k2 * Llam;
    return {Lu, phi + k1 * gam + k2 * lam};
  }
};

}  // namespace

CriticalCertificate critical_supersolution(const MuParams& params_mu0, const PotentialSpec& potential, double varrho,
                                           double tol_cert, const LogGrid& grid, int search_budget) {
  if (!params_mu0.critical()) throw Error(ErrorKind::PreconditionViolated, "critical certificate needs mu = mu0");
  if (!(varrho >= 0.0 && varrho < 1.0)) {
    throw Error(ErrorKind::PreconditionViolated, "varrho = " + fmt(varrho) + " must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (potential.scaled(grid.r(i)) > 1.0 + 1e-12) {
      throw Error(ErrorKind::PreconditionViolated, "V > r^-2 at r = " + fmt(grid.r(i)));
    }
  }
  const double mu0 = params_mu0.dim.mu0;
  int budget = search_budget;
  CriticalCertificate last;
  for (double frac : {0.5, 0.25, 0.75, 0.125, 0.875}) {
    CriticalCertificate c;
    c.varrho = varrho;
    c.varrho1 = varrho + frac * (1.0 - varrho);
    c.varrho2 = c.varrho1 + 0.5 * (1.0 - c.varrho1);
    // smallest r' >= 2 beyond which V r^2 <= ϱ' on the grid
    std::size_t first_ok = grid.size();
    for (std::size_t i = grid.size(); i-- > 0;) {
      if (potential.scaled(grid.r(i)) > c.varrho1) break;
      first_ok = i;
    }
    if (first_ok == grid.size()) continue;
    c.r_prime = std::max(2.0, grid.r(first_ok));
    if (2.0 * c.r_prime >= grid.r_max()) continue;
    const double a = std::sqrt(mu0 * (1.0 - c.varrho2));
    c.K1 = std::log(2.0 * c.r_prime) + 1.0;
    // sup_{r >= 2r'} (ln r - K1)_+ r^{-a} sits at ln r = K1 + 1/a
    c.K2 = std::exp(-a * c.K1 - 1.0) / (a * (c.varrho2 - c.varrho1));
    c.k2 = std::max(c.K1, c.K2);
    c.k1 = c.K1;

    CriticalForm form{params_mu0, c.r_prime, -params_mu0.half_gap() + a, c.varrho2, c.k1, c.k2};
    while (budget-- > 0) {
      form.k1 = c.k1;
      double mins[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
      bool positive = true;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid.r(i);
        const auto [Lu, u] = form.scaled_apply(potential, r);
        if (!(u > 0.0)) positive = false;
        const int region = r <= c.r_prime ? 0 : (r > 2.0 * c.r_prime ? 1 : 2);
        mins[region] = std::min(mins[region], Lu / std::abs(u));
      }
      std::copy(mins, mins + 3, c.region_min);
      c.grid_min_residual = std::min({mins[0], mins[1], mins[2]});
      if (positive && c.grid_min_residual >= -tol_cert) {
        c.valid = true;
        return c;
      }
      c.k1 *= 2.0;
    }
    last = c;
    if (budget <= 0) break;
  }
  throw Error(ErrorKind::CertificateFailed,
              "no admissible (varrho', varrho'', r', k', k'') within the search budget; last min residual " +
                  fmt(last.grid_min_residual));
}

NonexistenceCertificate nonexistence_certificate(const DimensionParams& dim, double mu, double beta, double epsilon) {
  const double eps_max = (beta - 1.0) / (beta + 1.0);
  if (!(epsilon > 0.0 && epsilon < eps_max)) {
    throw Error(ErrorKind::EpsilonOutOfRange,
                "epsilon = " + fmt(epsilon) + " not in (0, " + fmt(eps_max) + ") for beta = " + fmt(beta));
  }
  const auto taus = tau_pair(mu, dim);
  const double e = dim.N - 2 + taus.tau_minus;
  NonexistenceCertificate c;
  c.beta = beta;
  c.epsilon = epsilon;
  c.theta = std::min(std::pow((1.0 + beta) / 2.0, 1.0 / e), 1.0 - std::pow(2.0, 1.0 / (2.0 - dim.N)));
  const double te = std::pow(c.theta, e);
  c.sigma_lb = (beta - 2.0 * te) * (1.0 - epsilon);
  c.amplification = c.sigma_lb * te;
  c.verdict = (c.sigma_lb > 1.0 && c.amplification >= 1.0) ? NonexistenceVerdict::Nonexistence
                                                            : NonexistenceVerdict::Inconclusive;
  return c;
}

NonexistenceCertificate optimized_nonexistence_certificate(const DimensionParams& dim, double mu, double beta) {
  if (!(beta > 1.0)) throw Error(ErrorKind::EpsilonOutOfRange, "no admissible epsilon for beta <= 1");
  const double eps_max = (beta - 1.0) / (beta + 1.0);
  double a = 1e-12, b = eps_max * (1.0 - 1e-12);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto amp = [&](double e) { return nonexistence_certificate(dim, mu, beta, e).amplification; };
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = amp(x1), f2 = amp(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = amp(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = amp(x2);
    }
  }
  return nonexistence_certificate(dim, mu, beta, f1 >= f2 ? x1 : x2);
}

RhoClassification classify_rho(double rho, const MuParams& params, const ClassifyConfig& cfg) {
  const auto V = PotentialSpec::v_rho(rho);
  RhoClassification out;
  out.rho = rho;
  const double mu = params.mu, mu0 = params.dim.mu0;

  if (rho * mu < mu0) {
    const double mu_prime = 0.5 * (rho * mu + mu0);
    try {
      const auto cert = supersolution_certificate(V, params, mu_prime, cfg.tol_cert, cfg.grid);
      out.verdict = Classification::Existence;
      out.evidence = "supersolution_certificate";
      out.detail = "mu'=" + fmt(mu_prime) + " k*=" + fmt(cert.k_star);
      return out;
    } catch (const Error& e) {
      out.detail = e.what();
    }
  }
  if (rho > 1.0) {
    const auto nc = optimized_nonexistence_certificate(params.dim, mu, rho);
    if (nc.verdict == NonexistenceVerdict::Nonexistence) {
      out.verdict = Classification::Nonexistence;
      out.evidence = "nonexistence_certificate";
      out.detail = "epsilon=" + fmt(nc.epsilon) + " amplification=" + fmt(nc.amplification);
      return out;
    }
  }

  try {
    const auto ms = minimal_solution(V, params, cfg.k, cfg.R_schedule, cfg.probe_r, cfg.grid, cfg.engine);
    if (ms.converged()) {
      const auto& u = std::get<Converged>(ms.verdict).u;
      bool ok = check_lower_bound(u, params, cfg.k);
      if (ok && rho * mu < mu0) ok = check_envelope(u, params, cfg.k, 0.5 * (rho * mu + mu0)).holds;
      if (ok) {
        out.verdict = Classification::Existence;
        out.evidence = "minimal_solution";
        out.detail = "converged with lower bound";
      } else {
        out.detail = "minimal_solution converged but a bound check failed";
      }
      return out;
    }
    const std::string shoot = ms.diverged() ? "Diverged" : "PositivityBreakdown";
    std::string picard;
    try {
      const auto tr = picard_iterate(V, params, cfg.k, cfg.picard_grid, cfg.picard);
      picard = to_string(tr.verdict);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::TailDivergence) throw;
      picard = "TailDivergence";
    }
    if (picard == "Diverging" || picard == "TailDivergence") {
      out.verdict = Classification::Nonexistence;
      out.evidence = "minimal_solution+picard";
      out.detail = shoot + " / " + picard;
    } else {
      out.diverged = true;
      out.detail = shoot + " but picard " + picard;
    }
  } catch (const ScheduleTooShortError&) {
    out.detail = "R schedule exhausted";
  } catch (const Error& e) {
    out.detail = e.what();
  }
  return out;
}

bool classifications_monotone(const std::vector<RhoClassification>& evals) {
  bool seen_nonexistence = false;
  for (const auto& e : evals) {
    if (e.verdict == Classification::Nonexistence) seen_nonexistence = true;
    if (e.verdict == Classification::Existence && seen_nonexistence) return false;
  }
  return true;
}

ThresholdReport estimate_rho_star(const MuParams& params, double lo, double hi, double tol, const ClassifyConfig& cfg,
                                  int max_evaluations) {
  if (!(lo < hi)) throw Error(ErrorKind::BracketInvalid, "need lo < hi, got [" + fmt(lo) + ", " + fmt(hi) + "]");
  if (!(tol > 0.0)) throw Error(ErrorKind::PreconditionViolated, "tol must be > 0");
  ThresholdReport rep;
  auto eval = [&](double rho) {
    auto c = classify_rho(rho, params, cfg);
    rep.evaluations.push_back(c);
    return c;
  };
  const auto clo = eval(lo);
  if (clo.verdict != Classification::Existence) {
    throw Error(ErrorKind::BracketInvalid, "lo = " + fmt(lo) + " classified " + to_string(clo.verdict));
  }
  const auto chi = eval(hi);
  if (chi.verdict != Classification::Nonexistence) {
    throw Error(ErrorKind::BracketInvalid, "hi = " + fmt(hi) + " classified " + to_string(chi.verdict));
  }
  double E = lo, Nn = hi;
  std::optional<double> band_lo, band_hi;
  bool band_diverged = false;
  int used = 2;
  auto budget_left = [&] {
    if (used < max_evaluations) return true;
    rep.budget_exhausted = true;
    return false;
  };

  // lower gap: [E, band_lo or Nn]
  auto bisect_lower = [&] {
    while ((band_lo ? *band_lo : Nn) - E > tol && budget_left()) {
      const double mid = 0.5 * (E + (band_lo ? *band_lo : Nn));
      const auto c = eval(mid);
      ++used;
      if (c.verdict == Classification::Existence) {
        E = mid;
      } else if (c.verdict == Classification::Nonexistence) {
        Nn = mid;
        band_lo.reset();
        band_hi.reset();
      } else {
        if (!band_lo) {
          band_hi = mid;
          band_diverged = c.diverged;
        }
        band_lo = mid;
      }
    }
  };
  bisect_lower();
  // upper gap only while the band's top came with solver divergence
  while (band_hi && band_diverged && Nn - *band_hi > tol && budget_left()) {
    const double mid = 0.5 * (*band_hi + Nn);
    const auto c = eval(mid);
    ++used;
    if (c.verdict == Classification::Nonexistence) {
      Nn = mid;
    } else if (c.verdict == Classification::Undetermined) {
      band_hi = mid;
      band_diverged = c.diverged;
    } else {
      E = mid;
      band_lo.reset();
      band_hi.reset();
      bisect_lower();
    }
  }
  rep.rho_lo = E;
  rep.rho_hi = Nn;
  rep.band_lo = band_lo;
  rep.band_hi = band_hi;
  rep.bracket_width = Nn - E;
  std::stable_sort(rep.evaluations.begin(), rep.evaluations.end(),
                   [](const RhoClassification& a, const RhoClassification& b) { return a.rho < b.rho; });
  return rep;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Existence:
      return "Existence";
    case Classification::Nonexistence:
      return "Nonexistence";
    case Classification::Undetermined:
      return "Undetermined";
  }
  return "Undetermined";
}

std::string to_string(NonexistenceVerdict v) {
  return v == NonexistenceVerdict::Nonexistence ? "Nonexistence" : "Inconclusive";
}

}  // namespace hardy
