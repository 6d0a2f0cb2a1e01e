#include "hardy/closed_forms.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hardy/error.hpp"

namespace hardy {

namespace {

void require_positive_radius(double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "r = " + std::to_string(r));
}

}  // namespace

DimensionParams make_dimension(int N) {
  if (N < 3) throw Error(ErrorKind::PreconditionViolated, "dimension N must be >= 3, got " + std::to_string(N));
  DimensionParams d;
  d.N = N;
  d.mu0 = 0.25 * (N - 2) * (N - 2);
  d.sphere_area = 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
  d.c_N = 1.0 / ((N - 2) * d.sphere_area);
  return d;
}

TauPair tau_pair(double mu, const DimensionParams& dim) {
  if (!(mu > 0.0) || mu > dim.mu0) {
    throw Error(ErrorKind::MuOutOfRange,
                "mu = " + std::to_string(mu) + " outside (0, " + std::to_string(dim.mu0) + "]");
  }
  TauPair t;
  const double center = -0.5 * (dim.N - 2);
  t.degenerate = (mu == dim.mu0);
  const double split = t.degenerate ? 0.0 : std::sqrt(dim.mu0 - mu);
  t.tau_minus = center - split;
  t.tau_plus = center + split;
  return t;
}

double c_mu(double mu, const DimensionParams& dim) {
  if (mu == dim.mu0) return dim.sphere_area;
  return 2.0 * std::sqrt(dim.mu0 - mu) * dim.sphere_area;
}

MuParams make_mu_params(double mu, int N) {
  MuParams p;
  p.dim = make_dimension(N);
  p.taus = tau_pair(mu, p.dim);
  p.mu = mu;
  p.c_mu = c_mu(mu, p.dim);
  return p;
}

double power_law(double tau, double r) {
  require_positive_radius(r);
  return std::exp(tau * std::log(r));
}

double phi_mu(const MuParams& params, double r) {
  require_positive_radius(r);
  const double log_r = std::log(r);
  const double base = std::exp(params.taus.tau_minus * log_r);
  return params.critical() ? -base * log_r : base;
}

double gamma_mu(const MuParams& params, double r) { return power_law(params.taus.tau_plus, r); }

double green_ball_closed_form(const MuParams& params, double R, double r) {
  if (params.critical()) {
    throw Error(ErrorKind::DegenerateMu, "closed-form ball kernel needs mu < mu0");
  }
  require_positive_radius(r);
  if (r > R) throw Error(ErrorKind::RadiusOutOfRange, "r must lie in (0, R]");
  const double tm = params.taus.tau_minus;
  const double tp = params.taus.tau_plus;
  const double log_r = std::log(r);
  const double log_R = std::log(R);
  // r^{τ-}(1 - (r/R)^{τ+ - τ-}) keeps the boundary zero exact.
  return std::exp(tm * log_r) * -std::expm1((tp - tm) * (log_r - log_R));
}

double v_rho(double rho, double r) {
  if (rho < 1.0) throw Error(ErrorKind::RhoBelowOne, "rho = " + std::to_string(rho));
  require_positive_radius(r);
  const double r2 = r * r;
  return (1.0 + rho * r2) / (r2 * (1.0 + r2));
}

double v_rho_excess(double rho, double r) {
  if (rho < 1.0) throw Error(ErrorKind::RhoBelowOne, "rho = " + std::to_string(rho));
  require_positive_radius(r);
  return (rho - 1.0) / (1.0 + r * r);
}

}  // namespace hardy
