#include "hardy/verifier.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "hardy/error.hpp"
#include "hardy/green_ops.hpp"
#include "hardy/radial_engine.hpp"

namespace hardy {

TestFunction bump(double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::PreconditionViolated, "bump radius must be > 0");
  TestFunction t;
  char buf[64];
  std::snprintf(buf, sizeof buf, "bump(%.17g)", R);
  t.id = buf;
  t.support_radius = R;
  t.xi_at_zero = 1.0;
  t.value = [R](double r) {
    if (r >= R) return 0.0;
    const double q = 1.0 - (r / R) * (r / R);
    return q * q * q;
  };
  t.first_over_r = [R](double r) {
    if (r >= R) return 0.0;
    const double q = 1.0 - (r / R) * (r / R);
    return -6.0 * q * q / (R * R);
  };
  t.first = [f = t.first_over_r](double r) { return r * f(r); };
  t.second = [R](double r) {
    if (r >= R) return 0.0;
    const double x2 = (r / R) * (r / R);
    return -6.0 * (1.0 - x2) * (1.0 - 5.0 * x2) / (R * R);
  };
  return t;
}

double lstar_apply(const TestFunction& xi, const MuParams& params, const PotentialSpec& potential, double r) {
  if (r < 0.0) throw Error(ErrorKind::NonpositiveRadius, "r = " + std::to_string(r));
  const int N = params.dim.N;
  const double drift = (N - 1) + 2.0 * params.taus.tau_plus;
  double out = -xi.second(r) - drift * xi.first_over_r(r);
  // V - r^{-2} = deviation / r^2, which vanishes like r^0 or faster at 0
  if (r > 0.0) {
    const double dev = potential.deviation(r);
    if (dev != 0.0) out -= params.mu * dev / (r * r) * xi.value(r);
  } else if (!potential.is_inverse_square()) {
    const auto d = potential.deviation_series(1);
    if (!d) throw Error(ErrorKind::PreconditionViolated, "no limit of V - r^-2 at the origin");
    out -= params.mu * (*d)[0] * xi.value(0.0);
  }
  return out;
}

namespace {

double mass_integral(const RadialFunction& u, const PotentialSpec& potential, const MuParams& params,
                     const TestFunction& xi, int split) {
  static const std::array<double, 4> gx = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                           0.8611363115940526};
  static const std::array<double, 4> gw = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                           0.3478548451374538};
  const double weight_exp = params.taus.tau_plus + params.dim.N;
  auto integrand = [&](double s) {
    const double r = std::exp(s);
    return u.at_s(s) * lstar_apply(xi, params, potential, r) * std::exp(weight_exp * s);
  };
  const double s_end = std::log(xi.support_radius);
  const double h = u.grid.h() / split;
  double total = 0.0;
  const auto count = static_cast<long>(std::ceil((s_end - u.grid.s_min()) / h - 1e-9));
  for (long i = 0; i < count; ++i) {
    const double a = u.grid.s_min() + i * h;
    const double b = std::min(a + h, s_end);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int q = 0; q < 4; ++q) total += gw[q] * half * integrand(mid + half * gx[q]);
  }
  // below the grid u L*ξ r^{τ+ + N} ~ r^2, which integrates to half its end value
  total += 0.5 * integrand(u.grid.s_min());
  return params.dim.sphere_area * total;
}

}  // namespace

MassReport distributional_mass(const RadialFunction& u, const PotentialSpec& potential, const MuParams& params,
                               const TestFunction& xi, bool allow_sign_change) {
  if (xi.support_radius > u.grid.r_max() * (1 + 1e-12)) {
    throw Error(ErrorKind::SupportExceedsGrid,
                "support radius " + std::to_string(xi.support_radius) + " beyond grid end " +
                    std::to_string(u.grid.r_max()));
  }
  MassReport rep;
  rep.test_function_id = xi.id;
  for (std::size_t i = 0; i < u.size() && u.r(i) <= xi.support_radius; ++i) {
    if (u.values[i] < 0.0) rep.sign_changing_input = true;
  }
  if (rep.sign_changing_input && !allow_sign_change) {
    throw Error(ErrorKind::NegativeU, "u < 0 inside the support of " + xi.id);
  }
  const double coarse = mass_integral(u, potential, params, xi, 1);
  const double fine = mass_integral(u, potential, params, xi, 2);
  rep.integral_value = fine;
  rep.quadrature_error_estimate = std::abs(fine - coarse);
  rep.k_estimate = fine / (params.c_mu * xi.xi_at_zero);
  return rep;
}

double lemma22_check(const MuParams& params) {
  if (params.critical()) throw Error(ErrorKind::MuOutOfRange, "identity needs mu < mu0");
  if (!(params.mu > 0.0)) throw Error(ErrorKind::MuOutOfRange, "identity needs mu > 0");
  const auto grid = default_grid();
  auto f = RadialFunction::sample(grid, [&](double r) { return phi_mu(params, r) / (r * r); });
  f.origin_exponent = params.taus.tau_minus - 2.0;
  f.infinity_exponent = params.taus.tau_minus - 2.0;
  const auto u = newtonian_radial(f, params.dim);
  return params.mu * u.at(1.0);
}

}  // namespace hardy
