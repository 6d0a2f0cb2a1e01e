#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hardy/analysis.hpp"
#include "hardy/error.hpp"

using namespace hardy;
using doctest::Approx;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::IoError;
}

const MuParams& p316() {
  static const MuParams p = make_mu_params(3.0 / 16.0, 3);
  return p;
}

RadialFunction minimal_vrho(double rho, double k = 1.0) {
  const auto ms = minimal_solution(PotentialSpec::v_rho(rho), p316(), k, default_radius_schedule(), 1.0, default_grid());
  REQUIRE(ms.converged());
  return std::get<Converged>(ms.verdict).u;
}

}  // namespace

TEST_CASE("exponent fit on model solutions") {
  const auto grid = default_grid();
  const auto phi = RadialFunction::sample(grid, [](double r) { return phi_mu(p316(), r); });
  const auto f = fit_exponent(phi, 1e-6, 1e-4, false);
  CHECK(f.exponent == Approx(-0.75).epsilon(1e-12));
  CHECK(f.log_slope_residual < 1e-10);
  CHECK_FALSE(fit_exponent(phi, 1e-6, 1e-4, true).log_correction);

  const auto pc = make_mu_params(0.25, 3);
  const auto phic = RadialFunction::sample(grid, [&](double r) { return phi_mu(pc, r); });
  const auto fc = fit_exponent(phic, 1e-6, 1e-4, true);
  CHECK(fc.log_correction);
  CHECK(fc.exponent == Approx(-0.5).epsilon(1e-10));

  CHECK(kind_of([&] { fit_exponent(phi, 1.0, 1.001, false); }) == ErrorKind::WindowTooSmall);
  const auto neg = (-1.0) * phi;
  CHECK(kind_of([&] { fit_exponent(neg, 1e-6, 1e-4, false); }) == ErrorKind::NonpositiveValues);
}

TEST_CASE("exponent fit consistency on random couplings") {
  std::mt19937 rng(31u);
  const auto grid = default_grid();
  for (int t = 0; t < 20; ++t) {
    const int N = 3 + t % 3;
    const double mu0 = (N - 2) * (N - 2) / 4.0;
    const double mu = std::uniform_real_distribution<double>(0.01, 0.99)(rng) * mu0;
    const auto p = make_mu_params(mu, N);
    const auto phi = RadialFunction::sample(grid, [&](double r) { return phi_mu(p, r); });
    const auto gam = RadialFunction::sample(grid, [&](double r) { return gamma_mu(p, r); });
    CHECK(std::abs(fit_exponent(phi, 1e-3, 1e3, false).exponent - p.taus.tau_minus) < 1e-8);
    CHECK(std::abs(fit_exponent(gam, 1e-3, 1e3, false).exponent - p.taus.tau_plus) < 1e-8);
  }
}

TEST_CASE("far-field exponent of the minimal solution sits between the envelopes") {
  const double rho = 1.2;
  const auto u = minimal_vrho(rho);
  const double e = fit_exponent(u, 1e3, 1e5, false).exponent;
  const double tm = p316().taus.tau_minus;
  CHECK(e >= tm - 1e-6);
  for (double mu_prime : {0.2255, 0.23, 0.24, 0.2499}) {
    CHECK(e <= make_mu_params(mu_prime, 3).taus.tau_minus + 1e-6);
  }
}

TEST_CASE("lower bound and envelope") {
  const auto grid = default_grid();
  const auto& p = p316();
  const auto phi = RadialFunction::sample(grid, [&](double r) { return phi_mu(p, r); });
  CHECK(check_lower_bound(phi, p, 1.0));
  const auto kern = RadialFunction::sample(grid, [&](double r) { return r < 1.0 ? green_ball_closed_form(p, 1.0, r) : 0.0; });
  CHECK_FALSE(check_lower_bound(kern, p, 1.0));

  const auto env = check_envelope(phi, p, 1.0, 0.23);
  CHECK(env.holds);
  CHECK(env.c1_est == Approx(1.0).epsilon(1e-14));
  const auto gam = RadialFunction::sample(grid, [&](double r) { return gamma_mu(p, r); });
  CHECK_FALSE(check_envelope(gam, p, 1.0, 0.23).holds);
  CHECK(kind_of([&] { check_envelope(phi, p, 1.0, 0.25); }) == ErrorKind::MuPrimeOutOfRange);
  CHECK(kind_of([&] { check_envelope(phi, p, 1.0, 0.1); }) == ErrorKind::MuPrimeOutOfRange);

  const auto u = minimal_vrho(1.2);
  CHECK(check_lower_bound(u, p, 1.0));
  const auto e2 = check_envelope(u, p, 1.0, 0.23);
  CHECK(e2.holds);
  CHECK(std::isfinite(e2.c1_est));
  CHECK(origin_ratio_limit(u, p).limit == Approx(1.0).epsilon(1e-4));
}

TEST_CASE("local integrability") {
  const auto d3 = make_dimension(3);
  const auto zero = local_integrability(PotentialSpec::inverse_square(), d3);
  CHECK(zero.finite);
  CHECK(zero.value == 0.0);
  for (double rho : {1.0, 2.0, 5.0}) {
    const auto res = local_integrability(PotentialSpec::v_rho(rho), d3);
    CHECK(res.finite);
    const double exact = 4.0 * std::numbers::pi * (rho - 1.0) * std::log(2.0) / 2.0;
    CHECK(std::abs(res.value - exact) <= 1e-8 * std::max(1.0, exact));
  }
  const auto lg = local_integrability(PotentialSpec::log_perturbed(), d3);
  CHECK_FALSE(lg.finite);
  CHECK(lg.decay_rate < 1.05);
}

TEST_CASE("supersolution certificate") {
  const auto& p = p316();
  const auto vr = PotentialSpec::v_rho(1.2);
  const auto cert = supersolution_certificate(vr, p, 0.23);
  CHECK(cert.valid);
  CHECK(std::isfinite(cert.k_star));
  CHECK(cert.k_star == std::max(cert.constants.k0, cert.constants.k1) * (cert.attempts == 1 ? 1.0 : 2.0));
  CHECK(cert.grid_min_residual >= -1e-7);

  // soundness on a refined grid, independent of the certificate's own pass
  const auto pp = make_mu_params(0.23, 3);
  const auto fine = default_grid().refined(2);
  double worst = 1e300;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    worst = std::min(worst, scaled_fd_residual([&](double r) { return phi_mu(p, r) + cert.k_star * phi_mu(pp, r); }, vr,
                                               p.mu, 3, fine.r(i), 5e-4));
  }
  CHECK(worst >= -2e-7);

  const auto inv = supersolution_certificate(PotentialSpec::inverse_square(), p, 0.23);
  CHECK(inv.valid);
  CHECK(inv.constants.k0 == 0.0);
  CHECK(std::isfinite(inv.constants.k1));

  CHECK(kind_of([&] { supersolution_certificate(vr, p, 1.2 * p.mu); }) == ErrorKind::NoAdmissibleMuPrime);
  CHECK(kind_of([&] { supersolution_certificate(vr, p, 0.25); }) == ErrorKind::NoAdmissibleMuPrime);
}

TEST_CASE("certificate near the coupling limit") {
  const auto& p = p316();
  const double rho = 4.0 / 3.0 - 1e-10;
  const auto cert = supersolution_certificate(PotentialSpec::v_rho(rho), p, 0.5 * (rho * p.mu + 0.25));
  CHECK(cert.valid);
}

TEST_CASE("barrier") {
  const auto& p = p316();
  CHECK(barrier_params(p, 0.0).t == 1.0);
  for (double r : {0.1, 0.5, 2.0}) CHECK(barrier_wt(p, 0.0, r) == Approx(std::pow(r, -0.75) - std::pow(r, -0.5)));
  CHECK(barrier_wt(p, 0.0, 0.5) > 0.0);
  CHECK(barrier_wt(p, 0.0, 2.0) < 0.0);
  const auto pc = make_mu_params(0.25, 3);
  CHECK(barrier_wt(pc, 0.0, std::exp(-1.0)) == Approx(-std::exp(0.5)).epsilon(1e-14));
  CHECK(kind_of([&] { barrier_wt(pc, 0.0, 1.5); }) == ErrorKind::RadiusOutOfRange);
  CHECK(kind_of([&] { barrier_wt(p, 0.0, 0.0); }) == ErrorKind::RadiusOutOfRange);

  for (double c5 : {0.0, 0.5, 3.0}) {
    const auto V = c5 > 0 ? PotentialSpec::subcritical_perturbed(c5) : PotentialSpec::inverse_square();
    const auto chk = check_barrier(p, c5, V);
    CHECK(chk.samples == 1000);
    CHECK(chk.passes);
    const auto chkc = check_barrier(pc, c5, V);
    CHECK(chkc.passes);
  }
  CHECK(kind_of([&] { check_barrier(p, 0.1, PotentialSpec::subcritical_perturbed(0.5)); }) ==
        ErrorKind::PreconditionViolated);
}

TEST_CASE("cutoff") {
  CHECK(eta0(0.5) == 1.0);
  CHECK(eta0(1.0) == 1.0);
  CHECK(eta0(2.0) == 0.0);
  CHECK(eta0(7.0) == 0.0);
  CHECK(eta0(1.5) == Approx(0.5));
  double prev = 1.0;
  for (double t = 1.0; t <= 2.0; t += 0.01) {
    CHECK(eta0(t) <= prev + 1e-15);
    prev = eta0(t);
  }
}

TEST_CASE("critical certificate") {
  const auto pc = make_mu_params(0.25, 3);
  const auto cert = critical_supersolution(pc, PotentialSpec::damped_inverse_square(0.5), 0.5);
  CHECK(cert.valid);
  CHECK(cert.varrho1 > 0.5);
  CHECK(cert.varrho2 > cert.varrho1);
  CHECK(cert.varrho2 < 1.0);
  CHECK(cert.r_prime >= 2.0);
  CHECK(cert.k1 >= cert.K1);
  CHECK(cert.k2 >= cert.K2);
  for (double m : cert.region_min) CHECK(m >= -1e-7);
  // region 1 needs no search: both terms carry nonnegative coefficients there
  CHECK(cert.region_min[0] >= 0.0);

  CHECK(kind_of([&] { critical_supersolution(pc, PotentialSpec::inverse_square(), 1.0); }) ==
        ErrorKind::PreconditionViolated);
  CHECK(kind_of([&] { critical_supersolution(p316(), PotentialSpec::damped_inverse_square(0.5), 0.5); }) ==
        ErrorKind::PreconditionViolated);
  CHECK(kind_of([&] { critical_supersolution(pc, PotentialSpec::v_rho(1.2), 0.5); }) ==
        ErrorKind::PreconditionViolated);
}

TEST_CASE("nonexistence certificate") {
  const auto d3 = make_dimension(3);
  const auto c = nonexistence_certificate(d3, 3.0 / 16.0, 9.0, 0.1);
  CHECK(c.theta == 0.5);
  const double q = std::sqrt(std::sqrt(0.5));
  CHECK(c.sigma_lb == Approx((9.0 - 2.0 * q) * 0.9).epsilon(1e-14));
  CHECK(c.sigma_lb == Approx(6.586).epsilon(1e-3));
  CHECK(c.amplification == Approx(5.538).epsilon(1e-3));
  CHECK(c.verdict == NonexistenceVerdict::Nonexistence);

  const auto weak = optimized_nonexistence_certificate(d3, 3.0 / 16.0, 1.01);
  CHECK(weak.sigma_lb <= 1.0);
  CHECK(weak.verdict == NonexistenceVerdict::Inconclusive);

  // admissibility is the open interval
  CHECK(kind_of([&] { nonexistence_certificate(d3, 3.0 / 16.0, 9.0, 0.0); }) == ErrorKind::EpsilonOutOfRange);
  CHECK(kind_of([&] { nonexistence_certificate(d3, 3.0 / 16.0, 9.0, 0.8); }) == ErrorKind::EpsilonOutOfRange);
  CHECK(kind_of([&] { nonexistence_certificate(d3, 3.0 / 16.0, 9.0, -0.1); }) == ErrorKind::EpsilonOutOfRange);
  CHECK(nonexistence_certificate(d3, 3.0 / 16.0, 9.0, 0.8 - 1e-12).epsilon > 0.0);
}

TEST_CASE("nonexistence verdict is monotone in beta") {
  for (int N : {3, 4, 5}) {
    const auto d = make_dimension(N);
    const double mu = 0.75 * d.mu0;
    bool fired = false;
    for (double beta = 1.01; beta <= 50.0; beta *= 1.05) {
      const auto c = optimized_nonexistence_certificate(d, mu, beta);
      if (fired) CHECK(c.verdict == NonexistenceVerdict::Nonexistence);
      fired = fired || c.verdict == NonexistenceVerdict::Nonexistence;
    }
    CHECK(fired);
  }
}

TEST_CASE("nonexistence certificate against the shooting solver") {
  // logged rather than asserted: a finite schedule proves nothing
  const auto& p = p316();
  for (double beta : {3.0, 5.0, 9.0, 25.0, 225.0}) {
    const auto c = optimized_nonexistence_certificate(p.dim, p.mu, beta);
    if (c.verdict != NonexistenceVerdict::Nonexistence) continue;
    try {
      const auto ms = minimal_solution(PotentialSpec::v_rho(beta), p, 1.0, default_radius_schedule(), 1.0, default_grid());
      MESSAGE("beta=" << beta << " converged=" << ms.converged());
      CHECK_FALSE(ms.converged());
    } catch (const Error& e) {
      MESSAGE("beta=" << beta << " " << e.what());
    }
  }
}

TEST_CASE("classification of the V_rho family") {
  const auto& p = p316();
  CHECK(classify_rho(1.0, p).verdict == Classification::Existence);
  CHECK(classify_rho(1.2, p).verdict == Classification::Existence);
  const auto far = classify_rho(9.0, p);
  CHECK(far.verdict == Classification::Nonexistence);
  CHECK(far.evidence == "nonexistence_certificate");
  const auto mid = classify_rho(2.0, p);
  CHECK(mid.verdict != Classification::Existence);
  MESSAGE("rho=2: " << to_string(mid.verdict) << " via " << mid.evidence << " " << mid.detail);
  CHECK(kind_of([&] { classify_rho(0.5, p); }) == ErrorKind::RhoBelowOne);
}

TEST_CASE("threshold bracketing") {
  const auto& p = p316();
  CHECK(kind_of([&] { estimate_rho_star(p, 2.0, 2.0, 1e-3); }) == ErrorKind::BracketInvalid);
  CHECK(kind_of([&] { estimate_rho_star(p, 9.0, 1.2, 1e-3); }) == ErrorKind::BracketInvalid);
  CHECK(kind_of([&] { estimate_rho_star(p, 9.0, 10.0, 1e-3); }) == ErrorKind::BracketInvalid);

  const auto rep = estimate_rho_star(p, 1.0, 9.0, 1e-10);
  CHECK(rep.rho_lo >= 4.0 / 3.0 - 1e-9);
  CHECK(rep.rho_lo < rep.rho_hi);
  CHECK(rep.bracket_width == rep.rho_hi - rep.rho_lo);
  CHECK(classifications_monotone(rep.evaluations));
  for (std::size_t i = 1; i < rep.evaluations.size(); ++i) CHECK(rep.evaluations[i - 1].rho <= rep.evaluations[i].rho);
  MESSAGE("rho_lo=" << rep.rho_lo << " rho_hi=" << rep.rho_hi << " evals=" << rep.evaluations.size());
}
