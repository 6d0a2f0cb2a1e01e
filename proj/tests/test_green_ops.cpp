#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hardy/error.hpp"
#include "hardy/green_ops.hpp"

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

LogGrid picard_grid() { return LogGrid::from_radii(1e-6, 1e12, 6001); }

// Smooth bump in s, negligible at both grid ends.
double bump_in_s(double r) {
  const double s = std::log(r);
  return std::exp(-s * s / 2.0);
}

// −Δu for radial u, from centered fourth-order differences in s.
double minus_laplacian(const RadialFunction& u, std::size_t i, int N) {
  const double h = u.grid.h();
  const auto& v = u.values;
  const double d1 = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * h);
  const double d2 = (-v[i - 2] + 16 * v[i - 1] - 30 * v[i] + 16 * v[i + 1] - v[i + 2]) / (12 * h * h);
  const double r = u.r(i);
  return -(d2 + (N - 2) * d1) / (r * r);
}

}  // namespace

TEST_CASE("newtonian potential of the unit-ball indicator") {
  const auto grid = default_grid();
  const auto d = make_dimension(3);
  const auto f = RadialFunction::sample(grid, [](double r) { return r <= 1.0 ? 1.0 : 0.0; });
  const auto u = newtonian_radial(f, d);
  CHECK(u.values[0] == Approx(0.5).epsilon(5e-3));
  CHECK(u.at(1e-3) == Approx(0.5 - 1e-6 / 6.0).epsilon(5e-3));
  // outside the ball u = |B_1| c_N r^{2-N}/... = 1/(3 r) for N = 3
  CHECK(u.at(100.0) == Approx(1.0 / 300.0).epsilon(5e-3));
}

TEST_CASE("newtonian potential of zero is zero") {
  const auto grid = default_grid();
  const auto f = RadialFunction::sample(grid, [](double) { return 0.0; });
  const auto u = newtonian_radial(f, make_dimension(4));
  CHECK(u.max_abs() == 0.0);
}

TEST_CASE("lemma identity through the newtonian potential") {
  for (auto [mu, N] : {std::pair{3.0 / 16.0, 3}, std::pair{0.5, 4}, std::pair{1.0, 5}}) {
    const auto p = make_mu_params(mu, N);
    const auto f = RadialFunction::sample(default_grid(), [&](double r) { return mu * phi_mu(p, r) / (r * r); });
    const auto u = newtonian_radial(f, p.dim);
    CHECK(u.at(1.0) == Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("tail checks") {
  const auto grid = default_grid();
  const auto d = make_dimension(3);
  auto slow = RadialFunction::sample(grid, [](double r) { return std::pow(r, -1.5); });
  CHECK(kind_of([&] { newtonian_radial(slow, d); }) == ErrorKind::TailDivergence);
  auto singular = RadialFunction::sample(grid, [](double r) { return std::pow(r, -3.5); });
  CHECK(kind_of([&] { newtonian_radial(singular, d); }) == ErrorKind::OriginDivergence);
  // an explicit tag wins over the samples
  auto tagged = RadialFunction::sample(grid, [](double r) { return std::pow(r, -2.5); });
  tagged.infinity_exponent = -1.0;
  CHECK(kind_of([&] { newtonian_radial(tagged, d); }) == ErrorKind::TailDivergence);
}

TEST_CASE("laplacian inversion") {
  // FD in s amplifies rounding by 1/(h r)^2, so stay where f is not tiny
  for (int N : {3, 4, 5}) {
    const auto grid = default_grid();
    const auto f = RadialFunction::sample(grid, bump_in_s);
    const auto u = newtonian_radial(f, make_dimension(N));
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < grid.size(); ++i) {
      const double r = grid.r(i);
      if (r < 0.1 || r > 10.0) continue;
      worst = std::max(worst, std::abs(minus_laplacian(u, i, N) - f.values[i]) / f.values[i]);
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("quadrature order under refinement") {
  // −Δu = e^{-r^2} in R^3 has u = sqrt(pi) erf(r) / (4 r)
  const auto d = make_dimension(3);
  double errs[3];
  int level = 0;
  for (std::size_t nodes : {501u, 1001u, 2001u}) {
    const auto grid = LogGrid::from_radii(1e-6, 1e6, nodes);
    const auto f = RadialFunction::sample(grid, [](double r) { return std::exp(-r * r); });
    const auto u = newtonian_radial(f, d);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = grid.r(i);
      const double exact = std::sqrt(std::numbers::pi) * std::erf(r) / (4.0 * r);
      worst = std::max(worst, std::abs(u.values[i] / exact - 1.0));
    }
    errs[level++] = worst;
  }
  CHECK(errs[2] < 1e-9);
  for (int j = 0; j + 1 < 3; ++j) CHECK((errs[j + 1] < 1e-12 || errs[j] / errs[j + 1] >= 4.0));
}

TEST_CASE("scaling equivariance") {
  std::mt19937 rng(7u);
  const auto grid = default_grid();
  const auto d = make_dimension(3);
  const auto f = RadialFunction::sample(grid, [](double r) { return std::pow(r, -2.75) / (1 + r); });
  const auto u = newtonian_radial(f, d);
  for (int t = 0; t < 5; ++t) {
    const double lam = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
    const auto v = newtonian_radial(lam * f, d);
    for (std::size_t i = 0; i < grid.size(); i += 97) CHECK(v.values[i] == Approx(lam * u.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("fixed point residuals for the inverse square") {
  const auto V = PotentialSpec::inverse_square();
  const auto grid = default_grid();
  const auto p = make_mu_params(3.0 / 16.0, 3);
  const auto phi = RadialFunction::sample(grid, [&](double r) { return phi_mu(p, r); });
  const auto gam = RadialFunction::sample(grid, [&](double r) { return gamma_mu(p, r); });
  CHECK(fixed_point_residual(phi, V, p) < 1e-8);
  CHECK(fixed_point_residual(gam, V, p) < 1e-8);
  CHECK(fixed_point_residual(2.0 * phi, V, p) < 2e-8);
}

TEST_CASE("picard for the inverse square stops after one step") {
  const auto p = make_mu_params(3.0 / 16.0, 3);
  const auto tr = picard_iterate(PotentialSpec::inverse_square(), p, 1.0, default_grid());
  CHECK(tr.verdict == PicardVerdict::FixedPoint);
  CHECK(tr.residuals.size() == 1);
  CHECK(tr.residuals[0] < 1e-10);
  CHECK(tr.probe_values.size() == tr.residuals.size() + 1);
}

TEST_CASE("picard agrees with the shooting solution") {
  const auto p = make_mu_params(3.0 / 16.0, 3);
  const auto V = PotentialSpec::v_rho(1.2);
  PicardConfig cfg;
  cfg.keep_iterates = true;
  const auto tr = picard_iterate(V, p, 1.0, picard_grid(), cfg);
  REQUIRE(tr.verdict == PicardVerdict::FixedPoint);
  CHECK(tr.monotone);
  CHECK(tr.iterates.size() == tr.residuals.size() + 1);
  for (std::size_t n = 1; n < tr.iterates.size(); ++n) {
    for (std::size_t i = 0; i < tr.iterates[n].size(); i += 50) {
      CHECK(tr.iterates[n].values[i] >= tr.iterates[n - 1].values[i] - 1e-10 * std::abs(tr.iterates[n].values[i]));
    }
  }
  const auto ms = minimal_solution(V, p, 1.0, default_radius_schedule(), 1.0, default_grid());
  REQUIRE(ms.converged());
  const auto& u = std::get<Converged>(ms.verdict).u;
  double worst = 0.0;
  for (double r = 1e-3; r <= 1e3 * (1 + 1e-12); r *= 1.2) worst = std::max(worst, std::abs(tr.last.at(r) / u.at(r) - 1));
  CHECK(worst < 1e-4);
}

TEST_CASE("picard diverges deep in the nonexistence regime") {
  const auto p = make_mu_params(3.0 / 16.0, 3);
  const auto tr = picard_iterate(PotentialSpec::v_rho(9.0), p, 1.0, picard_grid());
  CHECK(tr.verdict == PicardVerdict::Diverging);
  CHECK(kind_of([&] { picard_iterate(PotentialSpec::v_rho(9.0), p, 0.0, picard_grid()); }) ==
        ErrorKind::PreconditionViolated);
}
