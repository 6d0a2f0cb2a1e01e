#include "hardy/potential.hpp"

#include <cmath>
#include <limits>

#include "hardy/error.hpp"

namespace hardy {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Coefficients of c r^2/(1+r^2) = c (r^2 - r^4 + r^6 - ...).
std::vector<double> alternating_series(double c, int terms) {
  std::vector<double> d(static_cast<std::size_t>(terms));
  double sign = 1.0;
  for (auto& di : d) {
    di = sign * c;
    sign = -sign;
  }
  return d;
}

}  // namespace

PotentialSpec PotentialSpec::inverse_square() { return PotentialSpec(ExactInverseSquare{}, 0.0, 1.0, 1.0); }

PotentialSpec PotentialSpec::v_rho(double rho) {
  if (!(rho >= 1.0)) throw Error(ErrorKind::RhoBelowOne, "rho = " + std::to_string(rho));
  return PotentialSpec(Vrho{rho}, rho - 1.0, 1.0, rho);
}

PotentialSpec PotentialSpec::custom(CustomPotential potential, double c0, double origin_limit,
                                    double infinity_limit) {
  if (!potential.scaled) throw Error(ErrorKind::PreconditionViolated, "custom potential needs an evaluator");
  return PotentialSpec(std::move(potential), c0, origin_limit, infinity_limit);
}

PotentialSpec PotentialSpec::custom_from_potential(std::function<double(double)> V, double holder_exponent,
                                                   double c0, double origin_limit, double infinity_limit,
                                                   std::string name) {
  CustomPotential p;
  p.scaled = [V = std::move(V)](double r) { return V(r) * r * r; };
  p.holder_exponent = holder_exponent;
  p.name = std::move(name);
  return custom(std::move(p), c0, origin_limit, infinity_limit);
}

PotentialSpec PotentialSpec::damped_inverse_square(double varrho) {
  CustomPotential p;
  p.scaled = [varrho](double r) { return varrho + (1.0 - varrho) / (1.0 + r * r); };
  p.holder_exponent = 1.0;
  p.deviation_series = alternating_series(-(1.0 - varrho), 8);
  p.name = "damped_inverse_square";
  return custom(std::move(p), std::abs(1.0 - varrho), 1.0, varrho);
}

PotentialSpec PotentialSpec::log_perturbed() {
  CustomPotential p;
  p.scaled = [](double r) { return 1.0 + 1.0 / (1.0 + std::abs(std::log(r))); };
  p.holder_exponent = 1.0;
  p.name = "log_perturbed";
  return custom(std::move(p), std::numeric_limits<double>::infinity(), 1.0, 1.0);
}

PotentialSpec PotentialSpec::subcritical_perturbed(double c5) {
  CustomPotential p;
  p.scaled = [c5](double r) {
    const double r2 = r * r;
    return 1.0 - c5 * r2 / (1.0 + r2 + std::abs(std::log(r)));
  };
  p.holder_exponent = 1.0;
  p.name = "subcritical_perturbed";
  return custom(std::move(p), c5, 1.0, 1.0 - c5);
}

double PotentialSpec::scaled(double r) const {
  return std::visit(overloaded{
                        [](const ExactInverseSquare&) { return 1.0; },
                        [r](const Vrho& v) {
                          const double r2 = r * r;
                          return (1.0 + v.rho * r2) / (1.0 + r2);
                        },
                        [r](const CustomPotential& c) { return c.scaled(r); },
                    },
                    kind_);
}

double PotentialSpec::deviation(double r) const {
  return std::visit(overloaded{
                        [](const ExactInverseSquare&) { return 0.0; },
                        [r](const Vrho& v) {
                          const double r2 = r * r;
                          return (v.rho - 1.0) * r2 / (1.0 + r2);
                        },
                        [r](const CustomPotential& c) { return c.scaled(r) - 1.0; },
                    },
                    kind_);
}

double PotentialSpec::value(double r) const {
  if (!(r > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "r = " + std::to_string(r));
  return scaled(r) / (r * r);
}

std::string PotentialSpec::name() const {
  return std::visit(overloaded{
                        [](const ExactInverseSquare&) { return std::string("inverse_square"); },
                        [](const Vrho&) { return std::string("vrho"); },
                        [](const CustomPotential& c) { return c.name; },
                    },
                    kind_);
}

std::optional<double> PotentialSpec::rho() const {
  if (const auto* v = std::get_if<Vrho>(&kind_)) return v->rho;
  if (is_inverse_square()) return 1.0;
  return std::nullopt;
}

std::optional<std::vector<double>> PotentialSpec::deviation_series(int terms) const {
  return std::visit(overloaded{
                        [terms](const ExactInverseSquare&) -> std::optional<std::vector<double>> {
                          return std::vector<double>(static_cast<std::size_t>(terms), 0.0);
                        },
                        [terms](const Vrho& v) -> std::optional<std::vector<double>> {
                          return alternating_series(v.rho - 1.0, terms);
                        },
                        [terms](const CustomPotential& c) -> std::optional<std::vector<double>> {
                          if (c.deviation_series.empty()) return std::nullopt;
                          std::vector<double> d(static_cast<std::size_t>(terms), 0.0);
                          for (std::size_t i = 0; i < d.size() && i < c.deviation_series.size(); ++i) {
                            d[i] = c.deviation_series[i];
                          }
                          return d;
                        },
                    },
                    kind_);
}

double PotentialSpec::holder_exponent() const {
  if (const auto* c = std::get_if<CustomPotential>(&kind_)) return c->holder_exponent;
  return 1.0;
}

}  // namespace hardy
