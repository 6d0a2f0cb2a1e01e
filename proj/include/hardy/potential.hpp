#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hardy {

struct ExactInverseSquare {};

struct Vrho {
  double rho = 1.0;
};

// A user potential given through its scaled form r -> V(r) r^2, which stays
// bounded at both ends for inverse-square-type potentials.
struct CustomPotential {
  std::function<double(double)> scaled;
  double holder_exponent = 1.0;
  // Coefficients d_i of V(r) r^2 - 1 = sum_{i>=1} d_i r^{2i} near the origin,
  // when the deviation is analytic. Empty means only the leading Frobenius
  // term is available.
  std::vector<double> deviation_series;
  std::string name = "custom";
};

using PotentialKind = std::variant<ExactInverseSquare, Vrho, CustomPotential>;

/// A radial potential V(r) > 0 with the metadata the certificates consume.
class PotentialSpec {
 public:
  static PotentialSpec inverse_square();
  /// Throws RhoBelowOne for rho < 1.
  static PotentialSpec v_rho(double rho);
  static PotentialSpec custom(CustomPotential potential, double c0, double origin_limit,
                              double infinity_limit);
  /// Wraps a plain evaluator r -> V(r).
  static PotentialSpec custom_from_potential(std::function<double(double)> V, double holder_exponent,
                                             double c0, double origin_limit, double infinity_limit,
                                             std::string name);

  // r^{-2} (ϱ + (1-ϱ)/(1+r^2)): below the inverse square, coupling 1 at the
  // origin and ϱ at infinity.
  static PotentialSpec damped_inverse_square(double varrho);
  // r^{-2} (1 + 1/(1+|ln r|)): violates the local integrability condition.
  static PotentialSpec log_perturbed();
  // r^{-2} (1 - c5 r^2/(1+r^2+|ln r|)): within r^{-2}-c5 <= V <= r^{-2}.
  static PotentialSpec subcritical_perturbed(double c5);

  double value(double r) const;      // V(r)
  double scaled(double r) const;     // V(r) r^2
  double deviation(double r) const;  // V(r) r^2 - 1

  const PotentialKind& kind() const { return kind_; }
  std::string name() const;
  bool is_inverse_square() const { return std::holds_alternative<ExactInverseSquare>(kind_); }
  std::optional<double> rho() const;
  // Series coefficients d_i of the deviation, if analytic at the origin.
  std::optional<std::vector<double>> deviation_series(int terms) const;
  double holder_exponent() const;

  double c0() const { return c0_; }
  double origin_limit() const { return origin_limit_; }
  double infinity_limit() const { return infinity_limit_; }

 private:
  PotentialSpec(PotentialKind kind, double c0, double origin_limit, double infinity_limit)
      : kind_(std::move(kind)), c0_(c0), origin_limit_(origin_limit), infinity_limit_(infinity_limit) {}

  PotentialKind kind_;
  double c0_ = 0.0;
  double origin_limit_ = 1.0;
  double infinity_limit_ = 1.0;
};

}  // namespace hardy
