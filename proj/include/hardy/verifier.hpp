#pragma once

// Weighted distributional identity ∫ u L*_{μV}ξ dμ = c_μ k ξ(0) checked by
// quadrature, with the test functions it needs.

#include <functional>
#include <string>

#include "hardy/closed_forms.hpp"
#include "hardy/potential.hpp"
#include "hardy/radial_function.hpp"

namespace hardy {

struct TestFunction {
  std::string id;
  double support_radius = 1.0;
  double xi_at_zero = 1.0;
  std::function<double(double)> value;
  std::function<double(double)> first;          // ξ'(r)
  std::function<double(double)> second;         // ξ''(r)
  std::function<double(double)> first_over_r;   // ξ'(r)/r, finite at 0
};

/// ξ(r) = (1 - (r/R)^2)^3 on [0, R], 0 beyond. Throws PreconditionViolated for R <= 0.
TestFunction bump(double R);

/// -ξ'' - (N-1)ξ'/r - 2τ+ ξ'/r - μ(V - r^{-2})ξ; the r -> 0 limit for r = 0.
double lstar_apply(const TestFunction& xi, const MuParams& params, const PotentialSpec& potential, double r);

struct MassReport {
  double integral_value = 0.0;
  double k_estimate = 0.0;
  double quadrature_error_estimate = 0.0;
  std::string test_function_id;
  bool sign_changing_input = false;
};

/// |S^{N-1}| ∫_0^{R_ξ} u L*_{μV}ξ r^{τ+ + N - 1} dr over u's grid; k = integral/(c_μ ξ(0)).
/// Throws SupportExceedsGrid and NegativeU (unless allow_sign_change).
MassReport distributional_mass(const RadialFunction& u, const PotentialSpec& potential, const MuParams& params,
                               const TestFunction& xi, bool allow_sign_change = false);

/// μ G[r^{-2} Φ_μ](1) on the default grid; exactly 1. Throws MuOutOfRange at μ0.
double lemma22_check(const MuParams& params);

}  // namespace hardy
