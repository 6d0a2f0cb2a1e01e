#pragma once

// Exact formulas for the Hardy operator -Δ - μ|x|^{-2} on R^N \ {0}:
// indicial roots, the model singular/regular solutions Φ_μ and Γ_μ,
// normalization constants and the scaled Dirichlet ball kernel.

namespace hardy {

struct DimensionParams {
  int N = 3;
  double mu0 = 0.25;          // (N-2)^2 / 4, the Hardy-critical coupling
  double sphere_area = 0.0;   // |S^{N-1}|
  double c_N = 0.0;           // Newtonian normalization 1/((N-2)|S^{N-1}|)
};

/// Throws PreconditionViolated for N < 3.
DimensionParams make_dimension(int N);

struct TauPair {
  double tau_minus = 0.0;
  double tau_plus = 0.0;
  bool degenerate = false;  // μ == μ0 exactly
};

struct MuParams {
  double mu = 0.0;
  DimensionParams dim;
  TauPair taus;
  double c_mu = 0.0;

  bool critical() const { return taus.degenerate; }
  // (N-2)/2, the common center of both indicial roots.
  double half_gap() const { return 0.5 * (dim.N - 2); }
  // sqrt(μ0 - μ), half the distance between the roots.
  double root_split() const { return 0.5 * (taus.tau_plus - taus.tau_minus); }
};

/// Roots of τ(τ+N-2)+μ = 0. Throws MuOutOfRange unless 0 < mu <= μ0.
TauPair tau_pair(double mu, const DimensionParams& dim);

/// Throws MuOutOfRange unless 0 < mu <= μ0.
MuParams make_mu_params(double mu, int N);

// The two-branch constant of the weighted distributional identity:
// 2 sqrt(μ0-μ) |S^{N-1}| below the critical coupling, |S^{N-1}| at μ0.
double c_mu(double mu, const DimensionParams& dim);

/// r^{τ-} for μ < μ0; r^{-(N-2)/2}(-ln r) at μ0 (positive iff r < 1).
double phi_mu(const MuParams& params, double r);

/// r^{τ+}.
double gamma_mu(const MuParams& params, double r);

/// r^{tau} evaluated as exp(tau ln r). Throws NonpositiveRadius for r <= 0.
double power_law(double tau, double r);

/// Dirichlet ball kernel on B_R: r^{τ-} - R^{τ- - τ+} r^{τ+}.
/// Throws DegenerateMu at μ0 and RadiusOutOfRange unless 0 < r <= R.
double green_ball_closed_form(const MuParams& params, double R, double r);

/// V_ρ(r) = r^{-2} (1+ρr^2)/(1+r^2).
double v_rho(double rho, double r);

/// V_ρ(r) - r^{-2} = (ρ-1)/(1+r^2), without cancellation.
double v_rho_excess(double rho, double r);

}  // namespace hardy
