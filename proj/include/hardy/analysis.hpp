#pragma once

// Exponent fitting, the quantitative bounds on minimal solutions, the
// super-solution and amplification certificates, and bisection for the
// existence threshold of the V_ρ family.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hardy/closed_forms.hpp"
#include "hardy/green_ops.hpp"
#include "hardy/potential.hpp"
#include "hardy/radial_engine.hpp"
#include "hardy/radial_function.hpp"

namespace hardy {

struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double log_slope_residual = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  bool log_correction = false;  // model r^τ |ln r| fitted better than r^τ
};

/// Least-squares slope of ln u against ln r over the nodes in [r_lo, r_hi].
/// With allow_log the model u = C r^τ |ln r| is also tried (window must not
/// straddle r = 1). Throws WindowTooSmall (< 8 nodes) and NonpositiveValues.
ExponentFit fit_exponent(const RadialFunction& u, double r_lo, double r_hi, bool allow_log);

struct LimitFit {
  double limit = 0.0;
  double slope = 0.0;
  double max_residual = 0.0;
};

/// lim_{r→0} u/Φ_μ from the five smallest nodes, fitting a + b r^{τ+ - τ-}
/// (a + b/(-ln r) at μ0).
LimitFit origin_ratio_limit(const RadialFunction& u, const MuParams& params);

/// u >= k Φ_μ (1 - 1e-6) at every node.
bool check_lower_bound(const RadialFunction& u, const MuParams& params, double k);

struct EnvelopeCheck {
  bool holds = false;
  double c1_est = 0.0;  // max over nodes r >= 1 of u / Φ_μ'
};

/// Throws MuPrimeOutOfRange unless μ < mu_prime < μ0.
EnvelopeCheck check_envelope(const RadialFunction& u, const MuParams& params, double k, double mu_prime);

struct IntegrabilityResult {
  bool finite = false;
  double value = 0.0;      // |S^{N-1}| ∫_0^1 (V - r^{-2}) r dr, partial sum when divergent
  int shells = 0;          // dyadic shells summed
  double decay_rate = 0.0; // fitted a in |I_j| ~ j^{-a} when the shells did not die out
};

/// Dyadic-shell quadrature of |S^{N-1}| ∫_0^1 (V(r) r^2 - 1) r^{-1} dr.
IntegrabilityResult local_integrability(const PotentialSpec& potential, const DimensionParams& dim);

/// r^2 L_{μV} u / |u| at r from fourth-order central differences in s = ln r.
double scaled_fd_residual(const std::function<double(double)>& u, const PotentialSpec& potential, double mu, int N,
                          double r, double h = 1e-3);

struct SupersolutionConstants {
  double k0 = 0.0;
  double k1 = 0.0;
  double r_prime = 0.0;
  double iota = 0.0;
  double iota_prime = 0.0;
  double alpha_prime = 0.0;
};

struct SupersolutionCertificate {
  double mu_prime = 0.0;
  double k_star = 0.0;
  SupersolutionConstants constants;
  double grid_min_residual = 0.0;
  int attempts = 0;
  bool valid = false;
};

/// ū = Φ_μ + k* Φ_μ' with the constants of the comparison argument; the
/// residual r^2 L_{μV} ū / |ū| is checked on `grid`. Throws
/// NoAdmissibleMuPrime unless α μ < mu_prime < μ0 and CertificateFailed when
/// the residual stays below -tol_cert after one retry with 2 k*.
SupersolutionCertificate supersolution_certificate(const PotentialSpec& potential, const MuParams& params,
                                                   double mu_prime, double tol_cert = 1e-7,
                                                   const LogGrid& grid = default_grid());

struct BarrierParams {
  double t = 0.0;
  double r_t = 0.0;  // admissible range is (0, r_t)
};
BarrierParams barrier_params(const MuParams& params, double c5);

/// w_t(r) = Φ_μ - t r^{-(N-2)/2}, or Φ_μ0 - t r^{-(N-2)/2}(-ln r)^{1/2} at μ0.
/// Throws RadiusOutOfRange outside r > 0 (μ < μ0) or 0 < r < 1 (μ0).
double barrier_wt(const MuParams& params, double c5, double r);

struct BarrierCheck {
  double max_scaled_residual = 0.0;  // max of r^2 L w_t / (|Φ_μ| + t r^{-(N-2)/2}...)
  int samples = 0;
  bool passes = false;
};

/// Samples `samples` log-uniform radii in (0, r_t) and checks L_{μV} w_t <= tol.
BarrierCheck check_barrier(const MuParams& params, double c5, const PotentialSpec& potential, double tol = 1e-8,
                           int samples = 1000);

struct CriticalCertificate {
  double varrho = 0.0;
  double varrho1 = 0.0;  // ϱ'
  double varrho2 = 0.0;  // ϱ''
  double r_prime = 0.0;
  double K1 = 0.0;
  double K2 = 0.0;
  double k1 = 0.0;  // k' (Γ_μ0 coefficient)
  double k2 = 0.0;  // k'' (Λ coefficient)
  double region_min[3] = {0.0, 0.0, 0.0};  // (0, r'], (2r', ∞), [r', 2r']
  double grid_min_residual = 0.0;
  bool valid = false;
};

/// C^2 cutoff: 1 on [0,1], 0 on [2,∞), quintic smoothstep between.
double eta0(double t);

/// ū = Φ_μ0 + k' Γ_μ0 + k'' (1 - η0(r/r')) Γ_{ϱ'' μ0}. Requires μ = μ0,
/// ϱ < 1 and V <= r^{-2} (PreconditionViolated); throws CertificateFailed
/// when the bounded search does not produce a nonnegative residual.
CriticalCertificate critical_supersolution(const MuParams& params_mu0, const PotentialSpec& potential, double varrho,
                                           double tol_cert = 1e-7, const LogGrid& grid = default_grid(),
                                           int search_budget = 60);

enum class NonexistenceVerdict { Nonexistence, Inconclusive };

struct NonexistenceCertificate {
  double beta = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  double sigma_lb = 0.0;
  double amplification = 0.0;
  NonexistenceVerdict verdict = NonexistenceVerdict::Inconclusive;
};

/// Throws EpsilonOutOfRange unless 0 < epsilon < (β-1)/(β+1).
NonexistenceCertificate nonexistence_certificate(const DimensionParams& dim, double mu, double beta, double epsilon);

/// Golden-section search for the ε maximizing the amplification.
NonexistenceCertificate optimized_nonexistence_certificate(const DimensionParams& dim, double mu, double beta);

enum class Classification { Existence, Nonexistence, Undetermined };

struct ClassifyConfig {
  EngineConfig engine;
  LogGrid grid = default_grid();
  std::vector<double> R_schedule = default_radius_schedule();
  double probe_r = 1.0;
  double k = 1.0;
  PicardConfig picard;
  LogGrid picard_grid = LogGrid::from_radii(1e-6, 1e12, 6001);
  double tol_cert = 1e-7;
};

struct RhoClassification {
  double rho = 0.0;
  Classification verdict = Classification::Undetermined;
  std::string evidence;  // short identifier of what decided it
  std::string detail;
  bool diverged = false;  // Undetermined with the shooting solver diverging
};

RhoClassification classify_rho(double rho, const MuParams& params, const ClassifyConfig& cfg = {});

struct ThresholdReport {
  double rho_lo = 0.0;
  double rho_hi = 0.0;
  std::optional<double> band_lo;  // undetermined band, if any
  std::optional<double> band_hi;
  std::vector<RhoClassification> evaluations;  // sorted by rho
  double bracket_width = 0.0;
  bool budget_exhausted = false;
};

/// Throws BracketInvalid when lo >= hi or the endpoints are misclassified.
ThresholdReport estimate_rho_star(const MuParams& params, double lo, double hi, double tol,
                                  const ClassifyConfig& cfg = {}, int max_evaluations = 200);

/// No Existence above any Nonexistence in a list sorted by rho.
bool classifications_monotone(const std::vector<RhoClassification>& evals);

std::string to_string(Classification c);
std::string to_string(NonexistenceVerdict v);

}  // namespace hardy
