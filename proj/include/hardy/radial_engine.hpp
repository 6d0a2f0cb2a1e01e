#pragma once

// Radial reduction of L_{μV} u = 0. With w(s) = u(e^s) the equation becomes
//
//   w'' + (N-2) w' + q(s) w = 0,   q(s) = μ V(e^s) e^{2s},
//
// which is constant-coefficient for V = r^{-2}. Branches are seeded at r_min
// by Frobenius series and integrated outward; ball problems with singular
// origin data are solved by superposing the two branches.

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "hardy/closed_forms.hpp"
#include "hardy/error.hpp"
#include "hardy/potential.hpp"
#include "hardy/radial_function.hpp"

namespace hardy {

struct EngineConfig {
  double tol_ode = 1e-10;
  double tol_bvp = 1e-8;
  double tol_min = 1e-8;
  double divergence_factor = 1e12;  // cap = factor * k * Φ_μ(probe)
  int frobenius_order = 2;
  double extension_step = 0.05;  // s-spacing of sign-scan nodes beyond the grid
};

/// Default grid: r in [1e-6, 1e6] with 4001 nodes (s = 0 is a node).
LogGrid default_grid();

/// Default ball radii 10^{j/2}, j = 1..120.
std::vector<double> default_radius_schedule();

/// q(s) = μ V(e^s) e^{2s}.
double ode_coefficient(const PotentialSpec& potential, double mu, double s);

enum class Branch { Singular, Regular };

struct FrobeniusInit {
  double u = 0.0;
  double du_ds = 0.0;
  double trunc_error = 0.0;
  double exponent = 0.0;  // indicial root the series is built on
};

/// Truncated Frobenius series at r_min for the chosen branch.
FrobeniusInit frobenius_init(const PotentialSpec& potential, const MuParams& params, Branch branch,
                             double r_min, int order);

struct InitialValue {
  double u = 0.0;
  double du_ds = 0.0;
};

/// Integrates w'' + damping w' + coefficient(s) w = 0 from s0 and samples w and
/// w' at the sorted output points (all >= s0). Overflow is reported when |w|
/// exceeds 1e300.
struct OdeSamples {
  std::vector<double> w;
  std::vector<double> dw;
};
OdeSamples integrate_log_radial(double damping, const std::function<double(double)>& coefficient,
                                InitialValue init, double s0, std::span<const double> outputs, double tol,
                                std::optional<double> factor_exponent = std::nullopt);

/// Integrates from grid.s_min() with the given initial data and samples onto
/// the grid.
RadialFunction integrate(const PotentialSpec& potential, const MuParams& params, InitialValue init,
                         const LogGrid& grid, const EngineConfig& cfg = {});

struct BallSolution {
  double R = 0.0;
  double k = 0.0;
  RadialFunction u;  // extended by zero for r >= R
  double regular_multiplier = 0.0;
  bool positive = false;
  double boundary_residual = 0.0;
};

BallSolution solve_ball_bvp(const PotentialSpec& potential, const MuParams& params, double k, double R,
                            const LogGrid& grid, const EngineConfig& cfg = {});

struct Converged {
  RadialFunction u;
};
struct Diverged {
  std::vector<double> trace;
};
struct PositivityBreakdown {
  double R_fail = 0.0;
};
using MinimalVerdict = std::variant<Converged, Diverged, PositivityBreakdown>;

struct MinimalSolutionResult {
  MinimalVerdict verdict;
  std::vector<double> radii_used;
  std::vector<double> probe_trace;
  double probe_point = 0.0;
  double regular_multiplier = 0.0;  // multiplier of the last ball solve
  bool monotone = true;             // probe values nondecreasing in R

  bool converged() const { return std::holds_alternative<Converged>(verdict); }
  bool diverged() const { return std::holds_alternative<Diverged>(verdict); }
  bool breakdown() const { return std::holds_alternative<PositivityBreakdown>(verdict); }
};

/// Raised when the schedule ends before any verdict; carries the probe trace.
class ScheduleTooShortError : public Error {
 public:
  ScheduleTooShortError(std::vector<double> radii, std::vector<double> trace)
      : Error(ErrorKind::ScheduleTooShort, "R schedule exhausted without a verdict"),
        radii_(std::move(radii)),
        trace_(std::move(trace)) {}
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> radii_;
  std::vector<double> trace_;
};

MinimalSolutionResult minimal_solution(const PotentialSpec& potential, const MuParams& params, double k,
                                       std::span<const double> R_schedule, double probe_r,
                                       const LogGrid& grid, const EngineConfig& cfg = {});

}  // namespace hardy
