#pragma once

// Radial Newtonian potential on R^N and the Picard iteration
// w_n = μ G[V w_{n-1}] seeded with k Φ_μ.

#include <vector>

#include "hardy/closed_forms.hpp"
#include "hardy/potential.hpp"
#include "hardy/radial_engine.hpp"
#include "hardy/radial_function.hpp"

namespace hardy {

/// u(r) = (1/(N-2)) [ r^{2-N} ∫_0^r f s^{N-1} ds + ∫_r^∞ f s ds ] on f's grid.
/// Both end integrals are closed with power-law tails using f's exponent
/// tags, fitted from the end samples when absent. Throws OriginDivergence
/// (origin exponent <= -N) and TailDivergence (infinity exponent >= -2).
RadialFunction newtonian_radial(const RadialFunction& f, const DimensionParams& dim);

/// μ G[V u] sampled on u's grid.
RadialFunction apply_green_potential(const RadialFunction& u, const PotentialSpec& potential, const MuParams& params);

/// Φ_μ, or r^{-(N-2)/2}(1+|ln r|) at μ0 where Φ_μ changes sign.
double phi_weight(const MuParams& params, double r);

enum class PicardVerdict { FixedPoint, Diverging, MaxIters };

struct PicardConfig {
  double tol_fp = 1e-7;
  int max_iters = 20000;
  double divergence_factor = 1e12;  // cap = factor * k * Φ_μ(probe)
  double probe_r = 1.0;
  bool keep_iterates = false;  // otherwise only probe values are stored
};

struct IterationTrace {
  std::vector<RadialFunction> iterates;  // empty unless keep_iterates
  std::vector<double> probe_values;      // one per iterate, w_0 included
  std::vector<double> residuals;         // sup |w_n - w_{n-1}| / Φ_μ
  PicardVerdict verdict = PicardVerdict::MaxIters;
  RadialFunction last;
  bool monotone = true;  // w_n >= w_{n-1} - 1e-10 |w_n| at every node
};

IterationTrace picard_iterate(const PotentialSpec& potential, const MuParams& params, double k, const LogGrid& grid,
                              const PicardConfig& cfg = {});

/// sup over the grid of |u - μ G[V u]| Φ_μ^{-1}.
double fixed_point_residual(const RadialFunction& u, const PotentialSpec& potential, const MuParams& params);

std::string to_string(PicardVerdict v);

}  // namespace hardy
