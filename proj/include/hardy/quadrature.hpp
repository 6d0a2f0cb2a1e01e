#pragma once

#include <array>
#include <span>
#include <vector>

namespace hardy::quad {

/// Weights (in units of h) integrating the interpolant through six uniform
/// nodes j0..j0+5 over the interval [j, j+1], where `offset` = j - j0.
const std::array<double, 6>& interval_weights(int offset);

/// Integral of samples y over each grid interval [s_i, s_{i+1}], sixth order.
/// Requires at least six samples.
std::vector<double> interval_integrals(std::span<const double> y, double h);

/// Running integral from the first node: out[i] = ∫_{s_0}^{s_i} y.
std::vector<double> cumulative_from_left(std::span<const double> y, double h);

/// Running integral to the last node: out[i] = ∫_{s_i}^{s_{n-1}} y.
std::vector<double> cumulative_from_right(std::span<const double> y, double h);

}  // namespace hardy::quad
