#include "hardy/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "hardy/error.hpp"

namespace hardy::quad {

namespace {

// Solve the 6x6 moment system sum_k w_k (k - offset)^p = ∫_0^1 t^p dt,
// nodes placed at k - offset so the target interval is [0, 1].
std::array<double, 6> compute_weights(int offset) {
  constexpr int n = 6;
  double a[n][n + 1];
  for (int p = 0; p < n; ++p) {
    for (int k = 0; k < n; ++k) {
      double x = static_cast<double>(k - offset);
      double v = 1.0;
      for (int q = 0; q < p; ++q) v *= x;
      a[p][k] = v;
    }
    a[p][n] = 1.0 / (p + 1);
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    for (int k = 0; k <= n; ++k) std::swap(a[c][k], a[piv][k]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::array<double, 6> w{};
  for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = a[k][n] / a[k][k];
  return w;
}

const std::array<std::array<double, 6>, 5> kWeights = [] {
  std::array<std::array<double, 6>, 5> t{};
  for (int o = 0; o < 5; ++o) t[static_cast<std::size_t>(o)] = compute_weights(o);
  return t;
}();

}  // namespace

const std::array<double, 6>& interval_weights(int offset) {
  return kWeights.at(static_cast<std::size_t>(offset));
}

std::vector<double> interval_integrals(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  if (n < 6) throw Error(ErrorKind::PreconditionViolated, "sixth-order quadrature needs >= 6 nodes");
  std::vector<double> out(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j0 = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) - 2, 0,
                                                      static_cast<std::ptrdiff_t>(n - 6));
    const auto& w = interval_weights(static_cast<int>(i - j0));
    double acc = 0.0;
    for (std::size_t k = 0; k < 6; ++k) acc += w[k] * y[j0 + k];
    out[i] = acc * h;
  }
  return out;
}

std::vector<double> cumulative_from_left(std::span<const double> y, double h) {
  const auto pieces = interval_integrals(y, h);
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 0; i < pieces.size(); ++i) out[i + 1] = out[i] + pieces[i];
  return out;
}

std::vector<double> cumulative_from_right(std::span<const double> y, double h) {
  const auto pieces = interval_integrals(y, h);
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = pieces.size(); i-- > 0;) out[i] = out[i + 1] + pieces[i];
  return out;
}

}  // namespace hardy::quad
