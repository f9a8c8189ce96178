#pragma once

#include <array>

namespace warpflow::quadrature {

// Five-point Gauss-Legendre rule on [a, b].
template <class F>
double gauss_legendre5(F&& fn, double a, double b) {
  static constexpr std::array<double, 5> nodes{
      0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
      0.9061798459386640};
  static constexpr std::array<double, 5> weights{
      0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
      0.2369268850561891, 0.2369268850561891};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sum += weights[i] * fn(mid + half * nodes[i]);
  }
  return half * sum;
}

// Composite rule over n equal panels.
template <class F>
double composite(F&& fn, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    sum += gauss_legendre5(fn, a + i * h, a + (i + 1) * h);
  }
  return sum;
}

}  // namespace warpflow::quadrature
