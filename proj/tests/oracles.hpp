#pragma once
// Reference values computed without the library's interpolation or shift code.

#include <cmath>
#include <complex>
#include <numbers>

#include "qhm/core.hpp"

namespace oracle {

using cd = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

/// Theta section sum_k g(x + 2 pi k - x0) e^{-2 pi i c p k y} with a Gaussian g,
/// covariant for the element rule, together with its closed-form derivatives.
struct Theta {
  int c = 1;
  int p = 0;
  double var = 3.0;
  double x0 = pi;
  int K = 12;

  template <class F>
  cd sum(double x, double y, F&& term) const {
    cd acc = 0.0;
    for (int k = -K; k <= K; ++k) {
      const double u = x + 2.0 * pi * k - x0;
      acc += term(u, k) * std::exp(-u * u / (2.0 * var)) * std::polar(1.0, -2.0 * pi * c * p * k * y);
    }
    return acc;
  }
  cd value(double x, double y) const { return sum(x, y, [](double, int) { return cd(1.0); }); }
  cd dx(double x, double y) const { return sum(x, y, [&](double u, int) { return cd(-u / var); }); }
  cd dxx(double x, double y) const {
    return sum(x, y, [&](double u, int) { return cd(u * u / (var * var) - 1.0 / var); });
  }
  cd dy(double x, double y) const {
    return sum(x, y, [&](double, int k) { return cd(0.0, -2.0 * pi * c * p * k); });
  }
  cd dyy(double x, double y) const {
    return sum(x, y, [&](double, int k) {
      const double w = 2.0 * pi * c * p * k;
      return cd(-w * w);
    });
  }
};

/// Element value at integer grid offsets, using only index arithmetic and the wrap phase.
inline cd grid_value(const qhm::Element& e, int p, long i, long j) {
  const qhm::Grid& g = e.grid();
  const long kx = (i >= 0 ? i / g.nx : -((-i + g.nx - 1) / g.nx));
  const long ii = i - kx * g.nx;
  const long jj = ((j % g.ny) + g.ny) % g.ny;
  const double y = g.y(static_cast<int>(jj));
  return std::polar(1.0, 2.0 * pi * kx * e.params().c * p * y) * e.at(p, static_cast<int>(ii), static_cast<int>(jj));
}

/// Fejer kernel as the literal weighted exponential sum.
inline double fejer_direct(int N, double t) {
  cd acc = 0.0;
  for (int n = -N; n <= N; ++n) acc += (1.0 - std::abs(n) / (N + 1.0)) * std::polar(1.0, n * t);
  return acc.real();
}

}  // namespace oracle
