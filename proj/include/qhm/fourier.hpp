#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace qhm {

using cd = std::complex<double>;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Trigonometric interpolation on a uniform periodic grid of `n` nodes.
///
/// Frequencies are taken one-sided, k = -n/2 .. n/2-1, so the Nyquist mode is
/// e^{-i(n/2)x} rather than a cosine. With this choice translation by any real
/// amount is unitary, translations compose exactly, and the derivative is the
/// exact generator of the translation group on the sampled space.
class SpectralAxis {
 public:
  SpectralAxis(int n, double period) : n_(n), period_(period), twiddle_(n) {
    for (int j = 0; j < n; ++j) twiddle_[j] = std::polar(1.0, -two_pi * j / n);
  }

  int size() const { return n_; }
  double period() const { return period_; }

  /// Frequency carried by coefficient slot `idx` (FFT ordering).
  int frequency(int idx) const { return idx < n_ / 2 ? idx : idx - n_; }

  /// Angular wavenumber 2*pi*k/period of slot `idx`.
  double wavenumber(int idx) const { return two_pi * frequency(idx) / period_; }

  /// c_k = (1/n) sum_j f_j e^{-2 pi i k j / n}.
  std::vector<cd> forward(std::span<const cd> values) const {
    std::vector<cd> coeffs(n_);
    for (int k = 0; k < n_; ++k) {
      cd acc = 0.0;
      for (int j = 0; j < n_; ++j) acc += values[j] * twiddle_[(static_cast<long>(k) * j) % n_];
      coeffs[k] = acc / static_cast<double>(n_);
    }
    return coeffs;
  }

  /// f_j = sum_k c_k e^{2 pi i k j / n}.
  std::vector<cd> inverse(std::span<const cd> coeffs) const {
    std::vector<cd> values(n_);
    for (int j = 0; j < n_; ++j) {
      cd acc = 0.0;
      for (int k = 0; k < n_; ++k) acc += coeffs[k] * std::conj(twiddle_[(static_cast<long>(k) * j) % n_]);
      values[j] = acc;
    }
    return values;
  }

  /// Value of the interpolant at an arbitrary coordinate s.
  cd evaluate(std::span<const cd> coeffs, double s) const {
    cd acc = 0.0;
    for (int k = 0; k < n_; ++k) acc += coeffs[k] * std::polar(1.0, wavenumber(k) * s);
    return acc;
  }

  /// Samples of s -> f(s - shift) on the grid.
  std::vector<cd> translate(std::span<const cd> values, double shift) const {
    auto c = forward(values);
    for (int k = 0; k < n_; ++k) c[k] *= std::polar(1.0, -wavenumber(k) * shift);
    return inverse(c);
  }

  /// order-th derivative of the interpolant, sampled on the grid.
  std::vector<cd> derivative(std::span<const cd> values, int order = 1) const {
    auto c = forward(values);
    for (int k = 0; k < n_; ++k) c[k] *= std::pow(cd(0.0, wavenumber(k)), order);
    return inverse(c);
  }

 private:
  int n_;
  double period_;
  std::vector<cd> twiddle_;
};

}  // namespace qhm
