#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qhm/error.hpp"
#include "qhm/fourier.hpp"

namespace qhm {

/// Deformation constants: c is the integer twist, hbar/mu/nu the real shift data.
struct ManifoldParams {
  int c = 1;
  double hbar = 0.0;
  double mu = 0.0;
  double nu = 0.0;

  void validate() const {
    if (c < 1) throw InvalidArgument("c must be a positive integer");
    if (!std::isfinite(hbar) || !std::isfinite(mu) || !std::isfinite(nu))
      throw InvalidArgument("manifold parameters must be finite");
  }

  /// Shift carried by one unit of momentum: (hbar*mu, hbar*nu).
  double step_x() const { return hbar * mu; }
  double step_y() const { return hbar * nu; }

  static ManifoldParams desk() { return {1, 1.0, two_pi / 16.0, 1.0 / 16.0}; }

  bool operator==(const ManifoldParams&) const = default;
};

/// Uniform sampling of [0,2pi) x [0,1) x {-p_max..p_max}.
struct Grid {
  int nx = 16;
  int ny = 16;
  int p_max = 4;

  void validate() const {
    if (nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0)
      throw InvalidArgument("nx and ny must be even and at least 4");
    if (p_max < 0) throw InvalidArgument("p_max must be nonnegative");
  }

  double dx() const { return two_pi / nx; }
  double dy() const { return 1.0 / ny; }
  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }
  int slices() const { return 2 * p_max + 1; }
  std::size_t slice_size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t size() const { return slice_size() * slices(); }
  bool in_band(int p) const { return p >= -p_max && p <= p_max; }

  std::size_t index(int p, int i, int j) const {
    return (static_cast<std::size_t>(p + p_max) * nx + i) * ny + j;
  }

  /// Quadrature weight dx*dy/(2pi) of one sample.
  double weight() const { return dx() * dy() / two_pi; }

  static Grid desk() { return {16, 16, 4}; }

  bool operator==(const Grid&) const = default;
};

inline void require_same(const ManifoldParams& a, const ManifoldParams& b, const Grid& ga, const Grid& gb) {
  if (!(a == b)) throw Mismatch("operands carry different manifold parameters");
  if (!(ga == gb)) throw Mismatch("operands live on different grids");
}

inline long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline int wrap_index(long a, int n) { return static_cast<int>(a - floor_div(a, n) * n); }

/// Returns true and sets `k` when v is within 1e-12 of an integer.
inline bool near_integer(double v, long& k) {
  double r = std::round(v);
  if (std::abs(v - r) < 1e-12) {
    k = static_cast<long>(r);
    return true;
  }
  return false;
}

struct ElementTag {
  static constexpr const char* kind = "element";
  static constexpr bool state = false;
};
struct StateTag {
  static constexpr const char* kind = "state";
  static constexpr bool state = true;
};

/// Complex samples f(x_i, y_j, p), p-major then x then y.
///
/// Off the fundamental domain the field is defined by 1-periodicity in y and
/// f(x + 2pi k, y, p) = e^{2 pi i k tw(p,y)} f(x, y, p), where
/// tw(p,y) = c p y for elements and c (p y + hbar nu p^2) for states.
template <class Tag>
class Field {
 public:
  Field() = default;

  Field(const ManifoldParams& params, const Grid& grid) : params_(params), grid_(grid) {
    params_.validate();
    grid_.validate();
    data_.assign(grid_.size(), cd(0.0));
  }

  Field(const ManifoldParams& params, const Grid& grid, std::vector<cd> data)
      : params_(params), grid_(grid), data_(std::move(data)) {
    params_.validate();
    grid_.validate();
    if (data_.size() != grid_.size()) throw InvalidArgument("sample count does not match grid");
    for (const cd& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidArgument("non-finite sample");
  }

  static constexpr const char* kind() { return Tag::kind; }

  const ManifoldParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  const std::vector<cd>& data() const { return data_; }
  std::vector<cd>& data() { return data_; }

  cd& at(int p, int i, int j) { return data_[grid_.index(p, i, j)]; }
  const cd& at(int p, int i, int j) const { return data_[grid_.index(p, i, j)]; }

  std::span<cd> slice(int p) { return {data_.data() + grid_.index(p, 0, 0), grid_.slice_size()}; }
  std::span<const cd> slice(int p) const { return {data_.data() + grid_.index(p, 0, 0), grid_.slice_size()}; }

  /// Twist tw(p,y) in the quasi-periodicity phase.
  double twist(int p, double y) const {
    double tw = static_cast<double>(p) * y;
    if constexpr (Tag::state) tw += params_.hbar * params_.nu * p * p;
    return params_.c * tw;
  }

  Field& operator+=(const Field& o) {
    require_same(params_, o.params_, grid_, o.grid_);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same(params_, o.params_, grid_, o.grid_);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= o.data_[n];
    return *this;
  }
  Field& operator*=(cd s) {
    for (cd& v : data_) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, cd s) { return a *= s; }
  friend Field operator*(cd s, Field a) { return a *= s; }
  Field operator-() const { return *this * cd(-1.0); }

  double max_abs() const {
    double m = 0.0;
    for (const cd& v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  double slice_max_abs(int p) const {
    double m = 0.0;
    for (const cd& v : slice(p)) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  ManifoldParams params_;
  Grid grid_;
  std::vector<cd> data_;
};

using Element = Field<ElementTag>;
using StateVector = Field<StateTag>;

/// <a, b> = sum a conj(b) dx dy / 2pi, linear in the first slot.
template <class Tag>
cd inner(const Field<Tag>& a, const Field<Tag>& b) {
  require_same(a.params(), b.params(), a.grid(), b.grid());
  cd acc = 0.0;
  for (std::size_t n = 0; n < a.data().size(); ++n) acc += a.data()[n] * std::conj(b.data()[n]);
  return acc * a.grid().weight();
}

template <class Tag>
double norm(const Field<Tag>& f) {
  return std::sqrt(std::max(0.0, inner(f, f).real()));
}

/// Evaluates the field at an arbitrary point.
///
/// x is reduced into [0,2pi) with the quasi-periodicity phase, y mod 1. Off-grid
/// points interpolate the x-periodic representative e^{-i x tw} f along x at each
/// grid y, then interpolate trigonometrically along y.
template <class Tag>
cd covariant_sample(const Field<Tag>& f, double x, double y, int p) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidArgument("non-finite sample coordinate");
  const Grid& g = f.grid();
  if (!g.in_band(p)) return 0.0;

  long k = 0;
  int ix = -1;
  long idx;
  if (near_integer(x / g.dx(), idx)) {
    ix = wrap_index(idx, g.nx);
    k = floor_div(idx, g.nx);
  } else {
    k = static_cast<long>(std::floor(x / two_pi));
  }
  const double x0 = x - two_pi * static_cast<double>(k);
  const double y0 = y - std::floor(y);
  const cd wrap = std::polar(1.0, two_pi * static_cast<double>(k) * f.twist(p, y0));

  std::vector<cd> column(g.ny);
  if (ix >= 0) {
    for (int j = 0; j < g.ny; ++j) column[j] = f.at(p, ix, j);
  } else {
    SpectralAxis ax(g.nx, two_pi);
    std::vector<cd> psi(g.nx);
    for (int j = 0; j < g.ny; ++j) {
      const double tw = f.twist(p, g.y(j));
      for (int i = 0; i < g.nx; ++i) psi[i] = f.at(p, i, j) * std::polar(1.0, -g.x(i) * tw);
      column[j] = ax.evaluate(ax.forward(psi), x0) * std::polar(1.0, x0 * tw);
    }
  }

  long jdx;
  if (near_integer(y0 / g.dy(), jdx)) return wrap * column[wrap_index(jdx, g.ny)];
  SpectralAxis ay(g.ny, 1.0);
  return wrap * ay.evaluate(ay.forward(column), y0);
}

namespace detail {

template <class Tag>
void shift_slice_x(const Field<Tag>& f, int p, double r, std::span<cd> out) {
  const Grid& g = f.grid();
  long m;
  if (near_integer(r / g.dx(), m)) {
    std::vector<cd> phase(g.ny, cd(1.0));
    long phase_k = 0;
    for (int i = 0; i < g.nx; ++i) {
      const long src = static_cast<long>(i) - m;
      const int i0 = wrap_index(src, g.nx);
      const long k = floor_div(src, g.nx);
      if (k != phase_k) {
        for (int j = 0; j < g.ny; ++j) phase[j] = std::polar(1.0, two_pi * static_cast<double>(k) * f.twist(p, g.y(j)));
        phase_k = k;
      }
      for (int j = 0; j < g.ny; ++j) {
        const cd v = f.at(p, i0, j);
        out[static_cast<std::size_t>(i) * g.ny + j] = k != 0 ? v * phase[j] : v;
      }
    }
    return;
  }
  SpectralAxis ax(g.nx, two_pi);
  std::vector<cd> psi(g.nx);
  for (int j = 0; j < g.ny; ++j) {
    const double tw = f.twist(p, g.y(j));
    for (int i = 0; i < g.nx; ++i) psi[i] = f.at(p, i, j) * std::polar(1.0, -g.x(i) * tw);
    auto moved = ax.translate(psi, r);
    for (int i = 0; i < g.nx; ++i)
      out[static_cast<std::size_t>(i) * g.ny + j] = moved[i] * std::polar(1.0, (g.x(i) - r) * tw);
  }
}

inline void shift_slice_y(const Grid& g, std::span<cd> s, double shift) {
  long m;
  std::vector<cd> row(g.ny);
  if (near_integer(shift / g.dy(), m)) {
    for (int i = 0; i < g.nx; ++i) {
      for (int j = 0; j < g.ny; ++j) row[j] = s[static_cast<std::size_t>(i) * g.ny + wrap_index(j - m, g.ny)];
      std::copy(row.begin(), row.end(), s.begin() + static_cast<std::ptrdiff_t>(i) * g.ny);
    }
    return;
  }
  SpectralAxis ay(g.ny, 1.0);
  for (int i = 0; i < g.nx; ++i) {
    std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(i) * g.ny, g.ny, row.begin());
    auto moved = ay.translate(row, shift);
    std::copy(moved.begin(), moved.end(), s.begin() + static_cast<std::ptrdiff_t>(i) * g.ny);
  }
}

}  // namespace detail

/// Samples of (x,y) -> f(x - rx, y - ry, p) on the grid, row-major in (i, j).
template <class Tag>
std::vector<cd> shifted_slice(const Field<Tag>& f, int p, double rx, double ry) {
  if (!std::isfinite(rx) || !std::isfinite(ry)) throw InvalidArgument("non-finite shift");
  const Grid& g = f.grid();
  std::vector<cd> out(g.slice_size(), cd(0.0));
  if (!g.in_band(p)) return out;
  detail::shift_slice_x(f, p, rx, out);
  if (ry != 0.0) detail::shift_slice_y(g, out, ry);
  return out;
}

/// (x,y,p) -> f(x - r, y, p).
template <class Tag>
Field<Tag> shift_x(const Field<Tag>& f, double r) {
  if (!std::isfinite(r)) throw InvalidArgument("non-finite shift");
  Field<Tag> out(f.params(), f.grid());
  for (int p = -f.grid().p_max; p <= f.grid().p_max; ++p) detail::shift_slice_x(f, p, r, out.slice(p));
  return out;
}

/// (x,y,p) -> f(x, y - s, p).
template <class Tag>
Field<Tag> shift_y(const Field<Tag>& f, double s) {
  if (!std::isfinite(s)) throw InvalidArgument("non-finite shift");
  Field<Tag> out = f;
  for (int p = -f.grid().p_max; p <= f.grid().p_max; ++p) detail::shift_slice_y(f.grid(), out.slice(p), s);
  return out;
}

struct RandomOptions {
  /// Slices with |p| > support are zero; negative means the full band.
  int support = -1;
  /// Harmonic bound of the p = 0 slice in x and y; negative means nx/8, ny/8.
  int band_x = -1;
  int band_y = -1;
  /// y-harmonics per atom on p != 0 slices.
  int atom_band = 0;
  int atoms = 2;
};

/// Deterministic smooth random field with slice sup e^{-p_decay |p|}.
///
/// The p = 0 slice is a trigonometric polynomial. A p != 0 slice is a sum of
/// Gaussian theta sections sum_k H(x + 2pi k, y) e^{-2pi i k tw(p,y)}, which obey
/// the quasi-periodicity exactly; the Gaussian width balances the x-bandwidth of
/// the periodic representative against the y-bandwidth.
template <class Tag = ElementTag>
Field<Tag> random_field(const ManifoldParams& params, const Grid& grid, std::uint64_t seed, double p_decay,
                        const RandomOptions& opt = {}) {
  if (!(p_decay > 0.0) || !std::isfinite(p_decay)) throw InvalidArgument("p_decay must be positive");
  Field<Tag> f(params, grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  auto gauss = [&] { return cd(normal(rng), normal(rng)); };

  const int support = opt.support < 0 ? grid.p_max : std::min(opt.support, grid.p_max);
  const int bx = opt.band_x < 0 ? std::max(1, grid.nx / 8) : opt.band_x;
  const int by = opt.band_y < 0 ? std::max(1, grid.ny / 8) : opt.band_y;
  const int nh = opt.atom_band;

  for (int p = -support; p <= support; ++p) {
    auto s = f.slice(p);
    if (p == 0) {
      for (int m = -bx; m <= bx; ++m)
        for (int n = -by; n <= by; ++n) {
          const cd z = gauss() * std::exp(-(m * m + n * n) / 8.0);
          for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j)
              s[static_cast<std::size_t>(i) * grid.ny + j] += z * std::polar(1.0, m * grid.x(i) + two_pi * n * grid.y(j));
        }
    } else {
      const double cp = static_cast<double>(params.c) * std::abs(p);
      const int kmin = std::max(1, static_cast<int>(std::ceil((grid.ny / 2.0 - nh) / cp)));
      const double mx = std::max(1.0, grid.nx / 2.0 - cp);
      const double var = (2.0 * kmin - 1.0) * std::numbers::pi / mx;
      const int kr = static_cast<int>(std::ceil((10.0 * std::sqrt(var) + 4.0) / two_pi)) + 1;
      for (int a = 0; a < opt.atoms; ++a) {
        const double c0 = std::numbers::pi + jitter(rng);
        std::vector<cd> coef(2 * nh + 1);
        for (cd& z : coef) z = gauss();
        for (int i = 0; i < grid.nx; ++i)
          for (int j = 0; j < grid.ny; ++j) {
            const double y = grid.y(j);
            cd q = 0.0;
            for (int b = -nh; b <= nh; ++b) q += coef[b + nh] * std::polar(1.0, two_pi * b * y);
            cd acc = 0.0;
            for (int k = -kr; k <= kr; ++k) {
              const double u = grid.x(i) + two_pi * k - c0;
              acc += std::exp(-u * u / (2.0 * var)) * std::polar(1.0, -two_pi * k * f.twist(p, y));
            }
            s[static_cast<std::size_t>(i) * grid.ny + j] += acc * q;
          }
      }
    }
    const double m = f.slice_max_abs(p);
    if (m > 0.0) {
      const double scale = std::exp(-p_decay * std::abs(p)) / m;
      for (cd& v : s) v *= scale;
    }
  }
  return f;
}

inline Element random_element(const ManifoldParams& params, const Grid& grid, std::uint64_t seed, double p_decay,
                              const RandomOptions& opt = {}) {
  return random_field<ElementTag>(params, grid, seed, p_decay, opt);
}

inline StateVector random_state(const ManifoldParams& params, const Grid& grid, std::uint64_t seed,
                                const RandomOptions& opt = {}) {
  return random_field<StateTag>(params, grid, seed, 0.5, opt);
}

/// Unit of the algebra: 1 on the p = 0 slice.
inline Element identity_element(const ManifoldParams& params, const Grid& grid) {
  Element e(params, grid);
  for (cd& v : e.slice(0)) v = 1.0;
  return e;
}

/// Field supported on one slice, filled from a callable (x, y) -> complex.
template <class Tag = ElementTag, class Fn>
Field<Tag> slice_field(const ManifoldParams& params, const Grid& grid, int p, Fn&& fn) {
  Field<Tag> f(params, grid);
  if (!grid.in_band(p)) throw InvalidArgument("slice index outside the p band");
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j) f.at(p, i, j) = fn(grid.x(i), grid.y(j));
  return f;
}

}  // namespace qhm
