#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "qhm/algebra.hpp"
#include "qhm/core.hpp"

namespace qhm {

/// (r, s, t) coordinates of a point of the Heisenberg group.
struct GroupPoint {
  double r = 0.0;
  double s = 0.0;
  double t = 0.0;
};

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite ") + what);
}

/// alpha_r(f)(x,y,p) = f(x - r, y, p).
inline Element alpha(const Element& e, double r) {
  require_finite(r, "r");
  return shift_x(e, r);
}

/// beta_s(f)(x,y,p) = e^{i p s c x} f(x, y - s, p).
inline Element beta(const Element& e, double s) {
  require_finite(s, "s");
  Element out = shift_y(e, s);
  const Grid& g = e.grid();
  const double c = e.params().c;
  for (int p = -g.p_max; p <= g.p_max; ++p)
    for (int i = 0; i < g.nx; ++i) {
      const cd ph = std::polar(1.0, p * s * c * g.x(i));
      for (int j = 0; j < g.ny; ++j) out.at(p, i, j) *= ph;
    }
  return out;
}

/// gamma_t(f)(x,y,p) = e^{i p t} f(x,y,p).
inline Element gamma(const Element& e, double t) {
  require_finite(t, "t");
  Element out = e;
  for (int p = -e.grid().p_max; p <= e.grid().p_max; ++p) {
    const cd ph = std::polar(1.0, p * t);
    for (cd& v : out.slice(p)) v *= ph;
  }
  return out;
}

/// L_g = gamma_t o alpha_r o beta_s.
inline Element act(const Element& e, const GroupPoint& g) { return gamma(alpha(beta(e, g.s), g.r), g.t); }

/// (U_g xi)(x,y,p) = e^{i p (t + c s (x + hbar p mu - r))} xi(x - r, y - s, p).
inline StateVector unitary_L(const StateVector& xi, const GroupPoint& g) {
  require_finite(g.r, "r");
  require_finite(g.s, "s");
  require_finite(g.t, "t");
  const Grid& gr = xi.grid();
  const ManifoldParams& pr = xi.params();
  StateVector out(pr, gr);
  for (int p = -gr.p_max; p <= gr.p_max; ++p) {
    auto moved = shifted_slice(xi, p, g.r, g.s);
    for (int i = 0; i < gr.nx; ++i) {
      const cd ph = std::polar(1.0, p * (g.t + pr.c * g.s * (gr.x(i) + pr.hbar * p * pr.mu - g.r)));
      for (int j = 0; j < gr.ny; ++j) out.at(p, i, j) = ph * moved[static_cast<std::size_t>(i) * gr.ny + j];
    }
  }
  return out;
}

/// Inverse of unitary_L: xi(x,y,p) = e^{-i phi(x + r, p)} eta(x + r, y + s, p).
inline StateVector unitary_L_inverse(const StateVector& eta, const GroupPoint& g) {
  const Grid& gr = eta.grid();
  const ManifoldParams& pr = eta.params();
  StateVector out(pr, gr);
  for (int p = -gr.p_max; p <= gr.p_max; ++p) {
    auto moved = shifted_slice(eta, p, -g.r, -g.s);
    for (int i = 0; i < gr.nx; ++i) {
      const double x = gr.x(i) + g.r;
      const cd ph = std::polar(1.0, -p * (g.t + pr.c * g.s * (x + pr.hbar * p * pr.mu - g.r)));
      for (int j = 0; j < gr.ny; ++j) out.at(p, i, j) = ph * moved[static_cast<std::size_t>(i) * gr.ny + j];
    }
  }
  return out;
}

/// a_n(e): keeps the p = n slice.
inline Element fourier_coeff(const Element& e, int n) {
  if (!e.grid().in_band(n)) throw InvalidArgument("|n| exceeds p_max");
  Element out(e.params(), e.grid());
  std::ranges::copy(e.slice(n), out.slice(n).begin());
  return out;
}

/// a_n(e) by nt-node uniform quadrature of (1/2pi) int gamma_t(e) e^{-int} dt over [-pi, pi).
inline Element fourier_coeff_quadrature(const Element& e, int n, int nt) {
  if (!e.grid().in_band(n)) throw InvalidArgument("|n| exceeds p_max");
  if (nt < 1) throw InvalidArgument("nt must be positive");
  Element out(e.params(), e.grid());
  for (int k = 0; k < nt; ++k) {
    const double t = -std::numbers::pi + two_pi * k / nt;
    out += gamma(e, t) * (std::polar(1.0, -n * t) / static_cast<double>(nt));
  }
  return out;
}

/// K_N(t) = (1/(N+1)) (sin((N+1)t/2) / sin(t/2))^2, equal to N+1 on 2piZ.
inline double fejer_kernel(int N, double t) {
  if (N < 0) throw InvalidArgument("N must be nonnegative");
  // reduce first: sin(t/2) near t = 2 pi k loses digits to cancellation
  const double u = std::remainder(t, two_pi);
  const double h = std::sin(u / 2.0);
  if (std::abs(h) < 1e-8) return (N + 1.0) * (1.0 - N * (N + 2.0) * u * u / 12.0);
  const double s = std::sin((N + 1.0) * u / 2.0) / h;
  return s * s / (N + 1.0);
}

/// sigma_N(e): slice p scaled by max(0, 1 - |p|/(N+1)).
inline Element cesaro(const Element& e, int N) {
  if (N < 0) throw InvalidArgument("N must be nonnegative");
  Element out = e;
  for (int p = -e.grid().p_max; p <= e.grid().p_max; ++p) {
    const double w = std::max(0.0, 1.0 - std::abs(p) / (N + 1.0));
    for (cd& v : out.slice(p)) v *= w;
  }
  return out;
}

/// An operator on L^2(R x T x Z) written through a coefficient function,
/// (T xi)(x,y,p) = sum_{|q| <= p_max} T(x - hbar(q-2p)mu, y - hbar(q-2p)nu, q) xi(x,y,p-q).
struct CoefficientOperator {
  ManifoldParams params;
  Grid grid;
  std::function<cd(double, double, int)> coeff;
};

inline CoefficientOperator as_operator(const Element& e) {
  return {e.params(), e.grid(), [e](double x, double y, int q) { return covariant_sample(e, x, y, q); }};
}

/// e plus amplitude * n, where n is a smooth function 2pi-periodic in x on
/// every slice. n carries no quasi-periodicity phase, so it is not an element.
inline CoefficientOperator corrupted_operator(const Element& e, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  struct Mode {
    int q, a, b;
    cd z;
  };
  std::vector<Mode> modes;
  for (int q = -e.grid().p_max; q <= e.grid().p_max; ++q)
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) modes.push_back({q, a, b, cd(nd(rng), nd(rng))});
  return {e.params(), e.grid(), [e, modes, amplitude](double x, double y, int q) {
            cd n = 0.0;
            for (const auto& m : modes)
              if (m.q == q) n += m.z * std::polar(1.0, m.a * x + two_pi * m.b * y);
            return covariant_sample(e, x, y, q) + amplitude * n;
          }};
}

/// Smooth probe vector on R x T x Z: a finite sum of z e^{i(a x + 2 pi b y)}
/// per momentum, a real, supported on |p| <= support. Not quasi-periodic.
class ProbeFunction {
 public:
  ProbeFunction(int support, std::uint64_t seed, int terms = 4) : support_(support) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> freq(-2.5, 2.5);
    std::uniform_int_distribution<int> yb(-2, 2);
    for (int p = -support; p <= support; ++p)
      for (int k = 0; k < terms; ++k) terms_.push_back({p, freq(rng), yb(rng), cd(nd(rng), nd(rng))});
  }

  int support() const { return support_; }

  cd operator()(double x, double y, int p) const {
    cd v = 0.0;
    for (const auto& t : terms_)
      if (t.p == p) v += t.z * std::polar(1.0, t.a * x + two_pi * t.b * y);
    return v;
  }

 private:
  struct Term {
    int p;
    double a;
    int b;
    cd z;
  };
  int support_;
  std::vector<Term> terms_;
};

/// Vector on the grid over [0,2pi) x [0,1), offset by (ox, oy), momenta |p| <= band.
using ProbeSamples = std::vector<std::vector<cd>>;

namespace detail {

struct ProbeContext {
  const CoefficientOperator& T;
  int band;
  // memoized coefficient tables keyed by (ox, oy, p); entry [q + P][i*ny + j]
  std::map<std::tuple<double, double, int>, std::vector<std::vector<cd>>> tables;

  const std::vector<std::vector<cd>>& table(double ox, double oy, int p) {
    auto key = std::make_tuple(ox, oy, p);
    auto it = tables.find(key);
    if (it != tables.end()) return it->second;
    const Grid& g = T.grid;
    const int P = g.p_max;
    std::vector<std::vector<cd>> t(2 * P + 1, std::vector<cd>(g.slice_size()));
    for (int q = -P; q <= P; ++q) {
      const double sx = T.params.step_x() * (q - 2 * p), sy = T.params.step_y() * (q - 2 * p);
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          t[q + P][static_cast<std::size_t>(i) * g.ny + j] = T.coeff(g.x(i) + ox - sx, g.y(j) + oy - sy, q);
    }
    return tables.emplace(key, std::move(t)).first->second;
  }
};

/// Samples of v at (x_i + ox, y_j + oy, p) for |p| <= band.
template <class V>
ProbeSamples sample(const Grid& g, const V& v, double ox, double oy, int band) {
  ProbeSamples s(2 * band + 1, std::vector<cd>(g.slice_size()));
  for (int p = -band; p <= band; ++p)
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) s[p + band][static_cast<std::size_t>(i) * g.ny + j] = v(g.x(i) + ox, g.y(j) + oy, p);
  return s;
}

/// (T v)(x_i + ox, y_j + oy, p), |p| <= band, where v is given on the same offset grid.
inline ProbeSamples apply_at(ProbeContext& ctx, const ProbeSamples& v, int vband, double ox, double oy) {
  const Grid& g = ctx.T.grid;
  const int P = g.p_max, W = ctx.band;
  ProbeSamples out(2 * W + 1, std::vector<cd>(g.slice_size(), cd(0.0)));
  for (int p = -W; p <= W; ++p) {
    const auto& t = ctx.table(ox, oy, p);
    for (int q = -P; q <= P; ++q) {
      const int m = p - q;
      if (m < -vband || m > vband) continue;
      const auto& src = v[m + vband];
      auto& dst = out[p + W];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += t[q + P][k] * src[k];
    }
  }
  return out;
}

inline double samples_norm(const Grid& g, const ProbeSamples& v) {
  double acc = 0.0;
  for (const auto& s : v)
    for (const cd& z : s) acc += std::norm(z);
  return std::sqrt(acc * g.weight());
}

}  // namespace detail

struct CommutantResiduals {
  double v_f = 0.0;
  double w_k = 0.0;
  double x_r = 0.0;
};

/// Max over random probes of ||[T, V_f] xi||, ||[T, W_k] xi||, ||[T, X_r] xi||, each over ||xi||.
///
/// (W_k xi)(x,y,p) = e^{-ick(p^2 hbar nu + p y)} xi(x + k, y, p) with k = 2 pi k_index,
/// (X_r xi)(x,y,p) = xi(x - 2 hbar r mu, y - 2 hbar r nu, p + r).
/// Probes are smooth functions on R x T x Z; every side is evaluated exactly at
/// grid points of [0,2pi) x [0,1) on a momentum band wide enough that nothing is
/// truncated.
inline CommutantResiduals commutant_residuals(const CoefficientOperator& T,
                                              const std::function<cd(double, double)>& f, int k_index, int r,
                                              int probes, std::uint64_t seed) {
  if (probes < 1) throw InvalidArgument("probe count must be positive");
  const Grid& g = T.grid;
  const ManifoldParams& pr = T.params;
  std::vector<cd> fs(g.slice_size());
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const cd v = f(g.x(i), g.y(j));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidArgument("non-finite f sample");
      fs[static_cast<std::size_t>(i) * g.ny + j] = v;
    }

  const int P = g.p_max, S = P, ar = std::abs(r);
  const int W = S + P + ar;
  const double k = two_pi * k_index;
  const double rx = 2.0 * pr.step_x() * r, ry = 2.0 * pr.step_y() * r;
  detail::ProbeContext ctx{T, W, {}};

  auto wk_phase = [&](int p, double y) { return std::polar(1.0, -pr.c * k * (p * p * pr.hbar * pr.nu + p * y)); };

  CommutantResiduals res;
  for (int n = 0; n < probes; ++n) {
    ProbeFunction xi(S, seed + 7919ULL * static_cast<std::uint64_t>(n));
    auto base = detail::sample(g, xi, 0.0, 0.0, W);
    const double xn = detail::samples_norm(g, base);

    // [T, V_f]
    auto fx = base;
    for (auto& s : fx)
      for (std::size_t q = 0; q < s.size(); ++q) s[q] *= fs[q];
    auto lhs = detail::apply_at(ctx, fx, W, 0.0, 0.0);
    auto tx = detail::apply_at(ctx, base, W, 0.0, 0.0);
    for (int p = -W; p <= W; ++p)
      for (std::size_t q = 0; q < g.slice_size(); ++q) lhs[p + W][q] -= fs[q] * tx[p + W][q];
    res.v_f = std::max(res.v_f, detail::samples_norm(g, lhs) / xn);

    // [T, W_k]
    auto shifted = detail::sample(g, xi, k, 0.0, W);
    auto wxi = shifted;
    for (int p = -W; p <= W; ++p)
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) wxi[p + W][static_cast<std::size_t>(i) * g.ny + j] *= wk_phase(p, g.y(j));
    auto t_wxi = detail::apply_at(ctx, wxi, W, 0.0, 0.0);
    auto txi_k = detail::apply_at(ctx, shifted, W, k, 0.0);
    for (int p = -W; p <= W; ++p)
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          const std::size_t q = static_cast<std::size_t>(i) * g.ny + j;
          t_wxi[p + W][q] -= wk_phase(p, g.y(j)) * txi_k[p + W][q];
        }
    res.w_k = std::max(res.w_k, detail::samples_norm(g, t_wxi) / xn);

    // [T, X_r]
    auto moved = detail::sample(g, xi, -rx, -ry, W + ar);
    ProbeSamples xr(2 * W + 1, std::vector<cd>(g.slice_size(), cd(0.0)));
    for (int p = -W; p <= W; ++p)
      if (std::abs(p + r) <= W + ar) xr[p + W] = moved[p + r + W + ar];
    auto t_xr = detail::apply_at(ctx, xr, W, 0.0, 0.0);
    detail::ProbeContext wide{T, W + ar, {}};
    auto txi_moved = detail::apply_at(wide, moved, W + ar, -rx, -ry);
    for (int p = -W; p <= W; ++p)
      for (std::size_t q = 0; q < g.slice_size(); ++q) t_xr[p + W][q] -= txi_moved[p + r + W + ar][q];
    res.x_r = std::max(res.x_r, detail::samples_norm(g, t_xr) / xn);
  }
  return res;
}

inline CommutantResiduals commutant_residuals(const Element& e, const std::function<cd(double, double)>& f,
                                              int k_index, int r, int probes, std::uint64_t seed) {
  return commutant_residuals(as_operator(e), f, k_index, r, probes, seed);
}

namespace detail {

struct Bump {
  double r, s, w;
  int a, b;
};

inline int max_smoothing_index(const Grid& g) {
  return static_cast<int>(std::ceil(1.0 / std::min(g.dx(), g.dy()))) - 1;
}

/// Grid nodes (a dx, b dy) inside (-1/m, 1/m)^2 with product-hat weights summing to 1.
inline std::vector<Bump> bump_nodes(const Grid& g, int m) {
  if (m < 1) throw InvalidArgument("m must be positive");
  const int mmax = max_smoothing_index(g);
  if (m > mmax)
    throw InvalidArgument("smoothing support below one grid cell; largest admissible m is " + std::to_string(mmax));
  const double h = 1.0 / m;
  std::vector<Bump> nodes;
  double total = 0.0;
  const int ax = static_cast<int>(std::floor(h / g.dx())), by = static_cast<int>(std::floor(h / g.dy()));
  for (int a = -ax; a <= ax; ++a)
    for (int b = -by; b <= by; ++b) {
      const double r = a * g.dx(), s = b * g.dy();
      const double w = std::max(0.0, 1.0 - std::abs(r) * m) * std::max(0.0, 1.0 - std::abs(s) * m);
      if (w <= 0.0) continue;
      nodes.push_back({r, s, w, a, b});
      total += w;
    }
  for (auto& n : nodes) n.w /= total;
  return nodes;
}

}  // namespace detail

/// f_m(x,y,n) = sum h_m(r,s) f(x - r, y - s, n) e^{i c n x s} over the bump nodes.
inline Element twisted_smooth(const Element& e, int m) {
  const Grid& g = e.grid();
  const auto nodes = detail::bump_nodes(g, m);
  const double c = e.params().c;
  Element out(e.params(), g);
  for (int n = -g.p_max; n <= g.p_max; ++n) {
    auto dst = out.slice(n);
    for (const auto& b : nodes) {
      auto src = shifted_slice(e, n, b.r, b.s);
      for (int i = 0; i < g.nx; ++i) {
        const cd ph = b.w * std::polar(1.0, c * n * g.x(i) * b.s);
        for (int j = 0; j < g.ny; ++j) {
          const std::size_t q = static_cast<std::size_t>(i) * g.ny + j;
          dst[q] += ph * src[q];
        }
      }
    }
  }
  return out;
}

/// Pointwise form of twisted_smooth at an arbitrary (x, y).
inline cd twisted_smooth_at(const Element& e, int m, double x, double y, int n) {
  const auto nodes = detail::bump_nodes(e.grid(), m);
  const double c = e.params().c;
  cd acc = 0.0;
  for (const auto& b : nodes) acc += b.w * covariant_sample(e, x - b.r, y - b.s, n) * std::polar(1.0, c * n * x * b.s);
  return acc;
}

}  // namespace qhm
