#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "qhm/core.hpp"
#include "qhm/parallel.hpp"

namespace qhm {

/// Slices of a field translated by whole multiples of (hbar mu, hbar nu).
///
/// Entry (q, m) holds (x,y) -> f(x - m hbar mu, y - m hbar nu, q) on the grid.
/// Every requested key is filled at construction, so lookups are read-only.
template <class Tag>
class ShiftCache {
 public:
  ShiftCache(const Field<Tag>& f, int m_lo, int m_hi) : grid_(f.grid()), m_lo_(m_lo), m_hi_(m_hi) {
    const int span = m_hi - m_lo + 1;
    const int nq = grid_.slices();
    slots_.resize(static_cast<std::size_t>(span) * nq);
    const double sx = f.params().step_x(), sy = f.params().step_y();
    parallel_for(slots_.size(), [&](std::size_t n) {
      const int q = static_cast<int>(n / span) - grid_.p_max;
      const int m = static_cast<int>(n % span) + m_lo;
      slots_[n] = shifted_slice(f, q, m * sx, m * sy);
    });
  }

  /// Sample at grid node (i, j); zero outside the p band.
  cd operator()(int q, int m, int i, int j) const {
    if (!grid_.in_band(q)) return 0.0;
    return slots_[slot(q, m)][static_cast<std::size_t>(i) * grid_.ny + j];
  }

  const std::vector<cd>& slice(int q, int m) const { return slots_[slot(q, m)]; }

 private:
  std::size_t slot(int q, int m) const {
    if (m < m_lo_ || m > m_hi_) throw InvalidArgument("shift outside cached range");
    return static_cast<std::size_t>(q + grid_.p_max) * (m_hi_ - m_lo_ + 1) + (m - m_lo_);
  }

  Grid grid_;
  int m_lo_, m_hi_;
  std::vector<std::vector<cd>> slots_;
};

/// Fiber-wise matrices of an operator on H' that preserves (x, y) fibers.
///
/// The fiber at grid point (i, j) acts on the momentum band -W..W, W = band().
/// Elements are assembled with W >= p_max; a wider band lets products be
/// formed without losing the terms that pass through |p| > p_max.
class BlockOperator {
 public:
  BlockOperator(const ManifoldParams& params, const Grid& grid, int band)
      : params_(params), grid_(grid), band_(band),
        fibers_(grid.slice_size(), Eigen::MatrixXcd::Zero(2 * band + 1, 2 * band + 1)) {}

  explicit BlockOperator(const Element& e, int extra = 0)
      : BlockOperator(e.params(), e.grid(), e.grid().p_max + extra) {
    if (extra < 0) throw InvalidArgument("band extension must be nonnegative");
    const int P = grid_.p_max, W = band_;
    ShiftCache<ElementTag> cache(e, -P - 2 * W, P + 2 * W);
    parallel_for(fibers_.size(), [&](std::size_t n) {
      const int i = static_cast<int>(n / grid_.ny), j = static_cast<int>(n % grid_.ny);
      auto& M = fibers_[n];
      for (int p = -W; p <= W; ++p)
        for (int m = -W; m <= W; ++m) {
          const int q = p - m;
          if (q < -P || q > P) continue;
          M(p + W, m + W) = cache(q, q - 2 * p, i, j);
        }
    });
  }

  const ManifoldParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  int band() const { return band_; }
  int dim() const { return 2 * band_ + 1; }

  const Eigen::MatrixXcd& fiber(int i, int j) const { return fibers_[static_cast<std::size_t>(i) * grid_.ny + j]; }
  Eigen::MatrixXcd& fiber(int i, int j) { return fibers_[static_cast<std::size_t>(i) * grid_.ny + j]; }
  const std::vector<Eigen::MatrixXcd>& fibers() const { return fibers_; }

  /// Central (2 p_max + 1) block of fiber (i, j).
  Eigen::MatrixXcd central(int i, int j) const {
    const int off = band_ - grid_.p_max, n = grid_.slices();
    return fiber(i, j).block(off, off, n, n);
  }

  BlockOperator operator*(const BlockOperator& o) const {
    check(o);
    BlockOperator out(params_, grid_, band_);
    for (std::size_t n = 0; n < fibers_.size(); ++n) out.fibers_[n] = fibers_[n] * o.fibers_[n];
    return out;
  }
  BlockOperator operator-(const BlockOperator& o) const {
    check(o);
    BlockOperator out(params_, grid_, band_);
    for (std::size_t n = 0; n < fibers_.size(); ++n) out.fibers_[n] = fibers_[n] - o.fibers_[n];
    return out;
  }
  BlockOperator adjoint() const {
    BlockOperator out(params_, grid_, band_);
    for (std::size_t n = 0; n < fibers_.size(); ++n) out.fibers_[n] = fibers_[n].adjoint();
    return out;
  }

  /// Acts fiber-wise on a state; entries outside the state band are zero.
  StateVector apply(const StateVector& xi) const {
    require_same(params_, xi.params(), grid_, xi.grid());
    StateVector out(params_, grid_);
    const int P = grid_.p_max, W = band_;
    for (int i = 0; i < grid_.nx; ++i)
      for (int j = 0; j < grid_.ny; ++j) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim());
        for (int p = -P; p <= P; ++p) v(p + W) = xi.at(p, i, j);
        Eigen::VectorXcd w = fiber(i, j) * v;
        for (int p = -P; p <= P; ++p) out.at(p, i, j) = w(p + W);
      }
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& f : fibers_) m = std::max(m, f.cwiseAbs().maxCoeff());
    return m;
  }

 private:
  void check(const BlockOperator& o) const {
    require_same(params_, o.params_, grid_, o.grid_);
    if (band_ != o.band_) throw Mismatch("block operators have different bands");
  }

  ManifoldParams params_;
  Grid grid_;
  int band_;
  std::vector<Eigen::MatrixXcd> fibers_;
};

/// (e xi)(x,y,p) = sum_q e(x - hbar(q-2p)mu, y - hbar(q-2p)nu, q) xi(x,y,p-q).
inline StateVector apply(const Element& e, const StateVector& xi) {
  require_same(e.params(), xi.params(), e.grid(), xi.grid());
  const Grid& g = e.grid();
  const int P = g.p_max;
  ShiftCache<ElementTag> cache(e, -3 * P, 3 * P);
  StateVector out(e.params(), g);
  parallel_for(static_cast<std::size_t>(g.slices()), [&](std::size_t s) {
    const int p = static_cast<int>(s) - P;
    for (int q = -P; q <= P; ++q) {
      if (!g.in_band(p - q)) continue;
      const auto& sh = cache.slice(q, q - 2 * p);
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) out.at(p, i, j) += sh[static_cast<std::size_t>(i) * g.ny + j] * xi.at(p - q, i, j);
    }
  });
  return out;
}

struct StarReport {
  Element product;
  /// Largest modulus among product slices with p_max < |n| <= 2 p_max.
  double discarded = 0.0;
};

namespace detail {

/// Product slices n in [-n_out, n_out] of the closed coefficient formula
/// (a*b)(u,v,n) = sum_q a(u + hbar(n-q)mu, v + hbar(n-q)nu, q) b(u - hbar q mu, v - hbar q nu, n-q).
inline std::vector<std::vector<cd>> star_slices(const Element& a, const Element& b, int n_out) {
  require_same(a.params(), b.params(), a.grid(), b.grid());
  const Grid& g = a.grid();
  const int P = g.p_max;
  const int reach = std::max(n_out + P, P);
  ShiftCache<ElementTag> ca(a, -reach, reach), cb(b, -P, P);
  std::vector<std::vector<cd>> out(2 * n_out + 1, std::vector<cd>(g.slice_size(), cd(0.0)));
  parallel_for(out.size(), [&](std::size_t s) {
    const int n = static_cast<int>(s) - n_out;
    auto& dst = out[s];
    for (int q = -P; q <= P; ++q) {
      if (!g.in_band(n - q)) continue;
      const auto& sa = ca.slice(q, -(n - q));
      const auto& sb = cb.slice(n - q, q);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += sa[k] * sb[k];
    }
  });
  return out;
}

}  // namespace detail

inline Element star(const Element& a, const Element& b) {
  auto s = detail::star_slices(a, b, a.grid().p_max);
  Element out(a.params(), a.grid());
  for (int p = -a.grid().p_max; p <= a.grid().p_max; ++p) std::ranges::copy(s[p + a.grid().p_max], out.slice(p).begin());
  return out;
}

/// Star product computed on the doubled band, clamped back to p_max.
inline StarReport star_with_report(const Element& a, const Element& b) {
  const int P = a.grid().p_max;
  auto s = detail::star_slices(a, b, 2 * P);
  StarReport r{Element(a.params(), a.grid()), 0.0};
  for (int n = -2 * P; n <= 2 * P; ++n) {
    const auto& sl = s[n + 2 * P];
    if (std::abs(n) <= P) {
      std::ranges::copy(sl, r.product.slice(n).begin());
    } else {
      for (const cd& v : sl) r.discarded = std::max(r.discarded, std::abs(v));
    }
  }
  return r;
}

/// a*(x,y,p) = conj(a(x,y,-p)).
inline Element adjoint(const Element& a) {
  Element out(a.params(), a.grid());
  const int P = a.grid().p_max;
  for (int p = -P; p <= P; ++p) {
    auto src = a.slice(-p);
    auto dst = out.slice(p);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = std::conj(src[k]);
  }
  return out;
}

struct NormEstimate {
  double value = 0.0;
  bool converged = true;
  int iterations = 0;
};

namespace detail {

/// Fixed pseudo-random start vector of length n.
inline const Eigen::VectorXcd& power_start(Eigen::Index n) {
  thread_local std::map<Eigen::Index, Eigen::VectorXcd> cache;
  auto [it, fresh] = cache.try_emplace(n);
  if (fresh) {
    std::mt19937_64 rng(0x5eedULL + static_cast<unsigned long long>(n));
    std::uniform_real_distribution<double> u(0.5, 1.5);
    it->second.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) it->second(k) = cd(u(rng), u(rng) - 1.0);
    it->second.normalize();
  }
  return it->second;
}

}  // namespace detail

/// Largest singular value by power iteration on M*M.
///
/// max_iter counts steps and is rounded up to a multiple of eight.
/// Stops once the Rayleigh quotient moves by less than tol relative and the
/// eigen-residual is below sqrt(tol); otherwise falls back to a dense
/// Hermitian eigensolve and reports converged = false. The estimate is a lower
/// bound; with a nearly degenerate top of the spectrum it can sit a few times
/// tol below the true value.
inline NormEstimate spectral_norm(const Eigen::MatrixXcd& M, double tol = 1e-10, int max_iter = 500) {
  NormEstimate r;
  if (M.size() == 0) return r;
  const Eigen::MatrixXcd A = M.adjoint() * M;
  const double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0) return r;

  Eigen::VectorXcd v = detail::power_start(A.cols());

  // eight steps per pass: the same iterates, normalised and tested every eighth step
  constexpr int kSteps = 8;
  Eigen::MatrixXcd B = A / scale;
  for (int k = 1; k < kSteps; k *= 2) B = B * B;
  Eigen::VectorXcd w(v.size()), Av(v.size());
  double lambda = 0.0;
  for (int it = 0; it < max_iter;) {
    w.noalias() = B * v;
    it += kSteps;
    r.iterations = it;
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
    Av.noalias() = A * v;
    const double next = v.dot(Av).real();
    const double res = (Av - next * v).norm();
    const bool settled = std::abs(next - lambda) <= tol * std::abs(next) && res <= std::sqrt(tol) * std::abs(next);
    lambda = next;
    if (settled) {
      r.value = std::sqrt(std::max(0.0, lambda));
      return r;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, Eigen::EigenvaluesOnly);
  r.value = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  r.converged = false;
  return r;
}

/// Max over fibers of the fiber spectral norm.
inline NormEstimate op_norm_estimate(const BlockOperator& B) {
  std::vector<NormEstimate> per(B.fibers().size());
  parallel_for(per.size(), [&](std::size_t n) { per[n] = spectral_norm(B.fibers()[n]); });
  NormEstimate best;
  for (const auto& r : per) {
    best.value = std::max(best.value, r.value);
    best.converged = best.converged && r.converged;
    best.iterations = std::max(best.iterations, r.iterations);
  }
  return best;
}

inline NormEstimate op_norm_estimate(const Element& e) { return op_norm_estimate(BlockOperator(e)); }

/// Norm of the truncated representation on H'.
inline double op_norm(const Element& e) { return op_norm_estimate(e).value; }
inline double op_norm(const BlockOperator& B) { return op_norm_estimate(B).value; }

}  // namespace qhm
