#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qhm/action.hpp"
#include "qhm/algebra.hpp"
#include "qhm/core.hpp"

namespace qhm {

/// Spectral d/dx of a field, taken through the x-periodic representative.
template <class Tag>
Field<Tag> x_derivative(const Field<Tag>& f) {
  const Grid& g = f.grid();
  Field<Tag> out(f.params(), g);
  SpectralAxis ax(g.nx, two_pi);
  std::vector<cd> psi(g.nx);
  for (int p = -g.p_max; p <= g.p_max; ++p)
    for (int j = 0; j < g.ny; ++j) {
      const double tw = f.twist(p, g.y(j));
      for (int i = 0; i < g.nx; ++i) psi[i] = f.at(p, i, j) * std::polar(1.0, -g.x(i) * tw);
      auto d = ax.derivative(psi);
      for (int i = 0; i < g.nx; ++i) out.at(p, i, j) = std::polar(1.0, g.x(i) * tw) * (d[i] + cd(0.0, tw) * psi[i]);
    }
  return out;
}

/// Spectral d/dy of a field (periodic in y).
template <class Tag>
Field<Tag> y_derivative(const Field<Tag>& f) {
  const Grid& g = f.grid();
  Field<Tag> out(f.params(), g);
  SpectralAxis ay(g.ny, 1.0);
  std::vector<cd> row(g.ny);
  for (int p = -g.p_max; p <= g.p_max; ++p)
    for (int i = 0; i < g.nx; ++i) {
      for (int j = 0; j < g.ny; ++j) row[j] = f.at(p, i, j);
      auto d = ay.derivative(row);
      for (int j = 0; j < g.ny; ++j) out.at(p, i, j) = d[j];
    }
  return out;
}

/// Generator of alpha: -d/dx.
inline Element delta1(const Element& e) { return -x_derivative(e); }

/// Generator of beta: i p c x f - d/dy f.
inline Element delta2(const Element& e) {
  Element out = -y_derivative(e);
  const Grid& g = e.grid();
  const double c = e.params().c;
  for (int p = -g.p_max; p <= g.p_max; ++p)
    for (int i = 0; i < g.nx; ++i) {
      const cd k(0.0, p * c * g.x(i));
      for (int j = 0; j < g.ny; ++j) out.at(p, i, j) += k * e.at(p, i, j);
    }
  return out;
}

/// Element of the module E = N (+) N.
struct CotangentPair {
  Element first;
  Element second;
};

inline CotangentPair dmap(const Element& e) { return {delta1(e), delta2(e)}; }

/// Left action a.(x1, x2) = (a x1, a x2).
inline CotangentPair left_mul(const Element& a, const CotangentPair& w) { return {star(a, w.first), star(a, w.second)}; }

/// Right action (x1, x2).b = (x1 b, x2 b).
inline CotangentPair right_mul(const CotangentPair& w, const Element& b) { return {star(w.first, b), star(w.second, b)}; }

struct ModuleNorms {
  double l = 0.0;
  double r = 0.0;
};

/// l = ||<w,w>_l||^{1/2}, r = ||<w,w>_r||^{1/2} on the truncated representation.
///
/// With A1, A2 the fiber matrices of the two components, l^2 is the largest
/// eigenvalue of A1 A1* + A2 A2* and r^2 that of A1* A1 + A2* A2, maximized
/// over fibers.
inline ModuleNorms module_norms(const CotangentPair& w) {
  require_same(w.first.params(), w.second.params(), w.first.grid(), w.second.grid());
  BlockOperator A(w.first), B(w.second);
  std::vector<ModuleNorms> per(A.fibers().size());
  parallel_for(per.size(), [&](std::size_t n) {
    const auto& a = A.fibers()[n];
    const auto& b = B.fibers()[n];
    Eigen::MatrixXcd wide(a.rows(), a.cols() + b.cols());
    wide << a, b;
    Eigen::MatrixXcd tall(a.rows() + b.rows(), a.cols());
    tall << a, b;
    per[n] = {spectral_norm(wide).value, spectral_norm(tall).value};
  });
  ModuleNorms m;
  for (const auto& v : per) {
    m.l = std::max(m.l, v.l);
    m.r = std::max(m.r, v.r);
  }
  return m;
}

/// max(||x||, ||d x||_l, ||d x||_r).
inline double lip_norm(const Element& e) {
  const auto m = module_norms(dmap(e));
  return std::max({op_norm(e), m.l, m.r});
}

/// Sampled supremum of a seminorm, a lower bound for the true supremum.
struct SeminormReport {
  std::string name;
  double value = 0.0;
  std::vector<double> samples;
  double argmax = 0.0;
  /// Flow attaining the sup: "alpha", "beta" or "gamma".
  std::string argmax_flow;
};

/// 24 logarithmically spaced points in [1e-3, 4].
inline std::vector<double> default_t_grid(int n = 24, double lo = 1e-3, double hi = 4.0) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(k) / (n - 1));
  return t;
}

/// L^{A,B,C}(x) = max over the grid of ||x - alpha_r x|| / r^A, ||x - beta_s x|| / s^B, ||x - gamma_t x|| / t^C.
inline SeminormReport holder_seminorm(const Element& e, double A, double B, double C,
                                      const std::vector<double>& t_grid = default_t_grid()) {
  for (double ex : {A, B, C})
    if (!(ex > 0.0 && ex <= 1.0)) throw InvalidArgument("Holder exponents must lie in (0, 1]");
  if (t_grid.empty()) throw InvalidArgument("t grid must be nonempty");
  for (double t : t_grid)
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("t grid must be positive");

  SeminormReport rep;
  rep.name = "L^{" + std::to_string(A) + "," + std::to_string(B) + "," + std::to_string(C) + "}";
  rep.samples = t_grid;
  std::vector<std::array<double, 3>> q(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t k) {
    const double t = t_grid[k];
    q[k] = {op_norm(e - alpha(e, t)) / std::pow(t, A), op_norm(e - beta(e, t)) / std::pow(t, B),
            op_norm(e - gamma(e, t)) / std::pow(t, C)};
  });
  static constexpr const char* flows[3] = {"alpha", "beta", "gamma"};
  rep.argmax = t_grid.front();
  rep.argmax_flow = flows[0];
  for (std::size_t k = 0; k < q.size(); ++k)
    for (int f = 0; f < 3; ++f)
      if (q[k][f] > rep.value) {
        rep.value = q[k][f];
        rep.argmax = t_grid[k];
        rep.argmax_flow = flows[f];
      }
  return rep;
}

struct ComparabilityReport {
  /// min over t of 4 sqrt(t/c) - ||gamma_t x - x||.
  double gamma_margin = 0.0;
  double gamma_argmin = 0.0;
  /// 2 max(||x||, L^{1,1,1/2}(x)) - ||x||_L.
  double lip_margin = 0.0;
  double lip = 0.0;
  double holder = 0.0;
  bool pass(double slack) const { return gamma_margin >= -slack && lip_margin >= -slack; }
};

/// Checks both comparability estimates for x = e / ||e||_L.
inline ComparabilityReport comparability_check(const Element& e, const std::vector<double>& t_grid = default_t_grid()) {
  const double L = lip_norm(e);
  if (!(L > 0.0)) throw InvalidArgument("element has zero Lipschitz norm");
  const Element x = e * cd(1.0 / L);
  ComparabilityReport rep;
  const double c = e.params().c;
  rep.gamma_margin = INFINITY;
  for (double t : t_grid) {
    const double m = 4.0 * std::sqrt(t / c) - op_norm(gamma(x, t) - x);
    if (m < rep.gamma_margin) {
      rep.gamma_margin = m;
      rep.gamma_argmin = t;
    }
  }
  rep.lip = lip_norm(x);
  rep.holder = holder_seminorm(x, 1.0, 1.0, 0.5, t_grid).value;
  rep.lip_margin = 2.0 * std::max(op_norm(x), rep.holder) - rep.lip;
  return rep;
}

}  // namespace qhm
