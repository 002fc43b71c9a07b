#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "qhm/action.hpp"
#include "qhm/algebra.hpp"
#include "qhm/metric.hpp"

namespace qhm {

/// tau(e) = mean of the p = 0 slice.
inline cd trace(const Element& e) {
  cd acc = 0.0;
  for (const cd& v : e.slice(0)) acc += v;
  return acc / static_cast<double>(e.grid().slice_size());
}

/// Indicator of the p = 0 fundamental domain.
inline StateVector cyclic_vector(const ManifoldParams& params, const Grid& grid) {
  StateVector xi(params, grid);
  for (cd& v : xi.slice(0)) v = 1.0;
  return xi;
}

/// <a xi0, b xi0> on H'.
inline cd gns_inner(const Element& a, const Element& b) {
  require_same(a.params(), b.params(), a.grid(), b.grid());
  const StateVector xi0 = cyclic_vector(a.params(), a.grid());
  return inner(apply(a, xi0), apply(b, xi0));
}

/// tau(b* a).
inline cd gns_inner_trace(const Element& a, const Element& b) { return trace(star(adjoint(b), a)); }

/// sum_p sum_ij a conj(b) dx dy / 2pi.
inline cd gns_inner_coefficients(const Element& a, const Element& b) { return inner(a, b); }

/// max over g of |tau(L_g e) - tau(e)|.
inline double trace_invariance_check(const Element& e, const std::vector<GroupPoint>& samples) {
  const cd t0 = trace(e);
  double worst = 0.0;
  for (const auto& g : samples) worst = std::max(worst, std::abs(trace(act(e, g)) - t0));
  return worst;
}

namespace detail {

/// Closed-form Laplacian of one slice p of an element, row-major (i, j).
inline std::vector<cd> laplacian_slice(const ManifoldParams& pr, const Grid& g, int p, std::span<const cd> f) {
  const double c = pr.c;
  SpectralAxis ax(g.nx, two_pi), ay(g.ny, 1.0);
  std::vector<cd> out(g.slice_size());
  std::vector<cd> psi(g.nx), row(g.ny);
  // Phi_xx = e^{icpxy} (Psi_xx + 2icpy Psi_x - c^2 p^2 y^2 Psi)
  for (int j = 0; j < g.ny; ++j) {
    const double k = c * p * g.y(j);
    for (int i = 0; i < g.nx; ++i) psi[i] = f[static_cast<std::size_t>(i) * g.ny + j] * std::polar(1.0, -g.x(i) * k);
    auto d1 = ax.derivative(psi, 1);
    auto d2 = ax.derivative(psi, 2);
    for (int i = 0; i < g.nx; ++i)
      out[static_cast<std::size_t>(i) * g.ny + j] =
          std::polar(1.0, g.x(i) * k) * (d2[i] + cd(0.0, 2.0 * k) * d1[i] - k * k * psi[i]);
  }
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    for (int j = 0; j < g.ny; ++j) row[j] = f[static_cast<std::size_t>(i) * g.ny + j];
    auto fy = ay.derivative(row, 1);
    auto fyy = ay.derivative(row, 2);
    for (int j = 0; j < g.ny; ++j)
      out[static_cast<std::size_t>(i) * g.ny + j] +=
          -(p * p * c * c * x * x) * row[j] - cd(0.0, 2.0 * p * c * x) * fy[j] + fyy[j];
  }
  return out;
}

}  // namespace detail

/// Delta f = f_xx - p^2 c^2 x^2 f - 2ipcx f_y + f_yy.
inline Element laplacian(const Element& e) {
  Element out(e.params(), e.grid());
  for (int p = -e.grid().p_max; p <= e.grid().p_max; ++p)
    std::ranges::copy(detail::laplacian_slice(e.params(), e.grid(), p, e.slice(p)), out.slice(p).begin());
  return out;
}

/// delta1(delta1 f) + delta2(delta2 f).
inline Element laplacian_composed(const Element& e) { return delta1(delta1(e)) + delta2(delta2(e)); }

struct SliceSpectrum {
  int p = 0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  int kernel_dim = 0;
  /// max |H - H*| of the assembled matrix before symmetrization.
  double asymmetry = 0.0;
};

/// Per-slice eigendecomposition of -Delta, giving the contraction semigroup e^{t Delta}.
class HeatOperator {
 public:
  explicit HeatOperator(const ManifoldParams& params, const Grid& grid, double kernel_tol = 1e-8)
      : params_(params), grid_(grid) {
    params_.validate();
    grid_.validate();
    const int n = static_cast<int>(grid_.slice_size());
    slices_.resize(grid_.slices());
    summaries_.resize(grid_.slices());
    parallel_for(slices_.size(), [&](std::size_t s) {
      const int p = static_cast<int>(s) - grid_.p_max;
      Eigen::MatrixXcd H(n, n);
      std::vector<cd> unit(n, cd(0.0));
      for (int k = 0; k < n; ++k) {
        unit[k] = 1.0;
        auto col = detail::laplacian_slice(params_, grid_, p, unit);
        for (int r = 0; r < n; ++r) H(r, k) = -col[r];
        unit[k] = 0.0;
      }
      SliceSpectrum& sum = summaries_[s];
      sum.p = p;
      sum.asymmetry = (H - H.adjoint()).cwiseAbs().maxCoeff();
      Eigen::MatrixXcd Hs = 0.5 * (H + H.adjoint());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hs);
      slices_[s].values = es.eigenvalues();
      slices_[s].vectors = es.eigenvectors();
      sum.min_eigenvalue = es.eigenvalues().minCoeff();
      sum.max_eigenvalue = es.eigenvalues().maxCoeff();
      const double tol = kernel_tol * std::max(1.0, sum.max_eigenvalue);
      for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()(k)) <= tol) ++sum.kernel_dim;
    });
    for (const auto& s : summaries_)
      if (s.min_eigenvalue < -1e-6)
        throw Error("negative eigenvalue " + std::to_string(s.min_eigenvalue) + " in slice " + std::to_string(s.p) +
                    ": discretization fault");
  }

  const std::vector<SliceSpectrum>& summaries() const { return summaries_; }
  const Eigen::VectorXd& eigenvalues(int p) const { return slices_[p + grid_.p_max].values; }
  const Eigen::MatrixXcd& eigenvectors(int p) const { return slices_[p + grid_.p_max].vectors; }

  /// Spectral image of e under lambda -> e^{-t lambda}.
  Element apply(const Element& e, double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("heat time must be nonnegative");
    require_same(params_, e.params(), grid_, e.grid());
    Element out(params_, grid_);
    const int n = static_cast<int>(grid_.slice_size());
    for (int p = -grid_.p_max; p <= grid_.p_max; ++p) {
      const auto& sl = slices_[p + grid_.p_max];
      Eigen::Map<const Eigen::VectorXcd> v(e.slice(p).data(), n);
      Eigen::VectorXcd c = sl.vectors.adjoint() * v;
      for (int k = 0; k < n; ++k) c(k) *= std::exp(-t * sl.values(k));
      Eigen::VectorXcd w = sl.vectors * c;
      std::copy(w.data(), w.data() + n, out.slice(p).begin());
    }
    return out;
  }

 private:
  struct Slice {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
  };
  ManifoldParams params_;
  Grid grid_;
  std::vector<Slice> slices_;
  std::vector<SliceSpectrum> summaries_;
};

inline Element heat(const Element& e, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("heat time must be nonnegative");
  return HeatOperator(e.params(), e.grid()).apply(e, t);
}

struct PositivityProbe {
  /// Smallest fiber eigenvalue of the evolved positive element.
  double min_eigenvalue = 0.0;
  /// max over t of ||h||_gns - ||a||_gns (nonpositive for a contraction).
  double gns_excess = 0.0;
  /// max over t of op_norm(h) - op_norm(a).
  double norm_excess = 0.0;
};

/// Evolves a = e* e and inspects positivity and contraction at each t.
inline PositivityProbe heat_positivity_probe(const HeatOperator& H, const Element& e, const std::vector<double>& t_samples) {
  const Element a = star(adjoint(e), e);
  const double a_gns = std::sqrt(std::max(0.0, gns_inner_coefficients(a, a).real()));
  const double a_op = op_norm(a);
  PositivityProbe r;
  r.min_eigenvalue = INFINITY;
  r.gns_excess = -INFINITY;
  r.norm_excess = -INFINITY;
  for (double t : t_samples) {
    const Element h = H.apply(a, t);
    BlockOperator B(h);
    std::vector<double> mins(B.fibers().size());
    parallel_for(mins.size(), [&](std::size_t n) {
      const Eigen::MatrixXcd M = 0.5 * (B.fibers()[n] + B.fibers()[n].adjoint());
      mins[n] = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    });
    for (double m : mins) r.min_eigenvalue = std::min(r.min_eigenvalue, m);
    r.gns_excess = std::max(r.gns_excess, std::sqrt(std::max(0.0, gns_inner_coefficients(h, h).real())) - a_gns);
    r.norm_excess = std::max(r.norm_excess, op_norm(h) - a_op);
  }
  return r;
}

}  // namespace qhm
