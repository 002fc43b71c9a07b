#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qhm/core.hpp"
#include "qhm/metric.hpp"
#include "qhm/parallel.hpp"

namespace qhm {

/// f(x, y, theta) = sum_p e(x, y, p) e^{i p theta} for a commutative element.
class ClassicalFunction {
 public:
  ClassicalFunction(const Element& e, int n_theta) : e_(e), n_theta_(n_theta) {
    const Grid& g = e.grid();
    samples_.assign(g.slice_size() * n_theta, cd(0.0));
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < n_theta; ++k) {
          const double th = theta(k);
          cd acc = 0.0;
          for (int p = -g.p_max; p <= g.p_max; ++p) acc += e.at(p, i, j) * std::polar(1.0, p * th);
          samples_[index(i, j, k)] = acc;
        }
  }

  const Element& source() const { return e_; }
  int n_theta() const { return n_theta_; }
  double theta(int k) const { return two_pi * k / n_theta_; }

  const cd& at(int i, int j, int k) const { return samples_[index(i, j, k)]; }
  const std::vector<cd>& samples() const { return samples_; }

  /// Value at an arbitrary point, through the covariant extension of the source.
  cd value(double x, double y, double th) const {
    cd acc = 0.0;
    for (int p = -e_.grid().p_max; p <= e_.grid().p_max; ++p)
      acc += covariant_sample(e_, x, y, p) * std::polar(1.0, p * th);
    return acc;
  }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * e_.grid().ny + j) * n_theta_ + k;
  }

  Element e_;
  int n_theta_;
  std::vector<cd> samples_;
};

inline ClassicalFunction to_function(const Element& e, int n_theta = -1) {
  if (e.params().hbar != 0.0) throw InvalidArgument("classical reduction requires hbar = 0");
  const int need = e.grid().slices();
  if (n_theta < 0) n_theta = need;
  if (n_theta < need) throw InvalidArgument("theta grid needs at least 2 p_max + 1 points");
  return ClassicalFunction(e, n_theta);
}

/// max |f(x + 2pi, y, theta) - f(x, y, theta + 2pi c y)| over random points, relative to max |f|.
inline double gluing_residual(const ClassicalFunction& f, int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, two_pi), uy(0.0, 1.0);
  const double c = f.source().params().c;
  double scale = 0.0;
  for (const cd& v : f.samples()) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    const double x = ux(rng), y = uy(rng), th = ux(rng);
    worst = std::max(worst, std::abs(f.value(x + two_pi, y, th) - f.value(x, y, th + two_pi * c * y)));
  }
  return scale > 0.0 ? worst / scale : worst;
}

/// Point (x, y, z) of the Heisenberg group.
using HPoint = std::array<double, 3>;

/// (x,y,z)(a,b,d) = (x + a, y + b, z + d + y a); the frame d/dx, d/dy + x d/dz is right-invariant.
inline HPoint group_mul(const HPoint& g, const HPoint& h) { return {g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[1] * h[0]}; }

/// Piecewise-constant controls on n equal segments of [0, 1].
struct HorizontalPath {
  std::vector<std::array<double, 2>> controls;
  int n_segments() const { return static_cast<int>(controls.size()); }
};

struct PathResult {
  HPoint end{};
  double length = 0.0;
};

/// Exact integration of x' = u1, y' = u2, z' = x u2.
inline PathResult integrate_path(const HorizontalPath& path, const HPoint& start) {
  if (path.controls.empty()) throw InvalidArgument("path needs at least one segment");
  const double h = 1.0 / path.n_segments();
  PathResult r{start, 0.0};
  for (const auto& u : path.controls) {
    r.end[2] += u[1] * (r.end[0] * h + 0.5 * u[0] * h * h);
    r.end[0] += u[0] * h;
    r.end[1] += u[1] * h;
    r.length += std::hypot(u[0], u[1]) * h;
  }
  return r;
}

struct DistanceResult {
  double upper_bound = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  HorizontalPath path;
};

struct DistanceOptions {
  int n_segments = 32;
  int restarts = 8;
  int iters = 400;
  std::uint64_t seed = 1;
  double gap_tol = 1e-6;
};

namespace detail {

using Vec = Eigen::VectorXd;

/// Endpoint map u -> end of the path from the origin, with its 3 x 2n Jacobian.
/// Layout: u = (u1_0, u2_0, u1_1, u2_1, ...).
inline Eigen::Vector3d endpoint(const Vec& u, const HPoint& start, Eigen::Matrix<double, 3, Eigen::Dynamic>* J) {
  const int n = static_cast<int>(u.size() / 2);
  const double h = 1.0 / n;
  double x = start[0], y = start[1], z = start[2];
  if (J) J->setZero(3, u.size());
  // suffix sums of u2 for dz/du1
  std::vector<double> tail(n + 1, 0.0);
  for (int k = n - 1; k >= 0; --k) tail[k] = tail[k + 1] + u(2 * k + 1);
  for (int k = 0; k < n; ++k) {
    const double u1 = u(2 * k), u2 = u(2 * k + 1);
    if (J) {
      (*J)(0, 2 * k) = h;
      (*J)(1, 2 * k + 1) = h;
      (*J)(2, 2 * k + 1) = x * h + 0.5 * u1 * h * h;
      (*J)(2, 2 * k) = 0.5 * u2 * h * h + tail[k + 1] * h * h;
    }
    z += u2 * (x * h + 0.5 * u1 * h * h);
    x += u1 * h;
    y += u2 * h;
  }
  return {x, y, z};
}

/// Minimizes fn by BFGS with backtracking; fn(u, grad) returns the value.
template <class Fn>
int bfgs(Vec& u, Fn&& fn, int max_iter, double gtol) {
  const Eigen::Index n = u.size();
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  Vec g(n), g_new(n);
  double f = fn(u, g);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < gtol) break;
    Vec d = -Hinv * g;
    if (d.dot(g) >= 0.0) {
      Hinv.setIdentity();
      d = -g;
    }
    double step = 1.0, f_new = 0.0;
    Vec u_new;
    for (int ls = 0; ls < 60; ++ls) {
      u_new = u + step * d;
      f_new = fn(u_new, g_new);
      if (f_new <= f + 1e-4 * step * g.dot(d)) break;
      step *= 0.5;
    }
    if (!(f_new < f) && step < 1e-15) break;
    const Vec s = u_new - u, yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-14) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * yv.transpose()) * Hinv * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    u = u_new;
    f = f_new;
    g = g_new;
  }
  return it;
}

/// Minimum-norm Gauss-Newton corrections onto the endpoint constraint.
inline void polish(Vec& u, const HPoint& start, const Eigen::Vector3d& target) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> J;
  for (int it = 0; it < 20; ++it) {
    const Eigen::Vector3d c = endpoint(u, start, &J) - target;
    if (c.norm() < 1e-13) return;
    const Eigen::Matrix3d JJ = J * J.transpose();
    u -= J.transpose() * JJ.ldlt().solve(c);
  }
}

inline double path_length(const Vec& u) {
  const int n = static_cast<int>(u.size() / 2);
  double L = 0.0;
  for (int k = 0; k < n; ++k) L += std::hypot(u(2 * k), u(2 * k + 1));
  return L / n;
}

inline HorizontalPath to_path(const Vec& u) {
  HorizontalPath p;
  for (Eigen::Index k = 0; k < u.size() / 2; ++k) p.controls.push_back({u(2 * k), u(2 * k + 1)});
  return p;
}

/// Energy minimization under the endpoint constraint by an augmented Lagrangian.
/// Energy and length share minimizers among constant-speed paths, and energy is smooth.
inline DistanceResult solve_from(Vec u, const HPoint& start, const HPoint& end, const DistanceOptions& opt) {
  const int n2 = static_cast<int>(u.size());
  const double h = 2.0 / n2;
  const Eigen::Vector3d target(end[0], end[1], end[2]);
  Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
  double rho = 10.0;
  DistanceResult r;
  Eigen::Matrix<double, 3, Eigen::Dynamic> J;
  for (int round = 0; round < 6; ++round) {
    auto fn = [&](const Vec& v, Vec& grad) {
      const Eigen::Vector3d c = endpoint(v, start, &J) - target;
      grad = 2.0 * h * v + J.transpose() * (lambda + rho * c);
      return h * v.squaredNorm() + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
    };
    r.iterations += bfgs(u, fn, opt.iters, 1e-10);
    const Eigen::Vector3d c = endpoint(u, start, nullptr) - target;
    lambda += rho * c;
    if (c.norm() < opt.gap_tol * 1e-2) break;
    rho *= 10.0;
  }
  polish(u, start, target);
  r.gap = (endpoint(u, start, nullptr) - target).norm();
  r.upper_bound = path_length(u);
  r.path = to_path(u);
  return r;
}

inline Vec controls_of(const HorizontalPath& p) {
  Vec u(2 * p.n_segments());
  for (int k = 0; k < p.n_segments(); ++k) {
    u(2 * k) = p.controls[k][0];
    u(2 * k + 1) = p.controls[k][1];
  }
  return u;
}

inline bool better(const DistanceResult& a, const DistanceResult& b, double tol) {
  const bool fa = a.gap < tol, fb = b.gap < tol;
  if (fa != fb) return fa;
  if (!fa) return a.gap < b.gap;
  return a.upper_bound < b.upper_bound;
}

}  // namespace detail

/// Upper bound for the Carnot-Caratheodory distance on the group, by direct transcription.
///
/// Restart 0 starts from the straight segment in (x, y); the others from random
/// controls. Throws ConvergenceError when no restart closes the endpoint gap.
inline DistanceResult cc_distance_upper(const HPoint& start, const HPoint& end, const DistanceOptions& opt = {}) {
  if (opt.n_segments < 4) throw InvalidArgument("need at least 4 segments");
  if (opt.restarts < 1) throw InvalidArgument("need at least one restart");
  const int n = opt.n_segments;
  const double dx = end[0] - start[0], dy = end[1] - start[1];
  const double spread = std::hypot(dx, dy) + 2.0 * std::sqrt(std::abs(end[2] - start[2])) + 0.5;

  std::vector<detail::Vec> inits;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  for (int r = 0; r < opt.restarts; ++r) {
    detail::Vec u(2 * n);
    for (int k = 0; k < n; ++k) {
      u(2 * k) = dx + (r == 0 ? 0.0 : spread * nd(rng));
      u(2 * k + 1) = dy + (r == 0 ? 0.0 : spread * nd(rng));
    }
    inits.push_back(u);
  }
  std::vector<DistanceResult> results(inits.size());
  parallel_for(inits.size(), [&](std::size_t r) { results[r] = detail::solve_from(inits[r], start, end, opt); });

  DistanceResult best;
  for (const auto& r : results) {
    if (detail::better(r, best, opt.gap_tol)) {
      const int its = best.iterations;
      best = r;
      best.iterations += its;
    } else {
      best.iterations += r.iterations;
    }
  }
  if (!(best.gap < opt.gap_tol))
    throw ConvergenceError("endpoint gap " + std::to_string(best.gap) + " above tolerance", best.gap);
  return best;
}

/// Doubles the segment count of a feasible path and re-optimizes from it.
/// The split path is itself feasible with the same length, so the returned
/// bound never exceeds the coarse one.
inline DistanceResult refine(const DistanceResult& coarse, const HPoint& start, const HPoint& end,
                             const DistanceOptions& opt = {}) {
  HorizontalPath split;
  for (const auto& u : coarse.path.controls) {
    split.controls.push_back(u);
    split.controls.push_back(u);
  }
  DistanceResult warm;
  warm.path = split;
  auto pr = integrate_path(split, start);
  warm.upper_bound = pr.length;
  warm.gap = std::sqrt(std::pow(pr.end[0] - end[0], 2) + std::pow(pr.end[1] - end[1], 2) + std::pow(pr.end[2] - end[2], 2));
  DistanceResult fine = detail::solve_from(detail::controls_of(split), start, end, opt);
  fine.iterations += coarse.iterations;
  return detail::better(fine, warm, opt.gap_tol) ? fine : warm;
}

/// Function on the Heisenberg group with its horizontal derivatives X = d/dx, Y = d/dy + x d/dz.
struct ChartFunction {
  std::function<double(double, double, double)> f;
  std::function<double(double, double, double)> Xf;
  std::function<double(double, double, double)> Yf;
};

/// Chart function of a self-adjoint-in-theta commutative element, f(x,y,z) = Re sum_p e(x,y,p) e^{-ipcz}.
inline ChartFunction chart_function(const Element& e) {
  if (e.params().hbar != 0.0) throw InvalidArgument("classical reduction requires hbar = 0");
  const double c = e.params().c;
  auto eval = [c](const Element& src) {
    return [src, c](double x, double y, double z) {
      cd acc = 0.0;
      for (int p = -src.grid().p_max; p <= src.grid().p_max; ++p)
        acc += covariant_sample(src, x, y, p) * std::polar(1.0, -p * c * z);
      return acc.real();
    };
  };
  return {eval(e), eval(-delta1(e)), eval(-delta2(e))};
}

struct LipschitzRow {
  HPoint start{}, end{};
  double upper_bound = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double ratio = 0.0;
};

struct LipschitzReport {
  /// sup over the chart grid of sqrt(|Xf|^2 + |Yf|^2).
  double gradient_sup = 0.0;
  double max_ratio = 0.0;
  std::vector<LipschitzRow> rows;
  bool pass = false;
};

/// Compares sampled difference quotients against the sup of the horizontal gradient.
inline LipschitzReport lipschitz_check(const ChartFunction& F, int pairs, std::uint64_t seed, double tol = 0.02,
                                       const DistanceOptions& opt = {}, int chart_n = 48) {
  LipschitzReport rep;
  for (int a = 0; a < chart_n; ++a)
    for (int b = 0; b < chart_n; ++b)
      for (int k = 0; k < 8; ++k) {
        const double x = two_pi * a / chart_n, y = static_cast<double>(b) / chart_n, z = two_pi * k / 8;
        rep.gradient_sup = std::max(rep.gradient_sup, std::hypot(F.Xf(x, y, z), F.Yf(x, y, z)));
      }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, two_pi), uy(0.0, 1.0), ud(-0.6, 0.6), uz(-0.1, 0.1);
  std::vector<std::pair<HPoint, HPoint>> pts;
  for (int n = 0; n < pairs; ++n) {
    HPoint s{ux(rng), uy(rng), ux(rng)};
    HPoint e;
    switch (n % 3) {
      case 0: e = {s[0] + ud(rng), s[1], s[2]}; break;
      case 1: e = {s[0], s[1] + ud(rng), s[2]}; break;
      default: e = {s[0] + ud(rng), s[1] + ud(rng), s[2] + uz(rng)}; break;
    }
    pts.emplace_back(s, e);
  }
  rep.rows.resize(pts.size());
  for (std::size_t n = 0; n < pts.size(); ++n) {
    const auto& [s, e] = pts[n];
    DistanceOptions o = opt;
    o.seed = opt.seed + n;
    auto d = cc_distance_upper(s, e, o);
    if (d.upper_bound < 1e-8) throw InvalidArgument("degenerate pair: distance bound below 1e-8");
    LipschitzRow& row = rep.rows[n];
    row.start = s;
    row.end = e;
    row.upper_bound = d.upper_bound;
    row.gap = d.gap;
    row.iterations = d.iterations;
    row.ratio = std::abs(F.f(e[0], e[1], e[2]) - F.f(s[0], s[1], s[2])) / d.upper_bound;
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
  }
  rep.pass = rep.max_ratio <= rep.gradient_sup * (1.0 + tol) + 1e-12;
  return rep;
}

}  // namespace qhm
