#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qhm/action.hpp"
#include "qhm/algebra.hpp"
#include "qhm/classical.hpp"
#include "qhm/core.hpp"
#include "qhm/io.hpp"
#include "qhm/metric.hpp"
#include "qhm/spectral.hpp"

namespace qhm {

struct VerifyConfig {
  ManifoldParams params = ManifoldParams::desk();
  Grid grid = Grid::desk();
  std::uint64_t seed = 1;
  /// Overrides keyed by check name.
  std::map<std::string, double> tolerances;
};

inline json to_json(const VerifyConfig& c) {
  json tol = json::object();
  for (const auto& [k, v] : c.tolerances) tol[k] = v;
  return {{"params", to_json(c.params)}, {"grid", to_json(c.grid)}, {"seed", c.seed}, {"tolerances", tol}};
}

class VerifyContext {
 public:
  explicit VerifyContext(VerifyConfig cfg) : cfg_(std::move(cfg)) {}

  const VerifyConfig& config() const { return cfg_; }
  const ManifoldParams& params() const { return cfg_.params; }
  const Grid& grid() const { return cfg_.grid; }

  ManifoldParams commutative() const {
    ManifoldParams p = cfg_.params;
    p.hbar = 0.0;
    return p;
  }

  double tol(const std::string& name, double fallback) const {
    auto it = cfg_.tolerances.find(name);
    return it == cfg_.tolerances.end() ? fallback : it->second;
  }

  std::uint64_t seed(std::uint64_t stream, std::uint64_t k) const {
    std::uint64_t z = cfg_.seed * 0x9E3779B97F4A7C15ULL + (stream << 32) + k;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  Element element(std::uint64_t stream, std::uint64_t k, double decay = 1.0, int support = -1) const {
    RandomOptions o;
    o.support = support;
    return random_element(cfg_.params, cfg_.grid, seed(stream, k), decay, o);
  }

  const HeatOperator& heat() {
    if (!heat_) heat_ = std::make_unique<HeatOperator>(cfg_.params, cfg_.grid);
    return *heat_;
  }

 private:
  VerifyConfig cfg_;
  std::unique_ptr<HeatOperator> heat_;
};

/// Pass iff measured <= tolerance; margin = tolerance - measured.
inline CheckResult upper(const std::string& name, const std::string& ref, double measured, double tolerance) {
  return {name, ref, tolerance - measured, measured <= tolerance, measured, tolerance};
}

/// Pass iff measured >= threshold; margin = measured - threshold.
inline CheckResult lower(const std::string& name, const std::string& ref, double measured, double threshold) {
  return {name, ref, measured - threshold, measured >= threshold, measured, threshold};
}

struct CheckSpec {
  std::string name;
  /// Criterion number (1..13) when the check belongs to an acceptance criterion, else 0.
  int criterion = 0;
  std::vector<std::string> tags;
  std::string paper_ref;
  std::function<CheckResult(VerifyContext&, const CheckSpec&)> run;
};

namespace checks {

inline double rel(const Element& a, const Element& b) {
  const double s = std::max(a.max_abs(), b.max_abs());
  return s > 0.0 ? (a - b).max_abs() / s : 0.0;
}

/// max |C - A B| / max |A B| over central fiber blocks.
inline double block_rel(const BlockOperator& C, const BlockOperator& AB) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < C.grid().nx; ++i)
    for (int j = 0; j < C.grid().ny; ++j) {
      num = std::max(num, (C.central(i, j) - AB.central(i, j)).cwiseAbs().maxCoeff());
      den = std::max(den, AB.central(i, j).cwiseAbs().maxCoeff());
    }
  return den > 0.0 ? num / den : num;
}

inline std::vector<GroupPoint> random_group_points(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<GroupPoint> g(n);
  for (auto& p : g) p = {u(rng), u(rng), 3.0 * u(rng)};
  return g;
}

inline cd probe_f(double x, double y) { return cd(std::cos(x) + 0.5 * std::sin(2.0 * x), std::sin(two_pi * y)); }

/// Least-squares slope of log(err) against log(h).
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double x = std::log(h[k]), y = std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace checks

inline std::vector<CheckSpec> registry() {
  using namespace checks;
  std::vector<CheckSpec> r;
  auto add = [&](std::string name, int crit, std::vector<std::string> tags, std::string ref,
                 std::function<CheckResult(VerifyContext&, const CheckSpec&)> fn) {
    r.push_back({std::move(name), crit, std::move(tags), std::move(ref), std::move(fn)});
  };

  // ---- core
  add("core.covariance_wrap", 0, {"core", "invariant"}, "quasi-periodicity of element coefficients in x",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(1, 0);
        std::mt19937_64 rng(c.seed(1, 1));
        std::uniform_real_distribution<double> ux(0.0, two_pi), uy(0.0, 1.0);
        std::uniform_int_distribution<int> up(-c.grid().p_max, c.grid().p_max);
        double worst = 0.0;
        for (int n = 0; n < 100; ++n) {
          const double x = ux(rng), y = uy(rng);
          const int p = up(rng);
          const cd base = covariant_sample(e, x, y, p);
          const cd wrapped = covariant_sample(e, x + two_pi, y, p);
          const cd expect = std::polar(1.0, two_pi * c.params().c * p * y) * base;
          worst = std::max(worst, std::abs(wrapped - expect) / std::max(std::abs(expect), 1e-300));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-10));
      });

  add("core.shift_roundtrip", 0, {"core", "invariant"}, "exact translates on band-limited samples",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(2, 0);
        std::mt19937_64 rng(c.seed(2, 1));
        std::uniform_real_distribution<double> ur(-3.0, 3.0);
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const double r = ur(rng);
          worst = std::max(worst, (shift_x(shift_x(e, r), -r) - e).max_abs());
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("core.state_norm", 0, {"core", "invariant"}, "norm of the GNS space",
      [](VerifyContext& c, const CheckSpec& s) {
        std::mt19937_64 rng(c.seed(3, 0));
        std::normal_distribution<double> nd;
        double worst = 0.0;
        for (int n = 0; n < 10; ++n) {
          const StateVector xi = random_state(c.params(), c.grid(), c.seed(3, n + 1));
          const cd lam(nd(rng), nd(rng));
          const double a = norm(xi);
          if (a < 0.0) worst = INFINITY;
          worst = std::max(worst, std::abs(norm(xi * lam) - std::abs(lam) * a) / (std::abs(lam) * a));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-12));
      });

  // ---- algebra
  add("algebra.star_fidelity", 1, {"algebra", "acceptance"}, "star product realizes composition of the action",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(10, 2 * n, 1.0, 2), b = c.element(10, 2 * n + 1, 1.0, 2);
          BlockOperator A(a, 2), B(b, 2), C(star(a, b), 2);
          worst = std::max(worst, block_rel(C, A * B));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("algebra.adjoint_formula", 2, {"algebra", "acceptance"}, "involution is the operator adjoint",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(11, n);
          BlockOperator A(a), As(adjoint(a));
          worst = std::max(worst, block_rel(As, A.adjoint()));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-10));
      });

  add("algebra.c_star_identity", 2, {"algebra", "acceptance", "invariant"}, "C*-identity of the represented algebra",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        const int half = c.grid().p_max / 2;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(12, n, 2.0, half);
          const double na = op_norm(a);
          worst = std::max(worst, std::abs(op_norm(star(adjoint(a), a)) - na * na) / (na * na));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-6));
      });

  add("algebra.associativity", 0, {"algebra", "invariant"}, "associativity of the star product",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        const int third = c.grid().p_max / 3;
        for (int n = 0; n < 10; ++n) {
          const Element a = c.element(13, 3 * n, 1.0, third), b = c.element(13, 3 * n + 1, 1.0, third),
                        d = c.element(13, 3 * n + 2, 1.0, third);
          worst = std::max(worst, rel(star(a, star(b, d)), star(star(a, b), d)));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-8));
      });

  add("algebra.apply_bound", 0, {"algebra", "invariant"}, "action is bounded by the operator norm",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = -INFINITY;
        for (int n = 0; n < 50; ++n) {
          const Element e = c.element(14, n);
          const StateVector xi = random_state(c.params(), c.grid(), c.seed(15, n));
          worst = std::max(worst, norm(apply(e, xi)) - op_norm(e) * norm(xi));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("algebra.apply_linearity", 0, {"algebra", "invariant"}, "action is bilinear",
      [](VerifyContext& c, const CheckSpec& s) {
        std::mt19937_64 rng(c.seed(16, 0));
        std::normal_distribution<double> nd;
        double worst = 0.0;
        for (int n = 0; n < 5; ++n) {
          const Element a = c.element(16, 4 * n + 1), b = c.element(16, 4 * n + 2);
          const StateVector x = random_state(c.params(), c.grid(), c.seed(16, 4 * n + 3)),
                            y = random_state(c.params(), c.grid(), c.seed(16, 4 * n + 4));
          const cd l(nd(rng), nd(rng)), m(nd(rng), nd(rng));
          const StateVector lhs1 = apply(a * l + b * m, x), rhs1 = apply(a, x) * l + apply(b, x) * m;
          const StateVector lhs2 = apply(a, x * l + y * m), rhs2 = apply(a, x) * l + apply(a, y) * m;
          worst = std::max({worst, norm(lhs1 - rhs1) / norm(rhs1), norm(lhs2 - rhs2) / norm(rhs2)});
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-12));
      });

  add("algebra.apply_matches_blocks", 0, {"algebra", "invariant"}, "action preserves (x, y) fibers",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 10; ++n) {
          const Element e = c.element(17, n);
          const StateVector xi = random_state(c.params(), c.grid(), c.seed(18, n));
          const StateVector a = apply(e, xi), b = BlockOperator(e).apply(xi);
          worst = std::max(worst, norm(a - b) / norm(b));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-10));
      });

  // ---- action
  add("action.commutant_residuals", 3, {"action", "acceptance"}, "elements commute with V_f, W_k and X_r",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const auto r = commutant_residuals(c.element(20, n), probe_f, 1, 1, 10, c.seed(21, n));
          worst = std::max({worst, r.v_f, r.w_k, r.x_r});
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-8));
      });

  add("action.commutant_negative_control", 3, {"action", "acceptance"},
      "a coefficient function without the quasi-periodicity phase fails to commute with W_k",
      [](VerifyContext& c, const CheckSpec& s) {
        const auto T = corrupted_operator(c.element(22, 0), 1e-2, c.seed(22, 1));
        const auto r = commutant_residuals(T, probe_f, 1, 1, 10, c.seed(22, 2));
        return lower(s.name, s.paper_ref, r.w_k, c.tol(s.name, 1e-3));
      });

  add("action.fourier_quadrature", 4, {"action", "acceptance"}, "Fourier coefficients along the circle action",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        const int P = c.grid().p_max;
        for (int k = 0; k < 5; ++k) {
          const Element e = c.element(23, k);
          for (int n = -P; n <= P; ++n)
            worst = std::max(worst, (fourier_coeff_quadrature(e, n, 16) - fourier_coeff(e, n)).max_abs() / e.max_abs());
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-12));
      });

  add("action.cesaro_bound", 4, {"action", "acceptance"}, "Cesaro means approximate the element",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = -INFINITY;
        const int P = c.grid().p_max;
        for (int k = 0; k < 5; ++k) {
          const Element e = c.element(24, k);
          std::vector<double> slice_norm(2 * P + 1);
          for (int p = -P; p <= P; ++p) slice_norm[p + P] = op_norm(fourier_coeff(e, p));
          for (int N : {4, 8, 16, 32}) {
            double bound = 0.0;
            for (int p = -P; p <= P; ++p) bound += std::min(1.0, std::abs(p) / (N + 1.0)) * slice_norm[p + P];
            worst = std::max(worst, op_norm(cesaro(e, N) - e) - bound);
          }
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-12));
      });

  add("action.cesaro_rate", 4, {"action", "acceptance"}, "Cesaro error decays like 1/N",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = INFINITY;
        for (int k = 0; k < 5; ++k) {
          const Element e = c.element(25, k);
          std::vector<double> h, err;
          for (int N : {4, 8, 16, 32}) {
            h.push_back(1.0 / N);
            err.push_back(op_norm(cesaro(e, N) - e));
          }
          worst = std::min(worst, observed_order(h, err));
        }
        return lower(s.name, s.paper_ref, worst, c.tol(s.name, 0.9));
      });

  add("action.commutator_identity", 5, {"action", "acceptance", "invariant"},
      "gamma_t as a group commutator of the alpha and beta flows",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 10; ++n) {
          const Element e = c.element(26, n, 2.0);
          for (double t : {0.1, 0.5, 1.0}) {
            const double tp = std::sqrt(t / c.params().c);
            const Element rhs = beta(alpha(beta(alpha(e, tp), tp), -tp), -tp);
            worst = std::max(worst, op_norm(gamma(e, t) - rhs));
          }
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-8));
      });

  add("action.lipschitz_constant", 6, {"action", "acceptance", "invariant"},
      "alpha_r moves an element by at most r times the l1 norm of its x-derivative bounds",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = -INFINITY;
        const int P = c.grid().p_max;
        for (int n = 0; n < 10; ++n) {
          const Element e = c.element(27, n);
          const Element d = x_derivative(e);
          double f1 = 0.0;
          for (int p = -P; p <= P; ++p) f1 += d.slice_max_abs(p);
          for (int k : {1, 2, 4}) {
            const double r = k * c.grid().dx();
            worst = std::max(worst, op_norm(alpha(e, r) - e) - r * f1);
          }
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("action.one_parameter_groups", 0, {"action", "invariant"}, "alpha, beta, gamma are one-parameter groups",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(28, 0);
        double worst = 0.0;
        const double r = 0.37, r2 = -0.81;
        worst = std::max(worst, (alpha(alpha(e, r), r2) - alpha(e, r + r2)).max_abs());
        worst = std::max(worst, (beta(beta(e, r), r2) - beta(e, r + r2)).max_abs());
        worst = std::max(worst, (gamma(gamma(e, r), r2) - gamma(e, r + r2)).max_abs());
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("action.flows_isometric", 0, {"action", "invariant"}, "flows act by unitary conjugation",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(29, 0);
        const double n0 = op_norm(e), dx = c.grid().dx(), dy = c.grid().dy();
        double worst = 0.0;
        for (int k = 1; k <= 3; ++k) {
          worst = std::max(worst, std::abs(op_norm(alpha(e, k * dx)) - n0));
          worst = std::max(worst, std::abs(op_norm(beta(e, k * dy)) - n0));
          worst = std::max(worst, std::abs(op_norm(gamma(e, 0.7 * k)) - n0));
        }
        return upper(s.name, s.paper_ref, worst / n0, c.tol(s.name, 1e-9));
      });

  add("action.conjugation_consistency", 0, {"action", "invariant"}, "the flows are conjugation by U_(r,s,t)",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        const double dx = c.grid().dx(), dy = c.grid().dy();
        const std::vector<GroupPoint> pts = {{dx, 0, 0}, {-3 * dx, 0, 0}, {0, 2 * dy, 0}, {2 * dx, -dy, 0.4}};
        for (int n = 0; n < 5; ++n) {
          const Element e = c.element(30, n);
          const StateVector xi = random_state(c.params(), c.grid(), c.seed(31, n));
          for (const auto& g : pts) {
            const StateVector lhs = apply(act(e, g), xi);
            const StateVector rhs = unitary_L(apply(e, unitary_L_inverse(xi, g)), g);
            worst = std::max(worst, norm(lhs - rhs) / norm(lhs));
          }
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("action.fourier_cesaro_consistency", 0, {"action", "invariant"}, "a_n of a Cesaro mean is a weighted a_n",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(32, 0);
        double worst = 0.0;
        for (int N : {1, 2, 3, 4})
          for (int n = -std::min(N, c.grid().p_max); n <= std::min(N, c.grid().p_max); ++n)
            worst = std::max(worst, (fourier_coeff(cesaro(e, N), n) - fourier_coeff(e, n) * cd(1.0 - std::abs(n) / (N + 1.0))).max_abs());
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-14));
      });

  add("action.smoothing_covariance", 0, {"action", "invariant"}, "twisted convolution preserves quasi-periodicity",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(33, 0);
        std::mt19937_64 rng(c.seed(33, 1));
        std::uniform_real_distribution<double> ux(0.0, two_pi), uy(0.0, 1.0);
        std::uniform_int_distribution<int> up(-c.grid().p_max, c.grid().p_max);
        double worst = 0.0;
        for (int n = 0; n < 100; ++n) {
          const double x = ux(rng), y = uy(rng);
          const int p = up(rng);
          const cd base = twisted_smooth_at(e, 2, x, y, p);
          const cd wrapped = twisted_smooth_at(e, 2, x + two_pi, y, p);
          const cd expect = std::polar(1.0, two_pi * c.params().c * p * y) * base;
          worst = std::max(worst, std::abs(wrapped - expect) / std::max(std::abs(expect), 1e-12));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("action.smoothing_convergence", 0, {"action", "invariant"}, "smoothings approach the element as m grows",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(34, 0);
        std::vector<double> d;
        for (int m : {2, 4, 8}) d.push_back(op_norm(twisted_smooth(e, m) - e));
        const double worst = std::max(d[1] - d[0], d[2] - d[1]);
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 0.0));
      });

  // ---- metric
  add("metric.leibniz", 7, {"metric", "acceptance"}, "d is a derivation into the bimodule",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(40, 2 * n, 1.0, 2), b = c.element(40, 2 * n + 1, 1.0, 2);
          const CotangentPair lhs = dmap(star(a, b));
          const CotangentPair l = left_mul(a, dmap(b)), rr = right_mul(dmap(a), b);
          worst = std::max({worst, rel(lhs.first, l.first + rr.first), rel(lhs.second, l.second + rr.second)});
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-7));
      });

  add("metric.gamma_sqrt_bound", 8, {"metric", "acceptance", "thm19"},
      "gamma-modulus estimate for Lipschitz-normalized elements",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = INFINITY;
        const auto grid = default_t_grid();
        for (int n = 0; n < 30; ++n) {
          const Element e = c.element(41, n);
          const double L = lip_norm(e);
          const Element x = e * cd(1.0 / L);
          for (double t : grid) worst = std::min(worst, 4.0 * std::sqrt(t / c.params().c) - op_norm(gamma(x, t) - x));
        }
        return lower(s.name, s.paper_ref, worst, -c.tol(s.name, 1e-8));
      });

  add("metric.lip_vs_holder", 8, {"metric", "acceptance", "thm19"},
      "Lipschitz norm bounded by twice the (1,1,1/2) Holder norm",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = INFINITY;
        for (int n = 0; n < 30; ++n) worst = std::min(worst, comparability_check(c.element(41, n)).lip_margin);
        return lower(s.name, s.paper_ref, worst, -c.tol(s.name, 1e-8));
      });

  add("metric.derivation_covariance", 0, {"metric", "invariant"}, "derivations preserve quasi-periodicity",
      [](VerifyContext& c, const CheckSpec& s) {
        // delta2 on the translated domain, with the y-derivative of the phase
        // e^{2 pi i c p y} taken by the product rule, against phase * delta2.
        const Element e = c.element(42, 0);
        const Element d2 = delta2(e), ey = y_derivative(e);
        const Grid& g = c.grid();
        const double cc = c.params().c;
        double worst = 0.0, scale = d2.max_abs();
        std::mt19937_64 rng(c.seed(42, 1));
        std::uniform_int_distribution<int> ui(0, g.nx - 1), up(-g.p_max, g.p_max);
        std::uniform_real_distribution<double> uy(0.0, 1.0);
        for (int n = 0; n < 100; ++n) {
          // y_derivative(e) is not covariant, so x stays on the grid
          const double x = g.x(ui(rng)), y = uy(rng);
          const int p = up(rng);
          const cd ph = std::polar(1.0, two_pi * cc * p * y);
          const cd f = covariant_sample(e, x, y, p), fy = covariant_sample(ey, x, y, p);
          const cd translated = cd(0.0, p * cc * (x + two_pi)) * ph * f - ph * (cd(0.0, two_pi * cc * p) * f + fy);
          worst = std::max(worst, std::abs(translated - covariant_sample(d2, x + two_pi, y, p)) / scale);
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("metric.difference_quotient", 0, {"metric", "invariant"}, "delta1 is the generator of alpha",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(43, 0);
        const Element d1 = delta1(e);
        std::vector<double> h, err;
        for (double r : {1e-2, 1e-3, 1e-4}) {
          h.push_back(r);
          err.push_back(op_norm((alpha(e, r) - e) * cd(1.0 / r) - d1));
        }
        return lower(s.name, s.paper_ref, observed_order(h, err), c.tol(s.name, 1.0) - 0.05);
      });

  add("metric.smooth_part", 0, {"metric", "invariant"}, "central differences match the derivations to second order",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = cesaro(c.element(44, 0), 2);
        const Element d1 = delta1(e);
        std::vector<double> h, err;
        for (int k : {1, 2, 4}) {
          const double r = c.grid().dx() / (8.0 * k);
          h.push_back(r);
          err.push_back(op_norm((alpha(e, r) - alpha(e, -r)) * cd(1.0 / (2.0 * r)) - d1));
        }
        return lower(s.name, s.paper_ref, observed_order(h, err), c.tol(s.name, 1.8));
      });

  add("metric.mean_value_bound", 0, {"metric", "invariant"}, "alpha difference quotients bounded by ||delta1 x||",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = -INFINITY;
        for (int n = 0; n < 5; ++n) {
          const Element e = c.element(45, n);
          // sup of ||delta1 x|| over all fibers, not only grid fibers
          const Element d1 = delta1(e);
          double bound = 0.0;
          for (int k = 0; k < 32; ++k) bound = std::max(bound, op_norm(alpha(d1, k * c.grid().dx() / 32)));
          for (double r : default_t_grid()) worst = std::max(worst, op_norm(alpha(e, r) - e) / (r * bound) - 1.0);
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-3));
      });

  add("metric.holder_sampling_stability", 0, {"metric", "invariant"}, "sampled Holder seminorm is stable under refinement",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 3; ++n) {
          const Element e = c.element(46, n);
          const double coarse = holder_seminorm(e, 1, 1, 1).value;
          double gq = 0.0;
          for (double t : default_t_grid(96)) gq = std::max(gq, op_norm(e - gamma(e, t)) / t);
          const double fine = std::max({op_norm(delta1(e)), op_norm(delta2(e)), gq});
          worst = std::max(worst, std::abs(coarse - fine) / fine);
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 0.10));
      });

  add("metric.holder_monotonicity", 0, {"metric", "invariant"}, "smaller Holder exponents give comparable seminorms",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = -INFINITY;
        for (int n = 0; n < 3; ++n) {
          const Element e = c.element(47, n);
          const double big = holder_seminorm(e, 1.0, 1.0, 1.0).value;
          const double small = holder_seminorm(e, 0.5, 0.7, 0.5).value;
          worst = std::max(worst, small - std::max(big, 2.0 * op_norm(e)));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-12));
      });

  // ---- spectral
  add("spectral.trace_invariance", 9, {"spectral", "acceptance"}, "trace is invariant under the group action",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n)
          worst = std::max(worst, trace_invariance_check(c.element(50, n), random_group_points(c.seed(51, n), 5)));
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("spectral.traciality", 9, {"spectral", "acceptance"}, "tau(ab) = tau(ba)",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(52, 2 * n), b = c.element(52, 2 * n + 1);
          worst = std::max(worst, std::abs(trace(star(a, b)) - trace(star(b, a))));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("spectral.faithfulness", 9, {"spectral", "acceptance"}, "trace is faithful",
      [](VerifyContext& c, const CheckSpec& s) {
        double least = INFINITY;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(53, n);
          least = std::min(least, gns_inner(a, a).real());
        }
        CheckResult r = lower(s.name, s.paper_ref, least, c.tol(s.name, 0.0));
        r.pass = least > r.tolerance;
        return r;
      });

  add("spectral.gns_routes", 10, {"spectral", "acceptance"}, "GNS inner product by three routes",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const Element a = c.element(54, 2 * n), b = c.element(54, 2 * n + 1);
          const cd st = gns_inner(a, b), tr = gns_inner_trace(a, b), co = gns_inner_coefficients(a, b);
          worst = std::max({worst, std::abs(st - tr), std::abs(st - co), std::abs(tr - co)});
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("spectral.laplacian_routes", 11, {"spectral", "acceptance"}, "closed Laplacian formula equals delta1^2 + delta2^2",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
          const Element e = c.element(55, n);
          worst = std::max(worst, rel(laplacian(e), laplacian_composed(e)));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-8));
      });

  add("spectral.heat_semigroup", 12, {"spectral", "acceptance", "invariant"}, "heat operators form a semigroup",
      [](VerifyContext& c, const CheckSpec& s) {
        const HeatOperator& H = c.heat();
        double worst = 0.0;
        for (int n = 0; n < 5; ++n) {
          const Element e = c.element(56, n);
          for (auto [a, b] : {std::pair{0.1, 0.5}, std::pair{1.0, 0.3}, std::pair{0.05, 2.0}})
            worst = std::max(worst, rel(H.apply(H.apply(e, a), b), H.apply(e, a + b)));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-8));
      });

  add("spectral.heat_trace", 12, {"spectral", "acceptance"}, "heat semigroup preserves the trace",
      [](VerifyContext& c, const CheckSpec& s) {
        const HeatOperator& H = c.heat();
        double worst = 0.0;
        for (int n = 0; n < 5; ++n) {
          const Element e = c.element(57, n);
          for (double t : {0.1, 1.0, 10.0}) worst = std::max(worst, std::abs(trace(H.apply(e, t)) - trace(e)));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("spectral.heat_contraction", 12, {"spectral", "acceptance"}, "heat operators are contractions",
      [](VerifyContext& c, const CheckSpec& s) {
        const HeatOperator& H = c.heat();
        double worst = -INFINITY;
        for (int n = 0; n < 10; ++n) {
          const Element e = c.element(58, n);
          const double g0 = std::sqrt(gns_inner_coefficients(e, e).real()), n0 = op_norm(e);
          for (double t : {0.1, 1.0}) {
            const Element h = H.apply(e, t);
            worst = std::max({worst, std::sqrt(gns_inner_coefficients(h, h).real()) - g0, op_norm(h) - n0});
          }
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-6));
      });

  add("spectral.heat_positivity", 12, {"spectral", "acceptance"}, "heat operators are positive",
      [](VerifyContext& c, const CheckSpec& s) {
        const HeatOperator& H = c.heat();
        double least = INFINITY;
        for (int n = 0; n < 20; ++n)
          least = std::min(least, heat_positivity_probe(H, c.element(59, n, 1.0, c.grid().p_max / 2), {0.1, 1.0}).min_eigenvalue);
        return lower(s.name, s.paper_ref, least, -c.tol(s.name, 1e-6));
      });

  add("spectral.laplacian_spectrum", 12, {"spectral", "acceptance", "invariant"},
      "minus the Laplacian is positive with constants as the only kernel",
      [](VerifyContext& c, const CheckSpec& s) {
        const HeatOperator& H = c.heat();
        double least = INFINITY;
        bool kernel_ok = true;
        for (const auto& sl : H.summaries()) {
          least = std::min(least, sl.min_eigenvalue);
          kernel_ok = kernel_ok && sl.kernel_dim == (sl.p == 0 ? 1 : 0);
        }
        CheckResult r = lower(s.name, s.paper_ref, least, -c.tol(s.name, 1e-8));
        r.pass = r.pass && kernel_ok;
        return r;
      });

  add("spectral.laplacian_self_adjoint", 0, {"spectral", "invariant"}, "Laplacian is symmetric for the trace",
      [](VerifyContext& c, const CheckSpec& s) {
        double worst = 0.0;
        for (int n = 0; n < 5; ++n) {
          const Element a = c.element(60, 2 * n), b = c.element(60, 2 * n + 1);
          const cd l = gns_inner(laplacian(a), b), r = gns_inner(a, laplacian(b));
          worst = std::max(worst, std::abs(l - r) / std::max(std::abs(l), 1.0));
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-8));
      });

  add("spectral.laplacian_gamma_commute", 0, {"spectral", "invariant"}, "Laplacian commutes with gamma_t",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(61, 0);
        double worst = 0.0;
        for (double t : {0.3, 1.1, 2.5}) worst = std::max(worst, rel(laplacian(gamma(e, t)), gamma(laplacian(e), t)));
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-10));
      });

  add("spectral.heat_long_time", 0, {"spectral", "invariant"}, "heat flow relaxes the p = 0 slice to its mean",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element e = c.element(62, 0);
        const Element h = c.heat().apply(e, 100.0);
        const cd tau = trace(e);
        double worst = 0.0;
        for (const cd& v : h.slice(0)) worst = std::max(worst, std::abs(v - tau));
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-6));
      });

  // ---- classical
  add("classical.star_is_product", 13, {"classical", "acceptance"},
      "commutative star product is the pointwise product after Fourier transform in p",
      [](VerifyContext& c, const CheckSpec& s) {
        const ManifoldParams p0 = c.commutative();
        double worst = 0.0;
        RandomOptions o;
        o.support = c.grid().p_max / 2;
        for (int n = 0; n < 20; ++n) {
          const Element a = random_element(p0, c.grid(), c.seed(70, 2 * n), 1.0, o);
          const Element b = random_element(p0, c.grid(), c.seed(70, 2 * n + 1), 1.0, o);
          const auto fa = to_function(a), fb = to_function(b), fab = to_function(star(a, b));
          double num = 0.0, den = 0.0;
          for (std::size_t k = 0; k < fab.samples().size(); ++k) {
            const cd prod = fa.samples()[k] * fb.samples()[k];
            num = std::max(num, std::abs(fab.samples()[k] - prod));
            den = std::max(den, std::abs(prod));
          }
          worst = std::max(worst, num / den);
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 1e-9));
      });

  add("classical.distance_line", 13, {"classical", "acceptance"}, "horizontal segments are geodesics",
      [](VerifyContext& c, const CheckSpec& s) {
        DistanceOptions o;
        o.seed = c.seed(71, 0);
        const double d = cc_distance_upper({0, 0, 0}, {1, 0, 0}, o).upper_bound;
        return upper(s.name, s.paper_ref, std::abs(d - 1.0), c.tol(s.name, 1e-3));
      });

  add("classical.distance_dido", 13, {"classical", "acceptance"}, "vertical distance from the isoperimetric problem",
      [](VerifyContext& c, const CheckSpec& s) {
        DistanceOptions o;
        o.seed = c.seed(72, 0);
        const double d = cc_distance_upper({0, 0, 0}, {0, 0, 0.1}, o).upper_bound;
        const double exact = 2.0 * std::sqrt(std::numbers::pi * 0.1);
        return upper(s.name, s.paper_ref, std::abs(d - exact) / exact, c.tol(s.name, 0.05));
      });

  add("classical.sqrt_z_comparability", 13, {"classical", "acceptance", "invariant"},
      "vertical distance comparable to the square root of z",
      [](VerifyContext& c, const CheckSpec& s) {
        double lo = INFINITY, hi = 0.0;
        for (double z : {0.025, 0.05, 0.1, 0.2}) {
          DistanceOptions o;
          o.seed = c.seed(73, static_cast<std::uint64_t>(z * 1000));
          const double q = cc_distance_upper({0, 0, 0}, {0, 0, z}, o).upper_bound / std::sqrt(z);
          lo = std::min(lo, q);
          hi = std::max(hi, q);
        }
        return upper(s.name, s.paper_ref, hi / lo - 1.0, c.tol(s.name, 0.10));
      });

  add("classical.lipschitz_sin_y", 13, {"classical", "acceptance"}, "Lipschitz number bounded by the horizontal gradient",
      [](VerifyContext& c, const CheckSpec& s) {
        ChartFunction F{[](double, double y, double) { return std::sin(y); }, [](double, double, double) { return 0.0; },
                        [](double, double y, double) { return std::cos(y); }};
        DistanceOptions o;
        o.seed = c.seed(74, 0);
        const auto rep = lipschitz_check(F, 9, c.seed(74, 1), 0.02, o);
        CheckResult r = upper(s.name, s.paper_ref, rep.max_ratio, rep.gradient_sup * 1.02);
        r.pass = rep.pass;
        return r;
      });

  add("classical.lipschitz_sin_x", 13, {"classical", "acceptance"}, "Lipschitz number bounded by the horizontal gradient",
      [](VerifyContext& c, const CheckSpec& s) {
        ChartFunction F{[](double x, double, double) { return std::sin(x); },
                        [](double x, double, double) { return std::cos(x); }, [](double, double, double) { return 0.0; }};
        DistanceOptions o;
        o.seed = c.seed(75, 0);
        const auto rep = lipschitz_check(F, 9, c.seed(75, 1), 0.02, o);
        CheckResult r = upper(s.name, s.paper_ref, rep.max_ratio, rep.gradient_sup * 1.02);
        r.pass = rep.pass;
        return r;
      });

  add("classical.triangle_inequality", 0, {"classical", "invariant"}, "distance bounds obey the triangle inequality",
      [](VerifyContext& c, const CheckSpec& s) {
        std::mt19937_64 rng(c.seed(76, 0));
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        double worst = -INFINITY;
        DistanceOptions o;
        o.seed = c.seed(76, 1);
        for (int n = 0; n < 2; ++n) {
          const HPoint a{u(rng), u(rng), 0.2 * u(rng)}, b{u(rng), u(rng), 0.2 * u(rng)}, d{u(rng), u(rng), 0.2 * u(rng)};
          const double ab = cc_distance_upper(a, b, o).upper_bound, bd = cc_distance_upper(b, d, o).upper_bound,
                       ad = cc_distance_upper(a, d, o).upper_bound;
          worst = std::max(worst, ad / (ab + bd) - 1.0);
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 0.02));
      });

  add("classical.projection_bound", 0, {"classical", "invariant"}, "distance at least the planar displacement",
      [](VerifyContext& c, const CheckSpec& s) {
        std::mt19937_64 rng(c.seed(77, 0));
        std::uniform_real_distribution<double> u(-0.7, 0.7);
        double worst = -INFINITY;
        DistanceOptions o;
        o.seed = c.seed(77, 1);
        for (int n = 0; n < 4; ++n) {
          const HPoint a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
          worst = std::max(worst, std::hypot(b[0] - a[0], b[1] - a[1]) - cc_distance_upper(a, b, o).upper_bound);
        }
        return upper(s.name, s.paper_ref, worst, c.tol(s.name, 0.0));
      });

  add("classical.right_invariance", 0, {"classical", "invariant"}, "distance is right-invariant",
      [](VerifyContext& c, const CheckSpec& s) {
        DistanceOptions o;
        o.seed = c.seed(78, 0);
        const HPoint a{0, 0, 0}, b{0.4, 0.3, 0.2}, g{0.3, -0.2, 0.5};
        const double d1 = cc_distance_upper(a, b, o).upper_bound;
        const double d2 = cc_distance_upper(group_mul(a, g), group_mul(b, g), o).upper_bound;
        return upper(s.name, s.paper_ref, std::abs(d1 - d2) / d1, c.tol(s.name, 0.01));
      });

  add("classical.refinement_monotone", 0, {"classical", "invariant"}, "refining the control grid never lengthens the bound",
      [](VerifyContext& c, const CheckSpec& s) {
        DistanceOptions o;
        o.seed = c.seed(79, 0);
        o.n_segments = 16;
        const HPoint a{0, 0, 0}, b{0.3, 0.2, 0.1};
        const auto coarse = cc_distance_upper(a, b, o);
        o.n_segments = 32;
        const auto fine = refine(coarse, a, b, o);
        return upper(s.name, s.paper_ref, fine.upper_bound - coarse.upper_bound, c.tol(s.name, 1e-6));
      });

  add("classical.gluing", 0, {"classical", "invariant"}, "function chart glues across the x period",
      [](VerifyContext& c, const CheckSpec& s) {
        const Element a = random_element(c.commutative(), c.grid(), c.seed(80, 0), 1.0);
        return upper(s.name, s.paper_ref, gluing_residual(to_function(a), 100, c.seed(80, 1)), c.tol(s.name, 1e-9));
      });

  return r;
}

inline bool matches(const CheckSpec& s, const std::string& filter) {
  if (filter.empty()) return true;
  if (s.name.find(filter) != std::string::npos) return true;
  return std::find(s.tags.begin(), s.tags.end(), filter) != s.tags.end();
}

/// Runs every registered check whose name contains `filter` or that carries it as a tag.
inline std::vector<CheckResult> run_checks(const VerifyConfig& cfg, const std::string& filter = "") {
  VerifyContext ctx(cfg);
  std::vector<CheckResult> out;
  for (const auto& entry : registry())
    if (matches(entry, filter)) out.push_back(entry.run(ctx, entry));
  return out;
}

}  // namespace qhm
