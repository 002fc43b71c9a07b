#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qhm/metric.hpp"

using namespace qhm;

namespace {

const ManifoldParams kDesk = ManifoldParams::desk();
const Grid kGrid = Grid::desk();

Element rnd(std::uint64_t seed, double decay = 1.0, int support = -1) {
  RandomOptions o;
  o.support = support;
  return random_element(kDesk, kGrid, seed, decay, o);
}

double rel(const Element& a, const Element& b) { return (a - b).max_abs() / std::max(a.max_abs(), b.max_abs()); }

}  // namespace

TEST(Derivations, MatchAnalyticThetaSection) {
  for (int p : {-2, 1, 3}) {
    oracle::Theta th;
    th.p = p;
    th.var = 2.5;
    const Element e = slice_field(kDesk, kGrid, p, [&](double x, double y) { return th.value(x, y); });
    const Element d1 = delta1(e), d2 = delta2(e);
    double w1 = 0.0, w2 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < kGrid.nx; ++i)
      for (int j = 0; j < kGrid.ny; ++j) {
        const double x = kGrid.x(i), y = kGrid.y(j);
        const cd e1 = -th.dx(x, y);
        const cd e2 = cd(0.0, p * kDesk.c * x) * th.value(x, y) - th.dy(x, y);
        w1 = std::max(w1, std::abs(d1.at(p, i, j) - e1));
        w2 = std::max(w2, std::abs(d2.at(p, i, j) - e2));
        s1 = std::max(s1, std::abs(e1));
        s2 = std::max(s2, std::abs(e2));
      }
    EXPECT_LT(w1 / s1, 1e-6) << "p = " << p;
    EXPECT_LT(w2 / s2, 1e-6) << "p = " << p;
  }
}

TEST(Derivations, KillTheIdentity) {
  const Element one = identity_element(kDesk, kGrid);
  EXPECT_LT(delta1(one).max_abs(), 1e-14);
  EXPECT_LT(delta2(one).max_abs(), 1e-13);  // FFT roundoff scaled by the top wavenumber
  EXPECT_NEAR(lip_norm(one), 1.0, 1e-12);
}

TEST(Derivations, Leibniz) {
  const Element a = rnd(1, 1.0, 2), b = rnd(2, 1.0, 2);
  const CotangentPair lhs = dmap(star(a, b));
  const CotangentPair l = left_mul(a, dmap(b)), r = right_mul(dmap(a), b);
  EXPECT_LT(rel(lhs.first, l.first + r.first), 1e-7);
  EXPECT_LT(rel(lhs.second, l.second + r.second), 1e-7);
}

TEST(Derivations, CommuteWithGamma) {
  const Element e = rnd(3);
  EXPECT_LT(rel(delta1(gamma(e, 0.9)), gamma(delta1(e), 0.9)), 1e-14);
  EXPECT_LT(rel(delta2(gamma(e, 0.9)), gamma(delta2(e), 0.9)), 1e-14);
}

TEST(ModuleNorms, CommutativeSliceOracle) {
  // On p = 0 trig polynomials the fibers are diagonal, so both norms are sup |grad f|.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<std::array<double, 4>> terms;
  for (int m = -2; m <= 2; ++m)
    for (int n = -2; n <= 2; ++n) terms.push_back({double(m), double(n), nd(rng), nd(rng)});
  auto f = [&](double x, double y) {
    cd acc = 0.0;
    for (const auto& t : terms) acc += cd(t[2], t[3]) * std::polar(1.0, t[0] * x + two_pi * t[1] * y);
    return acc;
  };
  const Element e = slice_field(kDesk, kGrid, 0, f);
  double expect = 0.0;
  for (int i = 0; i < kGrid.nx; ++i)
    for (int j = 0; j < kGrid.ny; ++j) {
      cd fx = 0.0, fy = 0.0;
      for (const auto& t : terms) {
        const cd z = cd(t[2], t[3]) * std::polar(1.0, t[0] * kGrid.x(i) + two_pi * t[1] * kGrid.y(j));
        fx += cd(0.0, t[0]) * z;
        fy += cd(0.0, two_pi * t[1]) * z;
      }
      expect = std::max(expect, std::sqrt(std::norm(fx) + std::norm(fy)));
    }
  const ModuleNorms m = module_norms(dmap(e));
  EXPECT_NEAR(m.l, expect, 1e-9 * expect);
  EXPECT_NEAR(m.r, expect, 1e-9 * expect);
}

TEST(ModuleNorms, BoundedByComponentNorms) {
  const Element e = rnd(5);
  const CotangentPair w = dmap(e);
  const ModuleNorms m = module_norms(w);
  const double a = op_norm(w.first), b = op_norm(w.second);
  EXPECT_GE(m.l, std::max(a, b) - 1e-9);
  EXPECT_LE(m.l, std::hypot(a, b) + 1e-9);
  EXPECT_GE(m.r, std::max(a, b) - 1e-9);
  EXPECT_LE(m.r, std::hypot(a, b) + 1e-9);
  EXPECT_GE(lip_norm(e), op_norm(e));
}

TEST(Holder, ValidatesExponentsAndGrid) {
  const Element e = rnd(6);
  EXPECT_THROW(holder_seminorm(e, 0.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(holder_seminorm(e, 1.0, 1.5, 1.0), InvalidArgument);
  EXPECT_THROW(holder_seminorm(e, 1.0, 1.0, 1.0, {}), InvalidArgument);
  EXPECT_THROW(holder_seminorm(e, 1.0, 1.0, 1.0, {0.1, -1.0}), InvalidArgument);
}

TEST(Holder, GammaQuotientOfSingleSliceIsExplicit) {
  // For a single slice p, ||x - gamma_t x|| = |1 - e^{ipt}| ||x||.
  const Element a = rnd(7);
  const Element s = fourier_coeff(a, 2);
  const std::vector<double> ts = {0.5};
  const SeminormReport r = holder_seminorm(s, 1.0, 1.0, 1.0, ts);
  EXPECT_GE(r.value, std::abs(1.0 - std::polar(1.0, 2 * 0.5)) / 0.5 * op_norm(s) - 1e-9);
  EXPECT_EQ(r.samples, ts);
}

TEST(Theorem19, HoldsAndRejectsZero) {
  const ComparabilityReport r = comparability_check(rnd(8));
  EXPECT_TRUE(r.pass(1e-8));
  EXPECT_GT(r.lip, 0.0);
  EXPECT_THROW(comparability_check(Element(kDesk, kGrid)), InvalidArgument);
}
