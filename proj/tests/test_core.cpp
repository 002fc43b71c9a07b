#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qhm/core.hpp"

using namespace qhm;

namespace {

const ManifoldParams kDesk = ManifoldParams::desk();
const Grid kGrid = Grid::desk();

Element theta_element(const oracle::Theta& th) {
  return slice_field(kDesk, kGrid, th.p, [&](double x, double y) { return th.value(x, y); });
}

}  // namespace

TEST(Params, RejectsBadValues) {
  ManifoldParams p = kDesk;
  p.c = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = kDesk;
  p.mu = std::nan("");
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_NO_THROW(kDesk.validate());
  EXPECT_DOUBLE_EQ(kDesk.step_x(), kGrid.dx());
  EXPECT_DOUBLE_EQ(kDesk.step_y(), kGrid.dy());
}

TEST(Grid, RejectsOddOrTiny) {
  EXPECT_THROW((Grid{15, 16, 4}.validate()), InvalidArgument);
  EXPECT_THROW((Grid{2, 16, 4}.validate()), InvalidArgument);
  EXPECT_THROW((Grid{16, 16, -1}.validate()), InvalidArgument);
  EXPECT_EQ(kGrid.size(), 16u * 16u * 9u);
  EXPECT_EQ(kGrid.index(-4, 0, 0), 0u);
  EXPECT_EQ(kGrid.index(1, 2, 3), ((1 + 4) * 16u + 2) * 16u + 3);
}

TEST(Field, RejectsWrongSizeAndNonFinite) {
  EXPECT_THROW(Element(kDesk, kGrid, std::vector<cd>(10)), InvalidArgument);
  std::vector<cd> data(kGrid.size());
  data[5] = cd(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_THROW(Element(kDesk, kGrid, data), InvalidArgument);
}

TEST(Field, MismatchedOperandsThrow) {
  ManifoldParams other = kDesk;
  other.hbar = 0.5;
  Element a(kDesk, kGrid), b(other, kGrid);
  EXPECT_THROW(a + b, Mismatch);
  EXPECT_THROW(inner(a, b), Mismatch);
}

TEST(Helpers, FloorDivAndWrap) {
  EXPECT_EQ(floor_div(-1, 16), -1);
  EXPECT_EQ(floor_div(16, 16), 1);
  EXPECT_EQ(floor_div(-16, 16), -1);
  EXPECT_EQ(wrap_index(-1, 16), 15);
  EXPECT_EQ(wrap_index(33, 16), 1);
}

TEST(SpectralAxis, ForwardMatchesDirectDft) {
  const int n = 12;
  SpectralAxis ax(n, 2.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<cd> v(n);
  for (auto& z : v) z = cd(nd(rng), nd(rng));
  const auto c = ax.forward(v);
  for (int k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (int j = 0; j < n; ++j) acc += v[j] * std::polar(1.0, -2.0 * oracle::pi * j * k / n);
    EXPECT_NEAR(std::abs(c[k] - acc / double(n)), 0.0, 1e-13);
  }
  const auto back = ax.inverse(c);
  for (int j = 0; j < n; ++j) EXPECT_NEAR(std::abs(back[j] - v[j]), 0.0, 1e-13);
}

TEST(SpectralAxis, DerivativeAndEvaluateOfTrigPolynomial) {
  const int n = 16;
  SpectralAxis ax(n, two_pi);
  std::vector<cd> v(n);
  for (int j = 0; j < n; ++j) v[j] = std::sin(3.0 * two_pi * j / n) + cd(0, 1) * std::cos(2.0 * two_pi * j / n);
  const auto d = ax.derivative(v, 1);
  for (int j = 0; j < n; ++j) {
    const double x = two_pi * j / n;
    EXPECT_NEAR(std::abs(d[j] - (3.0 * std::cos(3 * x) - cd(0, 2) * std::sin(2 * x))), 0.0, 1e-12);
  }
  const double s = 0.4321;
  EXPECT_NEAR(std::abs(ax.evaluate(ax.forward(v), s) - (std::sin(3 * s) + cd(0, 1) * std::cos(2 * s))), 0.0, 1e-13);
}

TEST(Inner, IdentityHasUnitNorm) {
  const Element one = identity_element(kDesk, kGrid);
  EXPECT_NEAR(std::abs(inner(one, one) - cd(1.0)), 0.0, 1e-14);
  EXPECT_NEAR(norm(one), 1.0, 1e-14);
}

TEST(CovariantSample, MatchesAnalyticThetaSection) {
  for (int p : {-3, 1, 2, 4}) {
    oracle::Theta th;
    th.p = p;
    th.var = 2.5;
    const Element e = theta_element(th);
    std::mt19937_64 rng(p + 10);
    std::uniform_real_distribution<double> ux(-6.0, 12.0), uy(-1.0, 2.0);
    double worst = 0.0;
    for (int n = 0; n < 40; ++n) {
      const double x = ux(rng), y = uy(rng);
      worst = std::max(worst, std::abs(covariant_sample(e, x, y, p) - th.value(x, y)));
    }
    EXPECT_LT(worst, 1e-6) << "p = " << p;
  }
}

TEST(CovariantSample, WrapRuleIsExactOnGrid) {
  const Element e = random_element(kDesk, kGrid, 5, 1.0);
  for (int p = -4; p <= 4; ++p)
    for (int k : {-2, -1, 1, 3})
      for (int j = 0; j < kGrid.ny; j += 5) {
        const double y = kGrid.y(j);
        const cd expect = std::polar(1.0, two_pi * k * p * y) * e.at(p, 3, j);
        EXPECT_NEAR(std::abs(covariant_sample(e, kGrid.x(3) + two_pi * k, y, p) - expect), 0.0, 1e-12);
      }
}

TEST(CovariantSample, OutsideBandIsZero) {
  const Element e = random_element(kDesk, kGrid, 5, 1.0);
  EXPECT_EQ(covariant_sample(e, 0.3, 0.2, 7), cd(0.0));
  EXPECT_THROW(covariant_sample(e, std::nan(""), 0.2, 0), InvalidArgument);
}

TEST(Shift, CommensurateShiftIsIndexArithmetic) {
  const Element e = random_element(kDesk, kGrid, 9, 1.0);
  for (int m : {1, -3, 17}) {
    const Element s = shift_x(e, m * kGrid.dx());
    for (int p = -4; p <= 4; ++p)
      for (int i = 0; i < kGrid.nx; ++i)
        for (int j = 0; j < kGrid.ny; ++j)
          ASSERT_NEAR(std::abs(s.at(p, i, j) - oracle::grid_value(e, p, i - m, j)), 0.0, 1e-13);
  }
}

TEST(Shift, GenericShiftMatchesAnalytic) {
  oracle::Theta th;
  th.p = 2;
  th.var = 2.5;
  const Element e = theta_element(th);
  for (double r : {0.123, -1.7, 4.0}) {
    const Element s = shift_y(shift_x(e, r), 0.31);
    double worst = 0.0;
    for (int i = 0; i < kGrid.nx; ++i)
      for (int j = 0; j < kGrid.ny; ++j)
        worst = std::max(worst, std::abs(s.at(2, i, j) - th.value(kGrid.x(i) - r, kGrid.y(j) - 0.31)));
    EXPECT_LT(worst, 1e-6) << "r = " << r;
  }
}

TEST(Shift, RoundTrip) {
  const Element e = random_element(kDesk, kGrid, 2, 1.0);
  for (double r : {0.37, -2.2}) {
    EXPECT_LT((shift_x(shift_x(e, r), -r) - e).max_abs(), 1e-12);
    EXPECT_LT((shift_y(shift_y(e, r), -r) - e).max_abs(), 1e-12);
  }
}

TEST(Random, DeterministicSupportAndScale) {
  const Element a = random_element(kDesk, kGrid, 42, 1.5);
  const Element b = random_element(kDesk, kGrid, 42, 1.5);
  const Element c = random_element(kDesk, kGrid, 43, 1.5);
  EXPECT_EQ(a.data(), b.data());
  EXPECT_GT((a - c).max_abs(), 0.1);
  for (int p = -4; p <= 4; ++p) EXPECT_NEAR(a.slice_max_abs(p), std::exp(-1.5 * std::abs(p)), 1e-12);

  RandomOptions o;
  o.support = 2;
  const Element s = random_element(kDesk, kGrid, 7, 1.0, o);
  EXPECT_EQ(s.slice_max_abs(3), 0.0);
  EXPECT_EQ(s.slice_max_abs(-4), 0.0);
  EXPECT_GT(s.slice_max_abs(2), 0.0);
  EXPECT_THROW(random_element(kDesk, kGrid, 1, 0.0), InvalidArgument);
}

TEST(CovariantSample, WrapRuleHoldsOffGrid) {
  const Element e = random_element(kDesk, kGrid, 11, 1.0);
  for (int p : {-4, -1, 0, 3}) {
    const double y = 0.37;
    const cd mid = covariant_sample(e, 1.0 + two_pi, y, p);
    EXPECT_NEAR(std::abs(mid - std::polar(1.0, two_pi * p * y) * covariant_sample(e, 1.0, y, p)), 0.0, 1e-12);
  }
}

TEST(StateTwist, IncludesMomentumSquaredTerm) {
  const StateVector xi(kDesk, kGrid);
  EXPECT_DOUBLE_EQ(xi.twist(2, 0.25), 1.0 * (2 * 0.25 + kDesk.hbar * kDesk.nu * 4));
  const Element e(kDesk, kGrid);
  EXPECT_DOUBLE_EQ(e.twist(2, 0.25), 0.5);
}
